import json

import pytest

from perspact.agents import Done, ParsedDecision, PlanFollower, RuleDirector
from perspact.harness import (
    STEP_FIELDS,
    TRAILER_FIELDS,
    RunConfig,
    read_records,
    record_lines,
    run_suite,
    run_trial,
    suite_plan,
    trial_seed,
    write_records,
)
from perspact.llm import FunctionTransport
from perspact.scenarios import FAMILIES, Family, reference_instance
from perspact.world import Take


def _check_record_invariants(rec, cap=15):
    assert rec.steps <= cap
    assert rec.steps == rec.asks + rec.moves + rec.opens + rec.takes + rec.rejected
    assert rec.steps == len(rec.entries)
    if rec.success:
        assert rec.entries[-1].event == "took-correct"
    assert (rec.first_take_correct is None) == (rec.takes == 0)


def test_plan_follower_near_counts():
    inst = reference_instance(Family.NEAR)
    rec = run_trial(RunConfig(policy="plan-follower"), inst, PlanFollower(inst), RuleDirector())
    assert rec.success and (rec.steps, rec.asks, rec.moves) == (2, 0, 1)
    _check_record_invariants(rec)


def test_greedy_notthat_first_take_wrong():
    (rec,) = run_suite(RunConfig(families=("NotThat",), trials=1))
    assert rec.first_take_correct is False and rec.success


def test_step_cap_one():
    inst = reference_instance(Family.FAR)
    rec = run_trial(RunConfig(policy="plan-follower", max_steps=1), inst, PlanFollower(inst), RuleDirector())
    assert not rec.success and rec.steps == 1 and rec.asks == 1
    _check_record_invariants(rec, cap=1)


def test_ask_answer_is_logged():
    inst = reference_instance(Family.PERSP)
    rec = run_trial(RunConfig(policy="plan-follower"), inst, PlanFollower(inst), RuleDirector())
    assert rec.entries[0].event == "asked"
    assert rec.entries[0].answer == "I mean the red tie. It is in the bedroom."


def test_done_counts_as_rejected_step():
    class QuitsEarly:
        name = "quitter"

        def next_action(self, context, observation):
            return ParsedDecision(Done() if not context.actions else Take("tie_red"))

    inst = reference_instance(Family.BASE)
    rec = run_trial(RunConfig(), inst, QuitsEarly(), RuleDirector())
    assert rec.entries[0].event == "rejected" and rec.entries[0].reason == "done before success"
    assert rec.success and rec.steps == 2 and rec.rejected == 1


def test_on_step_hook_sees_transitions():
    seen = []
    inst = reference_instance(Family.HIDDEN)
    run_trial(RunConfig(), inst, PlanFollower(inst), RuleDirector(), on_step=lambda s, a, e, n: seen.append((str(a), e)))
    assert seen == [("move(kitchen)", "moved"), ("take(tie_red)", "took-correct")]


# -- suites -------------------------------------------------------------------------------


def test_suite_cardinality_and_filter():
    assert len(run_suite(RunConfig())) == 35
    recs = run_suite(RunConfig(families=("Far",)))
    assert len(recs) == 5 and {r.family for r in recs} == {Family.FAR}


def test_seed_splitting_rule():
    config = RunConfig(seed=100)
    assert trial_seed(config, Family.FAR, 2) == 100 + 3 * 1000 + 2
    jobs = suite_plan(RunConfig(families=("Near",), trials=2, seed=5, source="generated"))
    assert [inst.seed for _, inst in jobs] == [4005, 4006]
    assert [trial for trial, _ in jobs] == ["Near-0", "Near-1"]


def test_generated_suite_runs_within_cap():
    recs = run_suite(RunConfig(source="generated", trials=3, seed=11))
    assert len(recs) == 21
    for rec in recs:
        _check_record_invariants(rec)


def test_parallel_matches_serial(tmp_path):
    serial = run_suite(RunConfig(source="generated", trials=2))
    parallel = run_suite(RunConfig(source="generated", trials=2, parallel=4))
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_records(serial, a)
    write_records(parallel, b)
    assert a.read_bytes() == b.read_bytes()


def test_single_crash_does_not_abort_suite():
    def explode(exchange):
        raise RuntimeError("socket on fire")

    recs = run_suite(RunConfig(families=("Base", "Far"), trials=1, policy="single-shot"), transport=FunctionTransport(explode))
    assert len(recs) == 2
    assert all(r.failure and "socket on fire" in r.failure for r in recs)


# -- logs -----------------------------------------------------------------------------------


def test_log_schema_is_fixed(tmp_path):
    recs = run_suite(RunConfig(families=("Far",), trials=1))
    lines = [json.loads(l) for l in record_lines(recs[0])]
    assert [tuple(l) for l in lines[:-1]] == [STEP_FIELDS] * (len(lines) - 1)
    assert tuple(lines[-1]) == TRAILER_FIELDS
    assert STEP_FIELDS == ("kind", "trial", "step", "action", "event", "reason", "answer", "obs_hash")
    assert TRAILER_FIELDS == (
        "kind", "trial", "family", "seed", "policy", "director", "success", "first_take_correct",
        "steps", "asks", "moves", "opens", "takes", "rejected", "failure", "transcript",
    )  # fmt: skip
    assert all(len(l["obs_hash"]) == 16 for l in lines[:-1])


def test_timing_is_opt_in():
    (rec,) = run_suite(RunConfig(families=("Base",), trials=1))
    assert "wall_time_s" not in json.loads(record_lines(rec)[-1])
    assert "wall_time_s" in json.loads(record_lines(rec, timing=True)[-1])


def test_records_round_trip(tmp_path):
    recs = run_suite(RunConfig(trials=2))
    path = write_records(recs, tmp_path / "deep" / "trials.jsonl")
    again = read_records(path)
    for a, b in zip(recs, again):
        b.wall_time_s = a.wall_time_s
        assert a == b


def test_read_rejects_unknown_line_kind(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"kind": "mystery"}\n')
    with pytest.raises(ValueError, match="unknown line kind"):
        read_records(path)


def test_scripted_logs_are_byte_identical(tmp_path):
    a = write_records(run_suite(RunConfig()), tmp_path / "a.jsonl")
    b = write_records(run_suite(RunConfig()), tmp_path / "b.jsonl")
    assert a.read_bytes() == b.read_bytes()


# -- config --------------------------------------------------------------------------------


def test_config_defaults():
    c = RunConfig()
    assert (c.trials, c.max_steps, c.families) == (5, 15, FAMILIES)
    assert c.endpoint.temperature == 0.0


@pytest.mark.parametrize(
    "kwargs, needle",
    [
        ({"trials": 0}, "trials"),
        ({"max_steps": 0}, "max_steps"),
        ({"policy": "telepathy"}, "unknown policy"),
        ({"director": "oracle"}, "unknown director"),
        ({"source": "dreams"}, "scenario source"),
        ({"parallel": 0}, "parallel"),
        ({"families": ("Sideways",)}, "unknown scenario family"),
    ],
)
def test_config_validation(kwargs, needle):
    with pytest.raises(ValueError, match=needle):
        RunConfig(**kwargs)


def test_config_from_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"families": ["Far", "Near"], "trials": 2, "endpoint": {"model": "m-x", "temperature": 0.2}}))
    c = RunConfig.load(path)
    assert c.families == (Family.FAR, Family.NEAR)
    assert c.endpoint.settings.model == "m-x" and c.endpoint.settings.temperature == 0.2
    path.write_text(json.dumps({"trails": 2}))
    with pytest.raises(ValueError, match="unknown config keys: trails"):
        RunConfig.load(path)
