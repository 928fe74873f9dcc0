import pytest

from perspact.agents import (
    Done,
    GreedyLiteral,
    ModelDirector,
    ParseError,
    PlanFollower,
    ProtocolFailure,
    ReActMatcher,
    RuleDirector,
    SingleShotMatcher,
    TrialContext,
    make_director,
    make_matcher,
    parse_agent_output,
)
from perspact.harness import RunConfig, run_trial
from perspact.llm import FunctionTransport
from perspact.scenarios import FAMILIES, Family, reference_instance
from perspact.vocab import MATCHER
from perspact.world import Ask, Move, Open, Take, init_world, render_observation, visible_set


def fresh_context(inst) -> TrialContext:
    ctx = TrialContext(instruction=f"Bring me {inst.instruction.phrasing}.")
    s = init_world(inst)
    ctx.observe(render_observation(s, MATCHER), visible_set(s, MATCHER))
    return ctx


def scripted(replies):
    queue = list(replies)
    calls = []

    def respond(exchange):
        calls.append(exchange)
        return queue.pop(0)

    return FunctionTransport(respond), calls


# -- parsing --------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "text, action",
    [
        ("move(kitchen)", Move("kitchen")),
        ("  MOVE( Kitchen ) ", Move("kitchen")),
        ("open(basket).", Open("basket")),
        ("Action: take(tie_red)", Take("tie_red")),
        ('ask("Which tie do you mean?")', Ask("Which tie do you mean?")),
        ("done", Done()),
    ],
)
def test_parse_single_line(text, action):
    assert parse_agent_output(text).action == action


def test_parse_takes_last_action_line_and_keeps_thought():
    d = parse_agent_output("Thought: the red one is here.\nmove(hallway)\nActually no.\ntake(tie_red)")
    assert d.action == Take("tie_red")
    assert d.thought.startswith("the red one is here.")


@pytest.mark.parametrize("text", ["", "I will take the tie.", 'ask("")', "take()", "fly(kitchen)"])
def test_parse_rejects_garbage(text):
    with pytest.raises(ParseError):
        parse_agent_output(text)


# -- scripted matchers ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "family, first",
    [
        (Family.BASE, Take("tie_red")),
        (Family.FAR, Take("tie_blue")),
        (Family.NOTTHAT, Take("tie_blue")),
        (Family.DISTRACTOR, Move("kitchen")),
        (Family.HIDDEN, Move("hallway")),
        (Family.NEAR, Move("hallway")),
    ],
)
def test_greedy_first_action(family, first):
    inst = reference_instance(family)
    assert GreedyLiteral(inst).next_action(fresh_context(inst), "").action == first


def test_greedy_never_retries_refused_object():
    inst = reference_instance(Family.NOTTHAT)
    ctx = fresh_context(inst)
    ctx.record(Take("tie_blue"), "took-incorrect")
    ctx.observe(ctx.observations[-1], ctx.views[-1])
    assert GreedyLiteral(inst).next_action(ctx, "").action == Take("tie_red")


def test_plan_follower_replays_then_says_done():
    inst = reference_instance(Family.FAR)
    policy = PlanFollower(inst)
    ctx = fresh_context(inst)
    seen = []
    for _ in range(4):
        a = policy.next_action(ctx, "").action
        seen.append(a)
        ctx.record(a, "ok")
    assert seen == [Ask(), Move("hallway"), Take("tie_red"), Done()]


# -- model-backed matchers ----------------------------------------------------------------------


def test_single_shot_reprompts_as_user_message():
    inst = reference_instance(Family.BASE)
    transport, calls = scripted(["I would take the tie.", "take(tie_red)"])
    m = SingleShotMatcher(inst, transport)
    assert m.next_action(fresh_context(inst), "").action == Take("tie_red")
    assert m.calls == 2
    second = calls[1].messages
    assert second[-2] == ("assistant", "I would take the tie.")
    assert second[-1][0] == "user" and "did not end with a valid action line" in second[-1][1]


def test_single_shot_protocol_failure_after_retries():
    inst = reference_instance(Family.BASE)
    transport, _ = scripted(["nope"] * 4)
    with pytest.raises(ProtocolFailure):
        SingleShotMatcher(inst, transport, max_reprompts=3).next_action(fresh_context(inst), "")


def test_react_collects_thoughts():
    inst = reference_instance(Family.BASE)
    transport, calls = scripted(["Thought: a red tie is here.", "Thought: it matches.", "take(tie_red)"])
    m = ReActMatcher(inst, transport)
    d = m.next_action(fresh_context(inst), "")
    assert d.action == Take("tie_red")
    assert d.thought == "a red tie is here.\nit matches."
    assert m.inner_iterations == [3]
    assert calls[1].messages[-2] == ("assistant", "Thought: a red tie is here.")


def test_react_inner_iteration_cap():
    inst = reference_instance(Family.BASE)
    transport, _ = scripted(["Thought: hmm."] * 5)
    with pytest.raises(ProtocolFailure, match="inner iterations"):
        ReActMatcher(inst, transport).next_action(fresh_context(inst), "")


def test_react_garbage_counts_against_reprompts_only():
    inst = reference_instance(Family.BASE)
    transport, _ = scripted(["Thought: a.", "garbage", "Thought: b.", "garbage", "take(tie_red)"])
    m = ReActMatcher(inst, transport)
    assert m.next_action(fresh_context(inst), "").action == Take("tie_red")
    assert m.inner_iterations == [3]


def test_protocol_failure_is_recorded_by_trial():
    inst = reference_instance(Family.BASE)
    transport, _ = scripted(["?"] * 4)
    record = run_trial(RunConfig(policy="single-shot"), inst, SingleShotMatcher(inst, transport), RuleDirector())
    assert not record.success and record.steps == 0
    assert record.failure.startswith("ProtocolFailure")


# -- directors --------------------------------------------------------------------------------


def test_rule_director_disambiguates():
    inst = reference_instance(Family.FAR)
    ans = RuleDirector().answer("Which one?", inst)
    assert ans.text == "I mean the red tie. It is here in the hallway, where I am."
    assert ans.grounding.obj == "tie_red" and ans.grounding.place == "hallway"
    assert ans.grounding.attributes == (("color", "red"),)


def test_rule_director_names_container():
    ans = RuleDirector().answer("Where?", reference_instance(Family.HIDDEN))
    assert ans.text == "I mean the red tie. It is inside the basket, here in the kitchen, where I am."


def test_rule_director_requires_question():
    with pytest.raises(ValueError):
        RuleDirector().answer(" ", reference_instance(Family.FAR))


def test_model_director_passes_question():
    transport, calls = scripted(["  The red one.  "])
    ans = ModelDirector(transport).answer("Which?", reference_instance(Family.FAR))
    assert ans.text == "The red one." and ans.grounding.obj is None
    assert calls[0].messages[-1] == ("user", "Which?")


def test_registries():
    inst = reference_instance(Family.BASE)
    assert isinstance(make_matcher("greedy-literal", inst), GreedyLiteral)
    with pytest.raises(ValueError, match="needs a model transport"):
        make_matcher("react", inst)
    with pytest.raises(ValueError):
        make_matcher("oracle", inst)
    assert isinstance(make_director("rule"), RuleDirector)
    with pytest.raises(ValueError):
        make_director("model")


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.short)
def test_greedy_always_succeeds_within_cap(family):
    inst = reference_instance(family)
    record = run_trial(RunConfig(), inst, GreedyLiteral(inst), RuleDirector())
    assert record.success and record.steps <= 15


def test_parse_thought_then_move():
    d = parse_agent_output("I should check the other room.\nmove(kitchen)")
    assert (d.thought, d.action) == ("I should check the other room.", Move("kitchen"))
    assert parse_agent_output("take(tie_red)").thought == ""


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.short)
def test_plan_follower_is_the_optimal_plan(family):
    from perspact.planner import plan_optimal

    inst = reference_instance(family)
    record = run_trial(RunConfig(policy="plan-follower"), inst, PlanFollower(inst), RuleDirector())
    assert [e.action for e in record.entries] == [str(a) for a in plan_optimal(inst).steps]


def test_rule_director_truthful_and_stateless_on_generated():
    from perspact.scenarios import generate

    director = RuleDirector()
    for i in range(1000):
        inst = generate(FAMILIES[i % 7], i)
        ans = director.answer("Which one do you mean?", inst)
        g = ans.grounding
        target = inst.world.portables[inst.target]
        assert all(target.attribute(k) == v for k, v in g.attributes)
        assert g.obj == inst.target and g.place == inst.world.object_place(inst.target)
        assert director.answer("Which one do you mean?", inst) == ans
