import dataclasses
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import custom_instance
from perspact.planner import (
    AnswerConstraint,
    ContradictoryAnswer,
    NoPlanError,
    Plan,
    ask_model,
    brute_force_optimal,
    candidate_set,
    check_plan,
    heuristic,
    initial_knowledge,
    is_goal_take,
    plan_optimal,
    plan_stats,
    transition,
    update_knowledge,
)
from perspact.scenarios import FAMILIES, Family, InstructionDescriptor, generate, reference_instance
from perspact.vocab import MATCHER
from perspact.world import Ask, Move, Open, Take, init_world, legal_actions, visible_set

# Optimal (steps, asks, moves) per reference family.
OPTIMAL = {
    Family.BASE: (1, 0, 0),
    Family.PERSP: (2, 1, 0),
    Family.DISTRACTOR: (2, 0, 1),
    Family.FAR: (3, 1, 1),
    Family.NEAR: (2, 0, 1),
    Family.HIDDEN: (2, 0, 1),
    Family.NOTTHAT: (2, 1, 0),
}


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.short)
def test_reference_stats_match_table(family):
    s = plan_stats(plan_optimal(reference_instance(family)))
    assert (s.steps, s.asks, s.moves) == OPTIMAL[family]


def test_reference_plans():
    def plan(f):
        return plan_optimal(reference_instance(f)).steps

    assert plan(Family.BASE) == (Take("tie_red"),)
    assert plan(Family.FAR) == (Ask(), Move("hallway"), Take("tie_red"))
    assert plan(Family.NOTTHAT) == (Ask(), Take("tie_red"))


def test_plan_stats_counting():
    s = plan_stats([Ask(), Move("hallway"), Take("tie_red")])
    assert (s.steps, s.asks, s.moves) == (3, 1, 1)
    s = plan_stats([Take("tie_red")])
    assert (s.steps, s.asks, s.moves) == (1, 0, 0)
    s = plan_stats([Open("box"), Take("tie_red")])
    assert (s.steps, s.asks, s.moves) == (2, 0, 0)


# -- knowledge ----------------------------------------------------------------------------


def test_initial_knowledge_base():
    k = initial_knowledge(reference_instance(Family.BASE))
    assert {("tie_red", "bedroom"), ("tie_blue", "hallway")} <= set(k.observed)
    assert k.instruction.phrasing == "the red tie" and k.answers == ()


def test_initial_knowledge_hidden_sees_no_match():
    k = initial_knowledge(reference_instance(Family.HIDDEN))
    assert candidate_set(k) == set()


def test_initial_knowledge_empty_start():
    inst = custom_instance([("bedroom", "hallway"), ("hallway", "kitchen")], "bedroom", "hallway", {("tie", "red"): "kitchen"}, "tie_red")
    assert initial_knowledge(inst).observed == ()


def test_persp_initial_candidates():
    assert candidate_set(initial_knowledge(reference_instance(Family.PERSP))) == {"tie_red", "tie_blue"}


def test_colour_answer_narrows_candidates():
    k = initial_knowledge(reference_instance(Family.PERSP))
    k2 = update_knowledge(k, AnswerConstraint(attributes=(("color", "red"),)))
    assert candidate_set(k2) == {"tie_red"} and k2.asked == 1


def test_constraint_excludes_unmatched_observation():
    inst = custom_instance(
        [("bedroom", "hallway")], "bedroom", "hallway", {("tie", "blue"): "hallway", ("tie", "red"): "hallway"}, "tie_red",
        instruction=InstructionDescriptor("tie", ("color", "red")),
    )  # fmt: skip
    k = initial_knowledge(inst)
    k = dataclasses.replace(k, observed=(("tie_blue", "hallway"),))
    assert candidate_set(k) == set()


def test_reobserving_is_idempotent():
    inst = reference_instance(Family.BASE)
    k = initial_knowledge(inst)
    assert update_knowledge(k, visible_set(init_world(inst), MATCHER)) is k


def test_answer_reveals_hidden_location():
    inst = reference_instance(Family.HIDDEN)
    k = update_knowledge(initial_knowledge(inst), ask_model(inst))
    assert ("tie_red", "basket") in k.observed
    assert candidate_set(k) == {"tie_red"}


def test_contradictory_answer():
    inst = reference_instance(Family.PERSP)
    with pytest.raises(ContradictoryAnswer):
        update_knowledge(initial_knowledge(inst), AnswerConstraint((("color", "green"),), "tie_red", "kitchen"))


def test_update_rejects_unknown_evidence():
    with pytest.raises(TypeError):
        update_knowledge(initial_knowledge(reference_instance(Family.BASE)), "the red one")


# -- oracle and checker -----------------------------------------------------------------


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.short)
def test_oracle_equivalence_on_references(family):
    inst = reference_instance(family)
    fast, slow = plan_optimal(inst), brute_force_optimal(inst)
    assert len(fast) == len(slow)
    assert check_plan(inst, fast) == [] and check_plan(inst, slow) == []


def test_brute_force_base_small_cap():
    s = plan_stats(brute_force_optimal(reference_instance(Family.BASE), depth_cap=2))
    assert (s.steps, s.asks, s.moves) == (1, 0, 0)


def test_brute_force_cap_exhaustion():
    inst = custom_instance(
        [("bedroom", "hallway")], "bedroom", "hallway", {("tie", "red"): "box"}, "tie_red",
        containers={"box": ("bedroom", False)},
    )  # fmt: skip
    assert len(brute_force_optimal(inst)) >= 2
    with pytest.raises(NoPlanError, match="depth cap 6"):
        brute_force_optimal(inst, depth_cap=6, forbid=(Open, Ask))


def test_plan_optimal_depth_bound():
    with pytest.raises(NoPlanError):
        plan_optimal(reference_instance(Family.FAR), max_depth=2)


def test_checker_flags_premature_take():
    inst = reference_instance(Family.PERSP)
    problems = check_plan(inst, [Take("tie_red")])
    assert problems and "candidates" in problems[0]


def test_checker_flags_rejected_step_and_wrong_end():
    inst = reference_instance(Family.BASE)
    problems = check_plan(inst, [Move("closet")])
    assert any("rejected" in p for p in problems)
    assert any("final step" in p for p in problems)
    assert check_plan(inst, []) == ["empty plan"]


@settings(max_examples=30, deadline=None)
@given(family=st.sampled_from(FAMILIES), seed=st.integers(0, 100_000))
def test_generated_plans_are_valid_and_optimal(family, seed):
    inst = generate(family, seed)
    plan = plan_optimal(inst)
    assert check_plan(inst, plan) == []
    assert len(plan) == len(brute_force_optimal(inst))


# -- plan properties ---------------------------------------------------------------------


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.short)
def test_annotations_and_ask_monotonicity(family):
    inst = reference_instance(family)
    plan = plan_optimal(inst)
    assert len(plan.annotations) == len(plan.steps)
    assert is_goal_take(inst, plan.annotations[-1], plan.steps[-1])
    for i, action in enumerate(plan.steps[:-1]):
        if isinstance(action, Ask):
            before, after = plan.annotations[i], plan.annotations[i + 1]
            assert candidate_set(after) <= candidate_set(before) | {inst.target}
            assert len(candidate_set(after)) <= max(len(candidate_set(before)), 1)


def _remaining_costs(inst, depth: int = 4):
    """Exact remaining cost for joint states reachable within ``depth`` steps (test-only BFS)."""
    start = (init_world(inst), initial_knowledge(inst))
    seen, frontier = {start}, [start]
    for _ in range(depth):
        nxt = []
        for state, k in frontier:
            for a in legal_actions(state, MATCHER):
                if isinstance(a, Take):
                    continue
                s2, k2, _ = transition(inst, state, k, a)
                if (s2, k2) not in seen:
                    seen.add((s2, k2))
                    nxt.append((s2, k2))
        frontier = nxt

    def cost(node) -> int:
        queue, visited = deque([(node, 0)]), {node}
        while queue:
            (state, k), d = queue.popleft()
            for a in legal_actions(state, MATCHER):
                if is_goal_take(inst, k, a):
                    return d + 1
                if isinstance(a, Take):
                    continue
                s2, k2, _ = transition(inst, state, k, a)
                if (s2, k2) not in visited:
                    visited.add((s2, k2))
                    queue.append(((s2, k2), d + 1))
        raise AssertionError("dead end")

    return {node: cost(node) for node in seen}


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.short)
def test_heuristic_is_admissible(family):
    inst = reference_instance(family)
    for (state, k), remaining in _remaining_costs(inst).items():
        assert heuristic(inst, state, k) <= remaining


def test_plan_type():
    plan = plan_optimal(reference_instance(Family.BASE))
    assert isinstance(plan, Plan) and plan.steps[-1] == Take("tie_red")
