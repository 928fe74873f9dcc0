"""Optimal expert plans under epistemic validity.

A Take is only allowed once the Matcher's knowledge singles out the
target: among the objects it has observed, exactly one satisfies the
instruction and every answer received from the Director. The search runs
over joint (world, knowledge) states with unit action costs.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .scenarios import InstructionDescriptor, ScenarioInstance
from .world import (
    MATCHER,
    Action,
    Ask,
    Move,
    Open,
    Take,
    VisibilityReport,
    WorldState,
    apply_action,
    init_world,
    legal_actions,
    visible_set,
)

MAX_DEPTH = 15


class NoPlanError(RuntimeError):
    pass


class ContradictoryAnswer(ValueError):
    pass


@dataclass(frozen=True)
class AnswerConstraint:
    """Structured content of a Director answer."""

    attributes: tuple = ()  # (kind, value) pairs the referent must have
    obj: str | None = None  # object the answer points at, if any
    place: str | None = None  # where that object is (room or container)


@dataclass(frozen=True)
class KnowledgeState:
    observed: tuple  # sorted (object, place)
    instruction: InstructionDescriptor
    catalog: dict = field(compare=False, repr=False)  # object -> Portable
    answers: tuple = ()
    asked: int = 0
    last_seen: tuple = field(default=(), compare=False)  # (object, step)

    @property
    def places(self) -> dict[str, str]:
        return dict(self.observed)


@dataclass(frozen=True)
class Plan:
    steps: tuple
    annotations: tuple = ()  # knowledge before each step

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class PlanStats:
    steps: int
    asks: int
    moves: int


def initial_knowledge(instance: ScenarioInstance) -> KnowledgeState:
    empty = KnowledgeState((), instance.instruction, instance.world.portables)
    return update_knowledge(empty, visible_set(init_world(instance), MATCHER), step=0)


def _with_observations(k: KnowledgeState, places: dict[str, str], step: int | None) -> KnowledgeState:
    known = k.places
    changed = {o: p for o, p in places.items() if known.get(o) != p}
    if not changed:
        return k
    known.update(changed)
    seen = dict(k.last_seen)
    seen.update({o: step for o in changed} if step is not None else {})
    return KnowledgeState(
        observed=tuple(sorted(known.items())),
        instruction=k.instruction,
        catalog=k.catalog,
        answers=k.answers,
        asked=k.asked,
        last_seen=tuple(sorted(seen.items())),
    )


def update_knowledge(k: KnowledgeState, evidence, step: int | None = None) -> KnowledgeState:
    """Fold a visibility report or a Director answer into ``k``."""
    if isinstance(evidence, VisibilityReport):
        return _with_observations(k, evidence.places(), step)
    grounding = getattr(evidence, "grounding", evidence)
    if not isinstance(grounding, AnswerConstraint):
        raise TypeError(f"cannot update knowledge from {type(evidence).__name__}")
    nxt = k
    if grounding.obj is not None and grounding.place is not None:
        nxt = _with_observations(nxt, {grounding.obj: grounding.place}, step)
    nxt = KnowledgeState(
        observed=nxt.observed,
        instruction=nxt.instruction,
        catalog=nxt.catalog,
        answers=nxt.answers + (grounding,),
        asked=nxt.asked + 1,
        last_seen=nxt.last_seen,
    )
    if grounding.obj is not None and not candidate_set(nxt):
        raise ContradictoryAnswer(f"answer {grounding} rules out every candidate")
    return nxt


def _consistent(obj: str, place: str, k: KnowledgeState) -> bool:
    portable = k.catalog[obj]
    if not k.instruction.matches(portable):
        return False
    for ans in k.answers:
        if any(portable.attribute(kind) != value for kind, value in ans.attributes):
            return False
        if ans.obj is not None and ans.place is not None and place != ans.place:
            return False
    return True


def candidate_set(k: KnowledgeState) -> set[str]:
    return {o for o, place in k.observed if _consistent(o, place, k)}


def ask_model(instance: ScenarioInstance) -> AnswerConstraint:
    """One fully disambiguating answer: every target attribute plus where it is."""
    w = instance.world
    return AnswerConstraint(
        attributes=w.portables[instance.target].attributes,
        obj=instance.target,
        place=w.object_place(instance.target),
    )


# -- transition model ------------------------------------------------------------------


def transition(
    instance: ScenarioInstance, state: WorldState, k: KnowledgeState, action: Action
) -> tuple[WorldState, KnowledgeState, str]:
    """Joint successor; the event string is world-sim's."""
    out = apply_action(state, MATCHER, action)
    if out.rejected:
        return state, k, out.event
    if isinstance(action, Ask):
        return out.state, update_knowledge(k, ask_model(instance)), out.event
    return out.state, update_knowledge(k, visible_set(out.state, MATCHER)), out.event


def is_goal_take(instance: ScenarioInstance, k: KnowledgeState, action: Action) -> bool:
    return isinstance(action, Take) and action.obj == instance.target and candidate_set(k) == {instance.target}


def heuristic(instance: ScenarioInstance, state: WorldState, k: KnowledgeState) -> int:
    """Hops from the Matcher to the target's known location (0 while unknown)."""
    place = k.places.get(instance.target)
    if place is None:
        return 0
    target_loc = state.layout.place_location(place)
    return state.layout.hop_distance(state.agent_at[MATCHER], target_loc)


def _annotate(instance: ScenarioInstance, steps: Iterable[Action]) -> Plan:
    state, k = init_world(instance), initial_knowledge(instance)
    snaps = []
    steps = tuple(steps)
    for action in steps:
        snaps.append(k)
        state, k, _ = transition(instance, state, k, action)
    return Plan(steps, tuple(snaps))


def plan_optimal(instance: ScenarioInstance, max_depth: int = MAX_DEPTH) -> Plan:
    """A* with an admissible distance heuristic.

    Among shortest plans, fewest asks wins, then fewest moves, then the
    lexicographically smallest action sequence.
    """
    start = (init_world(instance), initial_knowledge(instance))
    tie = itertools.count()
    h0 = heuristic(instance, *start)
    # (f, asks, moves, action keys, tiebreak, state, knowledge, actions, is_goal)
    heap = [(h0, 0, 0, (), next(tie), start[0], start[1], (), False)]
    closed: set = set()
    while heap:
        f, asks, moves, keys, _, state, k, actions, goal = heapq.heappop(heap)
        if goal:
            return _annotate(instance, actions)
        node = (state, k)
        if node in closed:
            continue
        closed.add(node)
        g = len(actions)
        if g >= max_depth:
            continue
        for action in legal_actions(state, MATCHER):
            if isinstance(action, Take):
                if is_goal_take(instance, k, action):
                    heapq.heappush(
                        heap,
                        (g + 1, asks, moves, keys + (str(action),), next(tie), state, k, actions + (action,), True),
                    )
                continue
            nstate, nk, _ = transition(instance, state, k, action)
            if (nstate, nk) in closed:
                continue
            entry = (
                g + 1 + heuristic(instance, nstate, nk),
                asks + isinstance(action, Ask),
                moves + isinstance(action, Move),
                keys + (str(action),),
                next(tie),
                nstate,
                nk,
                actions + (action,),
                False,
            )
            heapq.heappush(heap, entry)
    raise NoPlanError(f"no valid plan within {max_depth} steps for {instance.family.value} seed {instance.seed}")


def _all_actions(instance: ScenarioInstance) -> Iterator[Action]:
    w = instance.world
    yield from (Move(l) for l in w.locations)
    yield from (Open(c) for c in w.containers)
    yield from (Take(o) for o in sorted(w.portables))
    yield Ask()


def brute_force_optimal(
    instance: ScenarioInstance, depth_cap: int = 8, forbid: Iterable[type] = ()
) -> Plan:
    """Breadth-first enumeration over every syntactically possible action.

    Independent of :func:`legal_actions` and of the heuristic: illegal
    actions are tried and discarded by the simulator itself.
    """
    forbid = tuple(forbid)
    actions = [a for a in _all_actions(instance) if not isinstance(a, forbid)] if forbid else list(_all_actions(instance))
    frontier = [((init_world(instance), initial_knowledge(instance)), ())]
    visited = {frontier[0][0]}
    for depth in range(depth_cap):
        nxt_frontier = []
        for (state, k), path in frontier:
            for action in actions:
                out = apply_action(state, MATCHER, action)
                if out.rejected:
                    continue
                if isinstance(action, Take):
                    if out.event == "took-correct" and candidate_set(k) == {instance.target}:
                        return _annotate(instance, path + (action,))
                    continue
                if isinstance(action, Ask):
                    nk = update_knowledge(k, ask_model(instance))
                else:
                    nk = update_knowledge(k, visible_set(out.state, MATCHER))
                node = (out.state, nk)
                if node not in visited:
                    visited.add(node)
                    nxt_frontier.append((node, path + (action,)))
        frontier = nxt_frontier
    raise NoPlanError(f"depth cap {depth_cap} exhausted without a valid plan")


def check_plan(instance: ScenarioInstance, plan: Plan | Iterable[Action]) -> list[str]:
    """Replay a plan; return every problem found (empty when valid)."""
    steps = tuple(plan.steps if isinstance(plan, Plan) else plan)
    problems = []
    if not steps:
        return ["empty plan"]
    state, k = init_world(instance), initial_knowledge(instance)
    for i, action in enumerate(steps):
        if isinstance(action, Take):
            cands = candidate_set(k)
            if cands != {action.obj}:
                problems.append(f"step {i}: take({action.obj}) with candidates {sorted(cands)}")
        nstate, nk, event = transition(instance, state, k, action)
        if event == "rejected":
            problems.append(f"step {i}: {action} rejected")
        if isinstance(action, Take) and i != len(steps) - 1:
            problems.append(f"step {i}: take before the final step")
        state, k = nstate, nk
    last = steps[-1]
    if not (isinstance(last, Take) and last.obj == instance.target):
        problems.append("final step is not take(target)")
    elif state.holding(MATCHER) != instance.target:
        problems.append("target not held at the end")
    return problems


def plan_stats(plan: Plan | Iterable[Action]) -> PlanStats:
    steps = tuple(plan.steps if isinstance(plan, Plan) else plan)
    return PlanStats(
        steps=len(steps),
        asks=sum(isinstance(a, Ask) for a in steps),
        moves=sum(isinstance(a, Move) for a in steps),
    )
