"""Deterministic household state machine: actions, visibility and observation text.

Visibility rules:

* free-standing objects and agents are visible at the observer's location
  and at every adjacent location;
* contents of an open container are visible only to an observer standing
  at the container's location;
* contents of closed containers are visible to nobody.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Union

from . import vocab
from .pddl import GroundedWorld

if TYPE_CHECKING:
    from .scenarios import ScenarioInstance

MATCHER = vocab.MATCHER
DIRECTOR = vocab.DIRECTOR
DEFAULT_QUESTION = "Which one do you mean?"


@dataclass(frozen=True)
class Move:
    to: str

    def __str__(self) -> str:
        return f"move({self.to})"


@dataclass(frozen=True)
class Open:
    container: str

    def __str__(self) -> str:
        return f"open({self.container})"


@dataclass(frozen=True)
class Take:
    obj: str

    def __str__(self) -> str:
        return f"take({self.obj})"


@dataclass(frozen=True)
class Ask:
    question: str = DEFAULT_QUESTION

    def __post_init__(self):
        if not self.question.strip():
            raise ValueError("Ask needs a non-empty question")

    def __str__(self) -> str:
        escaped = self.question.replace('"', "'")
        return f'ask("{escaped}")'


Action = Union[Move, Open, Take, Ask]


def _items(d: dict) -> tuple:
    return tuple(sorted(d.items()))


@dataclass(frozen=True)
class WorldState:
    layout: GroundedWorld = field(compare=False, repr=False)
    target: str | None
    agent_pos: tuple
    free_pos: tuple
    contained_pos: tuple
    open_flags: tuple
    held: tuple | None = None  # (agent, object)

    @cached_property
    def agent_at(self) -> dict[str, str]:
        return dict(self.agent_pos)

    @cached_property
    def free(self) -> dict[str, str]:
        return dict(self.free_pos)

    @cached_property
    def contained(self) -> dict[str, str]:
        return dict(self.contained_pos)

    @cached_property
    def container_open(self) -> dict[str, bool]:
        return dict(self.open_flags)

    @property
    def container_at(self) -> dict[str, str]:
        return self.layout.container_at

    def holding(self, agent: str) -> str | None:
        if self.held and self.held[0] == agent:
            return self.held[1]
        return None

    def object_location(self, obj: str) -> str | None:
        if obj in self.free:
            return self.free[obj]
        if obj in self.contained:
            return self.layout.container_at[self.contained[obj]]
        return None

    def replace(self, **changes) -> WorldState:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class VisibilityReport:
    observer: str
    location: str
    free_objects: tuple  # (object, location)
    containers: tuple  # (container, location, is_open)
    contents: tuple  # (object, container)
    agents: tuple  # (agent, location)
    holding: str | None = None

    def objects(self) -> set[str]:
        return {o for o, _ in self.free_objects} | {o for o, _ in self.contents}

    def places(self) -> dict[str, str]:
        """Visible object -> place (location for free objects, container otherwise)."""
        out = dict(self.free_objects)
        out.update(self.contents)
        return out


@dataclass(frozen=True)
class StepOutcome:
    state: WorldState
    observation: str
    event: str  # moved | opened | took-correct | took-incorrect | asked | rejected
    reason: str | None = None

    @property
    def rejected(self) -> bool:
        return self.event == "rejected"


def init_world(instance: ScenarioInstance) -> WorldState:
    from .scenarios import structural_violations

    problems = structural_violations(instance)
    if problems:
        raise ValueError(f"invalid instance: {'; '.join(problems)}")
    w = instance.world
    return WorldState(
        layout=w,
        target=instance.target,
        agent_pos=_items(w.agent_at),
        free_pos=_items(w.free),
        contained_pos=_items(w.contained),
        open_flags=_items(w.container_open),
    )


def _require_agent(state: WorldState, agent: str) -> str:
    if agent not in state.agent_at:
        raise KeyError(f"unknown agent {agent!r}")
    return state.agent_at[agent]


def visible_set(state: WorldState, observer: str) -> VisibilityReport:
    here = _require_agent(state, observer)
    view = {here, *state.layout.neighbors(here)}
    free = tuple(sorted((o, l) for o, l in state.free.items() if l in view))
    containers = tuple(
        sorted((c, state.container_at[c], state.container_open[c]) for c in state.container_open if state.container_at[c] in view)
    )
    contents = tuple(
        sorted(
            (o, c)
            for o, c in state.contained.items()
            if state.container_open[c] and state.container_at[c] == here
        )
    )
    agents = tuple(sorted((a, l) for a, l in state.agent_at.items() if a != observer and l in view))
    return VisibilityReport(observer, here, free, containers, contents, agents, state.holding(observer))


def _reject(state: WorldState, agent: str, reason: str) -> StepOutcome:
    return StepOutcome(state, render_observation(state, agent), "rejected", reason)


def apply_action(state: WorldState, agent: str, action: Action) -> StepOutcome:
    """Apply one action; illegal actions come back as ``rejected`` with the state untouched."""
    if agent not in state.agent_at:
        return StepOutcome(state, "", "rejected", "unknown agent")
    if agent not in state.layout.actors:
        return _reject(state, agent, "the Director cannot act in the environment")
    here = state.agent_at[agent]

    if isinstance(action, Ask):
        return StepOutcome(state, render_observation(state, agent), "asked")

    if isinstance(action, Move):
        if action.to not in state.layout.locations:
            return _reject(state, agent, "unknown location")
        if (here, action.to) not in state.layout.adjacency:
            return _reject(state, agent, "not adjacent")
        positions = dict(state.agent_at)
        positions[agent] = action.to
        nxt = state.replace(agent_pos=_items(positions))
        return StepOutcome(nxt, render_observation(nxt, agent), "moved")

    if isinstance(action, Open):
        c = action.container
        if c not in state.container_open:
            return _reject(state, agent, "unknown container")
        if state.container_at[c] != here:
            return _reject(state, agent, "container not here")
        if state.container_open[c]:
            return _reject(state, agent, "container already open")
        flags = dict(state.container_open)
        flags[c] = True
        nxt = state.replace(open_flags=_items(flags))
        return StepOutcome(nxt, render_observation(nxt, agent), "opened")

    if isinstance(action, Take):
        o = action.obj
        if state.holding(agent) is not None:
            return _reject(state, agent, "hands full")
        if o not in state.layout.portables:
            return _reject(state, agent, "unknown object")
        if state.object_location(o) != here:
            return _reject(state, agent, "object not here")
        if o in state.contained and not state.container_open[state.contained[o]]:
            return _reject(state, agent, "object not retrievable")
        if o != state.target:
            # Wrong pick: the Director refuses it and it stays where it was.
            return StepOutcome(state, render_observation(state, agent), "took-incorrect")
        free = dict(state.free)
        contained = dict(state.contained)
        free.pop(o, None)
        contained.pop(o, None)
        nxt = state.replace(free_pos=_items(free), contained_pos=_items(contained), held=(agent, o))
        return StepOutcome(nxt, render_observation(nxt, agent), "took-correct")

    return _reject(state, agent, f"unsupported action {action!r}")


def legal_actions(state: WorldState, agent: str) -> list[Action]:
    here = _require_agent(state, agent)
    if agent not in state.layout.actors:
        return []
    actions: list[Action] = [Move(l) for l in state.layout.neighbors(here)]
    actions += [
        Open(c)
        for c in sorted(state.container_open)
        if state.container_at[c] == here and not state.container_open[c]
    ]
    if state.holding(agent) is None:
        takeable = [o for o, l in state.free.items() if l == here]
        takeable += [
            o
            for o, c in state.contained.items()
            if state.container_at[c] == here and state.container_open[c]
        ]
        actions += [Take(o) for o in sorted(takeable)]
    actions.append(Ask())
    return actions


# -- rendering ------------------------------------------------------------------


def _where(loc: str, here: str) -> str:
    return "here" if loc == here else f"in the {loc}"


def _object_phrase(layout: GroundedWorld, obj: str) -> str:
    return vocab.with_article(layout.portables[obj].phrase)


def render_observation(state: WorldState, observer: str) -> str:
    """Fixed English template over the observer's visibility report."""
    report = visible_set(state, observer)
    here = report.location
    layout = state.layout
    parts = [f"You are in the {here}."]
    if report.holding:
        parts.append(f"You are holding {_object_phrase(layout, report.holding)}.")

    items = [f"{_object_phrase(layout, o)} ({_where(l, here)})" for o, l in report.free_objects]
    inside: dict[str, list[str]] = {}
    for o, c in report.contents:
        inside.setdefault(c, []).append(_object_phrase(layout, o))
    for c, loc, is_open in report.containers:
        text = f"{vocab.with_article(('open ' if is_open else 'closed ') + c)} ({_where(loc, here)})"
        if is_open and loc == here:
            text += f" containing {' and '.join(inside[c])}" if c in inside else ", empty"
        items.append(text)
    if items:
        parts.append("You see: " + "; ".join(items) + ".")
    else:
        parts.append("You see nothing of note.")

    if observer == MATCHER and DIRECTOR in state.agent_at:
        # The Director never moves, so its position is always known to the Matcher.
        loc = state.agent_at[DIRECTOR]
        parts.append("The Director is here." if loc == here else f"The Director is in the {loc}.")
    elif observer != MATCHER:
        for a, loc in report.agents:
            name = "The Matcher" if a == MATCHER else f"Agent {a}"
            parts.append(f"{name} is here." if loc == here else f"{name} is in the {loc}.")
    return " ".join(parts)
