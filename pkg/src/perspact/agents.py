"""Matcher policies and Director implementations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Protocol

from .llm import ChatExchange, ModelSettings, Transport, build_director_prompt, build_matcher_prompt, place_phrase
from .planner import AnswerConstraint, ask_model, plan_optimal
from .scenarios import ScenarioInstance
from .world import Action, Ask, Move, Open, Take, VisibilityReport

MAX_REPROMPTS = 3
MAX_INNER_ITERATIONS = 5

REPROMPT = (
    "Your last reply did not end with a valid action line ({error}). "
    'Reply again and finish with exactly one of: move(<location>), open(<container>), take(<object>), ask("<question>"), done.'
)
CONTINUE = "Continue. When you are ready, finish your reply with exactly one action line."


@dataclass(frozen=True)
class Done:
    def __str__(self) -> str:
        return "done"


@dataclass(frozen=True)
class DirectorAnswer:
    text: str
    grounding: AnswerConstraint = AnswerConstraint()


@dataclass
class TrialContext:
    instruction: str
    observations: list = field(default_factory=list)
    views: list = field(default_factory=list)  # VisibilityReport per observation
    actions: list = field(default_factory=list)  # (action, event text)
    answers: list = field(default_factory=list)  # DirectorAnswer per ask
    step: int = 0

    def observe(self, text: str, view: VisibilityReport) -> None:
        self.observations.append(text)
        self.views.append(view)

    def record(self, action, event: str) -> None:
        self.actions.append((action, event))
        self.step += 1


@dataclass(frozen=True)
class ParsedDecision:
    action: Action | Done
    thought: str = ""


class ParseError(ValueError):
    pass


class ProtocolFailure(RuntimeError):
    pass


class MatcherPolicy(Protocol):
    name: str

    def next_action(self, context: TrialContext, observation: str) -> ParsedDecision: ...


# -- parsing -----------------------------------------------------------------------

_PREFIX = r"^\s*(?:action\s*[:=]\s*)?"
_ID_ACTION = re.compile(_PREFIX + r"(move|open|take)\s*\(\s*([a-z0-9_-]+)\s*\)\s*\.?\s*$", re.I)
_ASK_ACTION = re.compile(_PREFIX + r'ask\s*\(\s*"(.*\S.*)"\s*\)\s*\.?\s*$', re.I)
_DONE_ACTION = re.compile(_PREFIX + r"done\s*\.?\s*$", re.I)
_THOUGHT_PREFIX = re.compile(r"^\s*thought\s*:\s*", re.I)


def _parse_line(line: str):
    if m := _ID_ACTION.match(line):
        verb, arg = m.group(1).lower(), m.group(2).lower()
        return {"move": Move, "open": Open, "take": Take}[verb](arg)
    if m := _ASK_ACTION.match(line):
        return Ask(m.group(1).strip())
    if _DONE_ACTION.match(line):
        return Done()
    return None


def parse_agent_output(text: str) -> ParsedDecision:
    """Take the last line that is a grammatical action; earlier lines are the thought."""
    lines = text.strip().splitlines()
    for i in range(len(lines) - 1, -1, -1):
        action = _parse_line(lines[i])
        if action is not None:
            thought = "\n".join(_THOUGHT_PREFIX.sub("", l) for l in lines[:i]).strip()
            return ParsedDecision(action, thought)
    raise ParseError("no line matches the action grammar")


# -- scripted matchers ------------------------------------------------------------


class GreedyLiteral:
    """Goes for the nearest visible object of the requested type, ignoring qualifiers.

    Free-standing objects are preferred over container contents. Objects
    refused by the Director are never retried. With nothing to go for it
    explores the nearest unvisited room, then opens closed containers, and
    only asks as a last resort.
    """

    name = "greedy-literal"

    def __init__(self, instance: ScenarioInstance):
        self.instance = instance
        self.world = instance.world

    def _step_towards(self, here: str, goal: str) -> Move:
        dist = self.world.distances_from(goal)
        best = min(self.world.neighbors(here), key=lambda n: (self.world.edge_length(here, n) + dist[n], n))
        return Move(best)

    def next_action(self, context: TrialContext, observation: str) -> ParsedDecision:
        here = context.views[-1].location
        noun = self.instance.instruction.noun
        refused = {a.obj for a, event in context.actions if isinstance(a, Take) and event == "took-incorrect"}
        opened = {a.container for a, event in context.actions if isinstance(a, Open) and event == "opened"}

        free: dict[str, str] = {}
        inside: dict[str, str] = {}
        container_loc: dict[str, str] = {}
        closed: set[str] = set()
        for view in context.views:
            free.update(view.free_objects)
            inside.update(view.contents)
            for c, loc, is_open in view.containers:
                container_loc[c] = loc
                if not is_open:
                    closed.add(c)
        for ans in context.answers:
            g = ans.grounding
            if g.obj and g.place:
                (inside if g.place in self.world.containers else free)[g.obj] = g.place
        for c in inside.values():
            container_loc.setdefault(c, self.world.container_at[c])

        def wanted(objs: dict[str, str], locate) -> list[tuple[float, str, str]]:
            dist = self.world.distances_from(here)
            return sorted(
                (dist[locate(p)], o, locate(p))
                for o, p in objs.items()
                if self.world.portables[o].noun == noun and o not in refused
            )

        options = wanted(free, lambda p: p) or wanted(inside, lambda c: container_loc[c])
        if options:
            _, obj, loc = options[0]
            if loc == here:
                return ParsedDecision(Take(obj), f"the nearest {noun} is here")
            return ParsedDecision(self._step_towards(here, loc), f"heading to the {noun} in the {loc}")

        visited = {v.location for v in context.views}
        unexplored = [l for l in self.world.locations if l not in visited]
        if unexplored:
            dist = self.world.distances_from(here)
            goal = min(unexplored, key=lambda l: (dist[l], l))
            return ParsedDecision(self._step_towards(here, goal), f"no {noun} in sight, exploring the {goal}")

        to_open = sorted(c for c in closed - opened)
        if to_open:
            c = to_open[0]
            loc = container_loc[c]
            if loc == here:
                return ParsedDecision(Open(c), f"checking inside the {c}")
            return ParsedDecision(self._step_towards(here, loc), f"going to open the {c}")
        return ParsedDecision(Ask(f"Where is the {noun}?"), "nothing left to try")


class PlanFollower:
    """Replays the optimal expert plan."""

    name = "plan-follower"

    def __init__(self, instance: ScenarioInstance):
        self.steps = plan_optimal(instance).steps

    def next_action(self, context: TrialContext, observation: str) -> ParsedDecision:
        i = len(context.actions)
        return ParsedDecision(self.steps[i] if i < len(self.steps) else Done())


# -- model-backed matchers ------------------------------------------------------------------


class SingleShotMatcher:
    """One completion per step, conditioned on the whole trial history."""

    name = "single-shot"

    def __init__(
        self,
        instance: ScenarioInstance,
        transport: Transport,
        settings: ModelSettings = ModelSettings(),
        max_reprompts: int = MAX_REPROMPTS,
    ):
        self.instance = instance
        self.transport = transport
        self.settings = settings
        self.max_reprompts = max_reprompts
        self.calls = 0

    def _complete(self, exchange: ChatExchange) -> str:
        self.calls += 1
        return self.transport.complete(exchange)

    def next_action(self, context: TrialContext, observation: str) -> ParsedDecision:
        exchange = build_matcher_prompt(self.instance, context, self.settings)
        for attempt in range(self.max_reprompts + 1):
            text = self._complete(exchange)
            try:
                return parse_agent_output(text)
            except ParseError as exc:
                exchange = exchange.extend(text, REPROMPT.format(error=exc))
        raise ProtocolFailure(f"unparseable model output after {self.max_reprompts} reprompts")


class ReActMatcher(SingleShotMatcher):
    """Thought/act loop: thought-only replies are fed back until an action line appears."""

    name = "react"

    def __init__(self, *args, max_inner: int = MAX_INNER_ITERATIONS, **kwargs):
        super().__init__(*args, **kwargs)
        self.max_inner = max_inner
        self.inner_iterations: list[int] = []

    def next_action(self, context: TrialContext, observation: str) -> ParsedDecision:
        exchange = build_matcher_prompt(self.instance, context, self.settings)
        thoughts: list[str] = []
        inner = reprompts = 0
        while True:
            text = self._complete(exchange)
            inner += 1
            try:
                decision = parse_agent_output(text)
            except ParseError as exc:
                if _THOUGHT_PREFIX.match(text):
                    thoughts.append(_THOUGHT_PREFIX.sub("", text.strip()))
                    if inner >= self.max_inner:
                        self.inner_iterations.append(inner)
                        raise ProtocolFailure(f"no action after {inner} inner iterations") from None
                    exchange = exchange.extend(text, CONTINUE)
                    continue
                reprompts += 1
                inner -= 1
                if reprompts > self.max_reprompts:
                    raise ProtocolFailure(f"unparseable model output after {self.max_reprompts} reprompts") from None
                exchange = exchange.extend(text, REPROMPT.format(error=exc))
                continue
            self.inner_iterations.append(inner)
            thought = "\n".join(thoughts + ([decision.thought] if decision.thought else []))
            return ParsedDecision(decision.action, thought)


# -- directors -----------------------------------------------------------------------------


class RuleDirector:
    """Ignores the question and fully disambiguates: attributes plus location."""

    name = "rule"

    def answer(self, question: str, instance: ScenarioInstance, asked: int = 0) -> DirectorAnswer:
        if not question.strip():
            raise ValueError("question must be non-empty")
        where = place_phrase(instance, instance.target, instance.director_location)
        text = f"I mean the {instance.world.portables[instance.target].phrase}. It is {where}."
        return DirectorAnswer(text, ask_model(instance))


class ModelDirector:
    """Free-form model answers; carries no structured grounding."""

    name = "model"

    def __init__(self, transport: Transport, settings: ModelSettings = ModelSettings()):
        self.transport = transport
        self.settings = settings

    def answer(self, question: str, instance: ScenarioInstance, asked: int = 0) -> DirectorAnswer:
        text = self.transport.complete(build_director_prompt(instance, question, self.settings))
        return DirectorAnswer(text.strip())


def director_answer(question: str, instance: ScenarioInstance, asked: int = 0) -> DirectorAnswer:
    return RuleDirector().answer(question, instance, asked)


MATCHERS = ("greedy-literal", "plan-follower", "single-shot", "react")
DIRECTORS = ("rule", "model")


def make_matcher(
    policy: str, instance: ScenarioInstance, transport: Transport | None = None, settings: ModelSettings = ModelSettings()
) -> MatcherPolicy:
    if policy == "greedy-literal":
        return GreedyLiteral(instance)
    if policy == "plan-follower":
        return PlanFollower(instance)
    if policy in ("single-shot", "react"):
        if transport is None:
            raise ValueError(f"policy {policy!r} needs a model transport")
        cls = ReActMatcher if policy == "react" else SingleShotMatcher
        return cls(instance, transport, settings)
    raise ValueError(f"unknown matcher policy {policy!r}")


def make_director(director: str, transport: Transport | None = None, settings: ModelSettings = ModelSettings()):
    if director == "rule":
        return RuleDirector()
    if director == "model":
        if transport is None:
            raise ValueError("the model-backed Director needs a transport")
        return ModelDirector(transport, settings)
    raise ValueError(f"unknown director {director!r}")
