"""Parser, grounder and emitter for the STRIPS + typing subset of PDDL.

Only what the household domain needs is supported: ``:strips`` and
``:typing`` requirements, typed parameter lists with single inheritance,
conjunctive preconditions and add/delete effects. Anything else is
rejected with a position-reported :class:`PDDLError`.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import TYPE_CHECKING, Iterable, Iterator

from . import vocab

if TYPE_CHECKING:
    from .scenarios import ScenarioInstance

SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing"})
_ATOM_CHARS = frozenset("abcdefghijklmnopqrstuvwxyz0123456789_-?:")

Atom = tuple  # (predicate, arg, ...)


class PDDLError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


class GroundingError(ValueError):
    pass


# -- s-expressions -----------------------------------------------------------


@dataclass(frozen=True)
class Sym:
    value: str
    line: int
    col: int


@dataclass(frozen=True)
class SList:
    items: tuple
    line: int
    col: int


def tokenize(text: str) -> Iterator[tuple[str, int, int]]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch in " \t\r":
            col, i = col + 1, i + 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            yield ch, line, col
            col, i = col + 1, i + 1
            continue
        start_col, j = col, i
        while j < n and text[j] not in " \t\r\n();":
            if text[j].lower() not in _ATOM_CHARS:
                raise PDDLError(f"unexpected character {text[j]!r}", line, col + (j - i))
            j += 1
        yield text[i:j].lower(), line, start_col
        col += j - i
        i = j


def read_sexpr(text: str) -> SList:
    stack: list[tuple[list, int, int]] = []
    result: SList | None = None
    for tok, line, col in tokenize(text):
        if result is not None:
            raise PDDLError("trailing content after top-level expression", line, col)
        if tok == "(":
            stack.append(([], line, col))
        elif tok == ")":
            if not stack:
                raise PDDLError("unbalanced ')'", line, col)
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            if stack:
                stack[-1][0].append(node)
            else:
                result = node
        else:
            if not stack:
                raise PDDLError(f"symbol {tok!r} outside of an expression", line, col)
            stack[-1][0].append(Sym(tok, line, col))
    if stack:
        _, line, col = stack[-1]
        raise PDDLError("unbalanced '(' (expression never closed)", line, col)
    if result is None:
        raise PDDLError("empty input", 1, 1)
    return result


# -- data model ----------------------------------------------------------------


@dataclass(frozen=True)
class PredicateSchema:
    name: str
    params: tuple[tuple[str, str], ...]  # (variable, type)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]
    precondition: tuple[Atom, ...]
    add: tuple[Atom, ...]
    delete: tuple[Atom, ...]


@dataclass(frozen=True)
class DomainDef:
    name: str
    requirements: tuple[str, ...]
    types: tuple[tuple[str, str], ...]  # (type, parent)
    predicates: tuple[PredicateSchema, ...]
    actions: tuple[ActionSchema, ...]

    def predicate(self, name: str) -> PredicateSchema | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def type_parents(self) -> dict[str, str]:
        return dict(self.types)

    def is_subtype(self, sub: str, sup: str) -> bool:
        parents = self.type_parents()
        seen = set()
        while sub not in seen:
            if sub == sup:
                return True
            seen.add(sub)
            if sub not in parents:
                break
            sub = parents[sub]
        return sup == "object"

    def declared_types(self) -> set[str]:
        return {"object"} | {t for t, _ in self.types} | {p for _, p in self.types}


@dataclass(frozen=True)
class ProblemDef:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]  # (name, type)
    init: frozenset
    goal: tuple[Atom, ...]

    def object_types(self) -> dict[str, str]:
        return dict(self.objects)


@dataclass(frozen=True)
class Portable:
    noun: str
    attributes: tuple[tuple[str, str], ...]  # (kind, value), sorted

    def attribute(self, kind: str) -> str | None:
        return dict(self.attributes).get(kind)

    @property
    def phrase(self) -> str:
        values = " ".join(v for _, v in self.attributes)
        return f"{values} {self.noun}" if values else self.noun


@dataclass(frozen=True, eq=True)
class GroundedWorld:
    """Static layout plus the initial placement seed of one household."""

    locations: tuple[str, ...]
    adjacency: frozenset
    agents: tuple[str, ...]
    actors: frozenset
    containers: tuple[str, ...]
    portables: dict = field(hash=False)  # id -> Portable
    agent_at: dict = field(hash=False)
    free: dict = field(hash=False)  # object -> location
    contained: dict = field(hash=False)  # object -> container
    container_at: dict = field(hash=False)
    container_open: dict = field(hash=False)
    lengths: dict = field(default_factory=dict, hash=False)  # frozenset({a, b}) -> corridor length

    def neighbors(self, loc: str) -> list[str]:
        return sorted(b for a, b in self.adjacency if a == loc)

    def edge_length(self, a: str, b: str) -> float:
        return self.lengths.get(frozenset((a, b)), 1)

    def hop_distance(self, src: str, dst: str) -> int:
        dist = {src: 0}
        queue = deque([src])
        while queue:
            cur = queue.popleft()
            if cur == dst:
                return dist[cur]
            for nxt in self.neighbors(cur):
                if nxt not in dist:
                    dist[nxt] = dist[cur] + 1
                    queue.append(nxt)
        raise GroundingError(f"{dst} unreachable from {src}")

    def distances_from(self, src: str) -> dict[str, float]:
        """Corridor-length-weighted shortest distances from ``src``."""
        dist = {src: 0}
        heap = [(0, src)]
        while heap:
            d, cur = heapq.heappop(heap)
            if d > dist[cur]:
                continue
            for nxt in self.neighbors(cur):
                nd = d + self.edge_length(cur, nxt)
                if nd < dist.get(nxt, float("inf")):
                    dist[nxt] = nd
                    heapq.heappush(heap, (nd, nxt))
        return dist

    def distance(self, src: str, dst: str) -> float:
        return self.distances_from(src)[dst]

    def place_location(self, place: str) -> str:
        """Location of a place id (a location itself, or a container)."""
        return self.container_at.get(place, place)

    def object_place(self, obj: str) -> str:
        if obj in self.free:
            return self.free[obj]
        return self.contained[obj]


# -- parsing helpers -------------------------------------------------------------


def _sym(node, what: str) -> str:
    if not isinstance(node, Sym):
        raise PDDLError(f"expected {what}", node.line, node.col)
    return node.value


def _list(node, what: str) -> SList:
    if not isinstance(node, SList):
        raise PDDLError(f"expected {what}", node.line, node.col)
    return node


def _typed_list(items: Iterable, allow_vars: bool) -> list[tuple[str, str, Sym]]:
    out: list[tuple[str, str, Sym]] = []
    pending: list[Sym] = []
    items = list(items)
    i = 0
    while i < len(items):
        node = items[i]
        name = _sym(node, "name in typed list")
        if name == "-":
            if not pending or i + 1 >= len(items):
                raise PDDLError("dangling '-' in typed list", node.line, node.col)
            type_name = _sym(items[i + 1], "type name")
            out.extend((p.value, type_name, p) for p in pending)
            pending = []
            i += 2
            continue
        if name.startswith("?") != allow_vars:
            kind = "variable" if allow_vars else "object name"
            raise PDDLError(f"expected {kind}, got {name!r}", node.line, node.col)
        pending.append(node)
        i += 1
    out.extend((p.value, "object", p) for p in pending)
    return out


def _atom(node, what: str = "atom") -> tuple[Atom, SList]:
    lst = _list(node, what)
    if not lst.items:
        raise PDDLError(f"empty {what}", lst.line, lst.col)
    return tuple(_sym(x, "atom term") for x in lst.items), lst


def _conjunction(node) -> list[tuple[Atom, SList, bool]]:
    """Flatten ``(and ...)`` into (atom, node, negated) triples."""
    lst = _list(node, "formula")
    if lst.items and isinstance(lst.items[0], Sym) and lst.items[0].value == "and":
        out = []
        for child in lst.items[1:]:
            out.extend(_conjunction(child))
        return out
    if lst.items and isinstance(lst.items[0], Sym) and lst.items[0].value == "not":
        if len(lst.items) != 2:
            raise PDDLError("'not' takes exactly one atom", lst.line, lst.col)
        atom, inner = _atom(lst.items[1])
        return [(atom, inner, True)]
    if lst.items and isinstance(lst.items[0], Sym) and lst.items[0].value in {"or", "imply", "forall", "exists", "when"}:
        raise PDDLError(f"unsupported connective {lst.items[0].value!r}", lst.line, lst.col)
    atom, lst = _atom(lst)
    return [(atom, lst, False)]


def _header(root: SList, kind: str) -> tuple[str, list]:
    items = list(root.items)
    if len(items) < 2 or _sym(items[0], "'define'") != "define":
        raise PDDLError("expected (define ...)", root.line, root.col)
    head = _list(items[1], f"({kind} <name>)")
    if len(head.items) != 2 or _sym(head.items[0], kind) != kind:
        raise PDDLError(f"expected ({kind} <name>)", head.line, head.col)
    return _sym(head.items[1], f"{kind} name"), items[2:]


def _section(node) -> tuple[str, SList]:
    lst = _list(node, "section")
    if not lst.items:
        raise PDDLError("empty section", lst.line, lst.col)
    key = _sym(lst.items[0], "section keyword")
    if not key.startswith(":"):
        raise PDDLError(f"expected section keyword, got {key!r}", lst.line, lst.col)
    return key, lst


def _check_atom(domain_preds: dict, atom: Atom, node: SList, arg_type, type_ok) -> None:
    schema = domain_preds.get(atom[0])
    if schema is None:
        raise PDDLError(f"undeclared predicate {atom[0]!r}", node.line, node.col)
    if len(atom) - 1 != len(schema.params):
        raise PDDLError(
            f"arity mismatch for {atom[0]!r}: expected {len(schema.params)}, got {len(atom) - 1}",
            node.line,
            node.col,
        )
    for arg, (_, want) in zip(atom[1:], schema.params):
        have = arg_type(arg, node)
        if not type_ok(have, want):
            raise PDDLError(f"type mismatch: {arg!r} is {have}, {atom[0]!r} expects {want}", node.line, node.col)


# -- domain ------------------------------------------------------------------------


def parse_domain(text: str) -> DomainDef:
    root = read_sexpr(text)
    name, sections = _header(root, "domain")
    requirements: tuple[str, ...] = ()
    types: list[tuple[str, str]] = []
    predicates: list[PredicateSchema] = []
    raw_actions: list[SList] = []
    for node in sections:
        key, lst = _section(node)
        if key == ":requirements":
            reqs = []
            for r in lst.items[1:]:
                flag = _sym(r, "requirement flag")
                if flag not in SUPPORTED_REQUIREMENTS:
                    raise PDDLError(f"unsupported requirement {flag}", r.line, r.col)
                reqs.append(flag)
            requirements = tuple(reqs)
        elif key == ":types":
            types = [(t, parent) for t, parent, _ in _typed_list(lst.items[1:], allow_vars=False)]
        elif key == ":predicates":
            for p in lst.items[1:]:
                plst = _list(p, "predicate schema")
                pname = _sym(plst.items[0], "predicate name") if plst.items else None
                if pname is None:
                    raise PDDLError("empty predicate schema", plst.line, plst.col)
                params = _typed_list(plst.items[1:], allow_vars=True)
                predicates.append(PredicateSchema(pname, tuple((v, t) for v, t, _ in params)))
        elif key == ":action":
            raw_actions.append(lst)
        else:
            raise PDDLError(f"unsupported domain section {key}", lst.line, lst.col)

    partial = DomainDef(name, requirements, tuple(types), tuple(predicates), ())
    declared = partial.declared_types()
    for t, parent in types:
        if parent not in declared:
            raise PDDLError(f"undeclared type {parent!r}", root.line, root.col)
    for p in predicates:
        for var, t in p.params:
            if t not in declared:
                raise PDDLError(f"undeclared type {t!r} in predicate {p.name!r}", root.line, root.col)
    preds = {p.name: p for p in predicates}
    actions = tuple(_parse_action(lst, partial, preds, declared) for lst in raw_actions)
    return DomainDef(name, requirements, tuple(types), tuple(predicates), actions)


def _parse_action(lst: SList, domain: DomainDef, preds: dict, declared: set) -> ActionSchema:
    items = list(lst.items)
    if len(items) < 2:
        raise PDDLError("action without a name", lst.line, lst.col)
    name = _sym(items[1], "action name")
    params: list[tuple[str, str]] = []
    pre: list[Atom] = []
    add: list[Atom] = []
    delete: list[Atom] = []
    i = 2
    fields: dict[str, object] = {}
    while i < len(items):
        key = _sym(items[i], "action keyword")
        if i + 1 >= len(items):
            raise PDDLError(f"missing value for {key}", items[i].line, items[i].col)
        fields[key] = items[i + 1]
        i += 2
    unknown = set(fields) - {":parameters", ":precondition", ":effect"}
    if unknown:
        raise PDDLError(f"unsupported action keyword {sorted(unknown)[0]}", lst.line, lst.col)
    if ":parameters" in fields:
        for var, t, node in _typed_list(_list(fields[":parameters"], "parameter list").items, allow_vars=True):
            if t not in declared:
                raise PDDLError(f"undeclared type {t!r}", node.line, node.col)
            params.append((var, t))
    var_types = dict(params)

    def arg_type(arg: str, node: SList) -> str:
        if arg not in var_types:
            raise PDDLError(f"unknown variable {arg!r} in action {name!r}", node.line, node.col)
        return var_types[arg]

    if ":precondition" in fields:
        for atom, node, negated in _conjunction(fields[":precondition"]):
            if negated:
                raise PDDLError("negative preconditions are not supported", node.line, node.col)
            _check_atom(preds, atom, node, arg_type, domain.is_subtype)
            pre.append(atom)
    if ":effect" in fields:
        for atom, node, negated in _conjunction(fields[":effect"]):
            _check_atom(preds, atom, node, arg_type, domain.is_subtype)
            (delete if negated else add).append(atom)
    return ActionSchema(name, tuple(params), tuple(pre), tuple(add), tuple(delete))


def _fmt_typed(pairs: Iterable[tuple[str, str]]) -> str:
    """Group consecutive names sharing a type: ``a b - t c - u``."""
    parts: list[str] = []
    for t, group in itertools.groupby(pairs, key=lambda p: p[1]):
        names = " ".join(n for n, _ in group)
        parts.append(f"{names} - {t}")
    return " ".join(parts)


def _fmt_atom(atom: Atom) -> str:
    return "(" + " ".join(atom) + ")"


def _fmt_conj(atoms: list[str]) -> str:
    if len(atoms) == 1:
        return atoms[0]
    return "(and " + " ".join(atoms) + ")"


def emit_domain(domain: DomainDef) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        lines.append(f"  (:types {_fmt_typed(domain.types)})")
    lines.append("  (:predicates")
    for p in domain.predicates:
        params = _fmt_typed(p.params)
        lines.append(f"    ({p.name}{' ' + params if params else ''})")
    lines[-1] += ")"
    for a in domain.actions:
        lines.append(f"  (:action {a.name}")
        lines.append(f"    :parameters ({_fmt_typed(a.params)})")
        if a.precondition:
            lines.append(f"    :precondition {_fmt_conj([_fmt_atom(x) for x in a.precondition])}")
        effects = [_fmt_atom(x) for x in a.add] + [f"(not {_fmt_atom(x)})" for x in a.delete]
        if effects:
            lines.append(f"    :effect {_fmt_conj(effects)}")
        lines[-1] += ")"
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


# -- problem -----------------------------------------------------------------------


def parse_problem(text: str, domain: DomainDef) -> ProblemDef:
    root = read_sexpr(text)
    name, sections = _header(root, "problem")
    domain_name = None
    objects: list[tuple[str, str]] = []
    init_nodes: list = []
    goal_node = None
    declared = domain.declared_types()
    for node in sections:
        key, lst = _section(node)
        if key == ":domain":
            domain_name = _sym(lst.items[1], "domain name") if len(lst.items) == 2 else None
            if domain_name != domain.name:
                raise PDDLError(f"domain mismatch: problem targets {domain_name!r}", lst.line, lst.col)
        elif key == ":objects":
            seen = set()
            for obj, t, sym in _typed_list(lst.items[1:], allow_vars=False):
                if t not in declared:
                    raise PDDLError(f"undeclared type {t!r}", sym.line, sym.col)
                if obj in seen:
                    raise PDDLError(f"object {obj!r} declared twice", sym.line, sym.col)
                seen.add(obj)
                objects.append((obj, t))
        elif key == ":init":
            init_nodes = list(lst.items[1:])
        elif key == ":goal":
            if len(lst.items) != 2:
                raise PDDLError("goal must be a single formula", lst.line, lst.col)
            goal_node = lst.items[1]
        else:
            raise PDDLError(f"unsupported problem section {key}", lst.line, lst.col)
    if domain_name is None:
        raise PDDLError("missing (:domain ...) section", root.line, root.col)

    obj_types = dict(objects)
    preds = {p.name: p for p in domain.predicates}

    def arg_type(arg: str, node: SList) -> str:
        if arg.startswith("?"):
            raise PDDLError(f"non-ground atom: variable {arg!r}", node.line, node.col)
        if arg not in obj_types:
            raise PDDLError(f"undeclared object {arg!r}", node.line, node.col)
        return obj_types[arg]

    init: set[Atom] = set()
    for node in init_nodes:
        atom, lst = _atom(node, "initial literal")
        _check_atom(preds, atom, lst, arg_type, domain.is_subtype)
        if atom in init:
            raise PDDLError(f"duplicate initial literal {_fmt_atom(atom)}", lst.line, lst.col)
        init.add(atom)
    goal: list[Atom] = []
    if goal_node is not None:
        for atom, lst, negated in _conjunction(goal_node):
            if negated:
                raise PDDLError("negative goals are not supported", lst.line, lst.col)
            _check_atom(preds, atom, lst, arg_type, domain.is_subtype)
            goal.append(atom)
    return ProblemDef(name, domain_name, tuple(objects), frozenset(init), tuple(goal))


def emit_problem_def(problem: ProblemDef) -> str:
    objs = sorted(problem.objects, key=lambda p: (p[1], p[0]))
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    lines.append("  (:objects")
    for t, group in itertools.groupby(objs, key=lambda p: p[1]):
        lines.append(f"    {' '.join(n for n, _ in group)} - {t}")
    lines[-1] += ")"
    lines.append("  (:init")
    for atom in sorted(problem.init):
        lines.append(f"    {_fmt_atom(atom)}")
    lines[-1] += ")"
    goal = [_fmt_atom(a) for a in problem.goal]
    lines.append(f"  (:goal (and {' '.join(goal)})))")
    return "\n".join(lines) + "\n"


# -- grounding -------------------------------------------------------------------------


def ground(domain: DomainDef, problem: ProblemDef) -> GroundedWorld:
    types = problem.object_types()

    def of_type(t: str) -> list[str]:
        return sorted(o for o, ot in types.items() if domain.is_subtype(ot, t))

    locations = of_type("location")
    agents = of_type("agent")
    containers = of_type("container")
    portables_ids = of_type("portable")
    kinds = {v: types[v] for v in of_type("value")}

    by_pred: dict[str, list[Atom]] = {}
    for atom in sorted(problem.init):
        by_pred.setdefault(atom[0], []).append(atom[1:])

    adjacency = set()
    for a, b in by_pred.get("adjacent", []):
        if a == b:
            raise GroundingError(f"location {a!r} adjacent to itself")
        adjacency.add((a, b))
        adjacency.add((b, a))

    def single(pred: str, subject: str, kind: str) -> str:
        hits = [args[1] for args in by_pred.get(pred, []) if args[0] == subject]
        if len(hits) != 1:
            raise GroundingError(f"{kind} {subject!r} must have exactly one {pred} atom, found {len(hits)}")
        return hits[0]

    agent_at = {a: single("agent-at", a, "agent") for a in agents}
    container_at = {c: single("container-at", c, "container") for c in containers}
    container_open = {}
    open_set = {args[0] for args in by_pred.get("open", [])}
    closed_set = {args[0] for args in by_pred.get("closed", [])}
    for c in containers:
        if (c in open_set) == (c in closed_set):
            raise GroundingError(f"container {c!r} must be exactly one of open/closed")
        container_open[c] = c in open_set

    free = {o: l for o, l in by_pred.get("at", [])}
    contained = {o: c for o, c in by_pred.get("in", [])}
    holding = {o for _, o in by_pred.get("holding", [])}
    for o in portables_ids:
        modes = sum(1 for args in by_pred.get("at", []) if args[0] == o)
        modes += sum(1 for args in by_pred.get("in", []) if args[0] == o)
        modes += o in holding
        if modes > 1:
            raise GroundingError(f"object placed twice: {o!r}")
        if modes == 0:
            raise GroundingError(f"object placed nowhere: {o!r}")
    if holding:
        raise GroundingError("initial holding atoms are not supported")

    portables = {}
    for o in portables_ids:
        attrs = sorted((kinds[v], v) for x, v in by_pred.get("has-attr", []) if x == o)
        portables[o] = Portable(types[o], tuple(attrs))

    actors = frozenset(a for (a,) in by_pred.get("can-act", []))
    world = GroundedWorld(
        locations=tuple(locations),
        adjacency=frozenset(adjacency),
        agents=tuple(agents),
        actors=actors,
        containers=tuple(containers),
        portables=portables,
        agent_at=agent_at,
        free=free,
        contained=contained,
        container_at=container_at,
        container_open=container_open,
    )
    check_world(world)
    return world


def check_world(world: GroundedWorld) -> None:
    """Raise GroundingError unless the layout invariants hold."""
    for a, b in world.adjacency:
        if a == b:
            raise GroundingError(f"location {a!r} adjacent to itself")
        if (b, a) not in world.adjacency:
            raise GroundingError(f"adjacency not symmetric for {a!r}-{b!r}")
        if a not in world.locations or b not in world.locations:
            raise GroundingError(f"adjacency mentions unknown location in {a!r}-{b!r}")
    if world.locations:
        start = world.locations[0]
        seen = {start}
        queue = deque([start])
        while queue:
            for nxt in world.neighbors(queue.popleft()):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if len(seen) != len(world.locations):
            missing = sorted(set(world.locations) - seen)
            raise GroundingError(f"disconnected location graph: {', '.join(missing)} unreachable")
    for o in world.portables:
        modes = (o in world.free) + (o in world.contained)
        if modes > 1:
            raise GroundingError(f"object placed twice: {o!r}")
        if modes == 0:
            raise GroundingError(f"object placed nowhere: {o!r}")
    for o, loc in world.free.items():
        if loc not in world.locations:
            raise GroundingError(f"object {o!r} at unknown location {loc!r}")
    for o, c in world.contained.items():
        if c not in world.containers:
            raise GroundingError(f"object {o!r} inside unknown container {c!r}")
    for c in world.containers:
        if world.container_at.get(c) not in world.locations:
            raise GroundingError(f"container {c!r} has no valid location")
        if c not in world.container_open:
            raise GroundingError(f"container {c!r} has no open/closed state")
    for a in world.agents:
        if world.agent_at.get(a) not in world.locations:
            raise GroundingError(f"agent {a!r} has no valid location")
    for edge, length in world.lengths.items():
        a, b = sorted(edge)
        if (a, b) not in world.adjacency or length <= 0:
            raise GroundingError(f"bad corridor length for {a!r}-{b!r}")


def ground_actions(domain: DomainDef, problem: ProblemDef) -> list[tuple[str, tuple[str, ...]]]:
    """All type-consistent instantiations of every action schema."""
    types = problem.object_types()
    out = []
    for action in domain.actions:
        pools = [sorted(o for o, t in types.items() if domain.is_subtype(t, pt)) for _, pt in action.params]
        for combo in itertools.product(*pools):
            out.append((action.name, combo))
    return out


# -- shipped files and instance emission ----------------------------------------------


def reference_domain_text() -> str:
    return resources.files("perspact").joinpath("data/domain.pddl").read_text(encoding="utf-8")


def reference_domain() -> DomainDef:
    return parse_domain(reference_domain_text())


def problem_from_instance(instance: ScenarioInstance) -> ProblemDef:
    world = instance.world
    objects = [(l, "location") for l in world.locations]
    objects += [(a, "agent") for a in world.agents]
    objects += [(c, "container") for c in world.containers]
    objects += [(o, p.noun) for o, p in world.portables.items()]
    values = sorted({(v, k) for p in world.portables.values() for k, v in p.attributes})
    objects += values

    init: set[Atom] = set()
    init |= {("adjacent", a, b) for a, b in world.adjacency}
    init |= {("agent-at", a, l) for a, l in world.agent_at.items()}
    for a in sorted(world.actors):
        init |= {("can-act", a), ("hand-empty", a)}
    init |= {("container-at", c, l) for c, l in world.container_at.items()}
    init |= {("open" if is_open else "closed", c) for c, is_open in world.container_open.items()}
    init |= {("at", o, l) for o, l in world.free.items()}
    init |= {("in", o, c) for o, c in world.contained.items()}
    init |= {("reachable", o, l) for o, l in world.free.items()}
    init |= {
        ("reachable", o, world.container_at[c]) for o, c in world.contained.items() if world.container_open[c]
    }
    init |= {("has-attr", o, v) for o, p in world.portables.items() for _, v in p.attributes}
    name = f"{instance.family.value.lower()}-{instance.seed}"
    return ProblemDef(
        name=name,
        domain_name="household",
        objects=tuple(sorted(objects, key=lambda p: (p[1], p[0]))),
        init=frozenset(init),
        goal=(("holding", vocab.MATCHER, instance.target),),
    )


def emit_problem(instance: ScenarioInstance) -> str:
    """Problem file for the physical (non-epistemic) projection of an instance."""
    from .scenarios import validate

    problems = validate(instance)
    if problems:
        raise ValueError(f"refusing to emit invalid instance: {'; '.join(problems)}")
    return emit_problem_def(problem_from_instance(instance))
