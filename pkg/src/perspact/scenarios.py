"""The seven scenario families: fixed reference encodings, seeded variants and validation."""

from __future__ import annotations

import dataclasses
import hashlib
import random
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from . import vocab
from .pddl import GroundedWorld, GroundingError, Portable, check_world, ground, parse_problem, reference_domain
from .vocab import DIRECTOR, MATCHER


class Family(str, Enum):
    BASE = "Base"
    PERSP = "Persp"
    DISTRACTOR = "Distractor"
    FAR = "Far"
    NEAR = "Near"
    HIDDEN = "Hidden"
    NOTTHAT = "NotThat"

    @property
    def short(self) -> str:
        return SHORT_NAMES[self]

    @classmethod
    def parse(cls, name: str) -> Family:
        key = name.strip().lower()
        for fam in cls:
            if key in (fam.value.lower(), fam.short.lower()):
                return fam
        raise ValueError(f"unknown scenario family {name!r}")


FAMILIES = tuple(Family)
SHORT_NAMES = {
    Family.BASE: "Base",
    Family.PERSP: "Persp",
    Family.DISTRACTOR: "Dist",
    Family.FAR: "Far",
    Family.NEAR: "Near",
    Family.HIDDEN: "Hidd",
    Family.NOTTHAT: "NotThat",
}


@dataclass(frozen=True)
class InstructionDescriptor:
    noun: str
    attribute: tuple[str, str] | None = None  # (kind, value)

    @property
    def object_phrase(self) -> str:
        return f"{self.attribute[1]} {self.noun}" if self.attribute else self.noun

    @property
    def phrasing(self) -> str:
        return f"the {self.object_phrase}"

    def matches(self, portable: Portable) -> bool:
        if portable.noun != self.noun:
            return False
        return self.attribute is None or portable.attribute(self.attribute[0]) == self.attribute[1]


@dataclass(frozen=True)
class ScenarioInstance:
    family: Family
    world: GroundedWorld
    target: str
    instruction: InstructionDescriptor
    distractor: str | None = None
    seed: int = 0

    @property
    def matcher_start(self) -> str:
        return self.world.agent_at[MATCHER]

    @property
    def director_location(self) -> str:
        return self.world.agent_at[DIRECTOR]

    def matching_objects(self) -> list[str]:
        return sorted(o for o, p in self.world.portables.items() if self.instruction.matches(p))


class GenerationError(RuntimeError):
    pass


# -- construction helpers ----------------------------------------------------------


def _portable(noun: str, value: str) -> tuple[str, Portable]:
    kind = vocab.NOUNS[noun][0]
    return vocab.object_id(noun, value), Portable(noun, ((kind, value),))


def build_world(
    edges: list[tuple[str, str]],
    matcher: str,
    director: str,
    objects: dict[str, tuple[Portable, str]],
    containers: dict[str, tuple[str, bool]] | None = None,
    lengths: dict[tuple[str, str], float] | None = None,
) -> GroundedWorld:
    """Assemble a layout. ``objects`` maps id -> (portable, place), place being a room or container."""
    containers = containers or {}
    locations = sorted({x for e in edges for x in e} | {matcher, director})
    adjacency = frozenset(edges) | frozenset((b, a) for a, b in edges)
    free = {o: place for o, (_, place) in objects.items() if place not in containers}
    contained = {o: place for o, (_, place) in objects.items() if place in containers}
    world = GroundedWorld(
        locations=tuple(locations),
        adjacency=adjacency,
        agents=tuple(sorted((DIRECTOR, MATCHER))),
        actors=frozenset({MATCHER}),
        containers=tuple(sorted(containers)),
        portables={o: p for o, (p, _) in objects.items()},
        agent_at={MATCHER: matcher, DIRECTOR: director},
        free=free,
        contained=contained,
        container_at={c: loc for c, (loc, _) in containers.items()},
        container_open={c: is_open for c, (_, is_open) in containers.items()},
        lengths={frozenset(e): w for e, w in (lengths or {}).items() if w != 1},
    )
    check_world(world)
    return world


# Reference map: hallway - bedroom - kitchen - closet (L2 - L1 - L3 - L4).
L1, L2, L3, L4 = vocab.ROOMS[0], vocab.ROOMS[1], vocab.ROOMS[2], vocab.ROOMS[3]
_REF_EDGES = [(L1, L2), (L1, L3), (L3, L4)]


def build_reference(family: Family | str) -> ScenarioInstance:
    """In-code source of the shipped reference files (see ``reference_instance``)."""
    family = Family.parse(family) if isinstance(family, str) else family
    red_id, red = _portable("tie", "red")
    blue_id, blue = _portable("tie", "blue")
    ambiguous = InstructionDescriptor("tie")
    constrained = InstructionDescriptor("tie", ("color", "red"))
    lengths = None
    containers = None
    distractor: str | None = blue_id

    if family is Family.BASE:
        director, objects, instruction = L2, {red_id: (red, L1), blue_id: (blue, L2)}, constrained
    elif family is Family.PERSP:
        director, objects, instruction = L2, {red_id: (red, L1), blue_id: (blue, L3)}, ambiguous
    elif family is Family.DISTRACTOR:
        director, instruction = L2, constrained
        containers = {"basket": (L2, True)}
        objects = {red_id: (red, "basket"), blue_id: (blue, L3)}
    elif family is Family.FAR:
        director, objects, instruction = L2, {red_id: (red, L2), blue_id: (blue, L1)}, ambiguous
    elif family is Family.NEAR:
        director, objects, instruction = L1, {red_id: (red, L2), blue_id: (blue, L3)}, constrained
        lengths = {(L1, L3): 2}
    elif family is Family.HIDDEN:
        director, instruction, distractor = L3, ambiguous, None
        containers = {"basket": (L3, True)}
        objects = {red_id: (red, "basket")}
    else:
        director, instruction = L1, ambiguous
        containers = {"basket": (L1, True)}
        objects = {red_id: (red, "basket"), blue_id: (blue, L1)}

    world = build_world(_REF_EDGES, L1, director, objects, containers, lengths)
    return ScenarioInstance(family, world, red_id, instruction, distractor, seed=0)


# -- seeded generation ---------------------------------------------------------------------


def _random_layout(rng: random.Random) -> tuple[list[str], list[tuple[str, str]], dict]:
    rooms = list(vocab.ROOMS)
    rng.shuffle(rooms)
    m, a, b = rooms[0], rooms[1], rooms[2]
    edges = [(m, a), (m, b)]
    if rng.random() < 0.75:
        edges.append((rng.choice([m, a, b]), rooms[3]))
    else:
        rooms = rooms[:3]
    lengths = {e: rng.choice([1, 1, 2, 3]) for e in edges}
    return rooms, edges, lengths


def _generate_once(family: Family, seed: int, rng: random.Random) -> ScenarioInstance:
    rooms, edges, lengths = _random_layout(rng)
    m, a, b = rooms[0], rooms[1], rooms[2]
    noun = rng.choice(sorted(vocab.NOUNS))
    kind, values = vocab.NOUNS[noun]
    target_value, distractor_value = rng.sample(values, 2)
    t_id, t_obj = _portable(noun, target_value)
    d_id, d_obj = _portable(noun, distractor_value)
    ambiguous = InstructionDescriptor(noun)
    constrained = InstructionDescriptor(noun, (kind, target_value))
    pool = list(vocab.CONTAINERS)
    rng.shuffle(pool)
    containers: dict[str, tuple[str, bool]] = {}

    def box(loc: str) -> str:
        name = pool.pop()
        containers[name] = (loc, True)
        return name

    distractor: str | None = d_id
    near, far = (a, b) if rng.random() < 0.5 else (b, a)
    if family is Family.BASE:
        n = near
        director = rng.choice([m, n])
        objects = {t_id: (t_obj, m), d_id: (d_obj, n)}
        instruction = constrained
    elif family is Family.PERSP:
        # director sits in ``near``; the distractor is out of its sight in ``far``
        director = near
        t_place = rng.choice([m, near])
        objects = {t_id: (t_obj, t_place), d_id: (d_obj, far)}
        instruction = ambiguous
    elif family is Family.DISTRACTOR:
        director = near
        d_place = far if rng.random() < 0.5 else box(m)
        objects = {t_id: (t_obj, box(near)), d_id: (d_obj, d_place)}
        instruction = constrained
    elif family is Family.FAR:
        if rng.random() < 0.5:
            director = rng.choice([m, near])
            objects = {t_id: (t_obj, near), d_id: (d_obj, m)}
        else:
            director = m
            lengths[(m, near)], lengths[(m, far)] = 1, rng.choice([2, 3])
            objects = {t_id: (t_obj, far), d_id: (d_obj, near)}
        instruction = ambiguous
    elif family is Family.NEAR:
        if rng.random() < 0.5:
            director = rng.choice([m, near])
            objects = {t_id: (t_obj, m), d_id: (d_obj, near)}
        else:
            director = m
            lengths[(m, near)], lengths[(m, far)] = 1, rng.choice([2, 3])
            objects = {t_id: (t_obj, near), d_id: (d_obj, far)}
        instruction = constrained
    elif family is Family.HIDDEN:
        director = near
        objects = {t_id: (t_obj, box(near))}
        distractor = None
        instruction = ambiguous
    else:
        director = m
        objects = {t_id: (t_obj, box(m)), d_id: (d_obj, m)}
        instruction = ambiguous

    # clutter: other nouns, free or in extra containers
    for _ in range(rng.randint(0, 2)):
        if pool and rng.random() < 0.5:
            name = pool.pop()
            containers[name] = (rng.choice(rooms), rng.random() < 0.5)
    other_nouns = [x for x in sorted(vocab.NOUNS) if x != noun]
    for clutter_noun in rng.sample(other_nouns, rng.randint(0, 2)):
        value = rng.choice(vocab.NOUNS[clutter_noun][1])
        c_id, c_obj = _portable(clutter_noun, value)
        places = list(rooms) + sorted(containers)
        objects[c_id] = (c_obj, rng.choice(places))

    world = build_world(edges, m, director, objects, containers, lengths)
    return ScenarioInstance(family, world, t_id, instruction, distractor, seed)


def generate(family: Family | str, seed: int, max_retries: int = 20) -> ScenarioInstance:
    family = Family.parse(family) if isinstance(family, str) else family
    rng = random.Random(seed)
    last: list[str] = []
    for _ in range(max_retries):
        instance = _generate_once(family, seed, rng)
        last = validate(instance)
        if not last:
            return instance
    raise GenerationError(f"{family.value} seed {seed}: no valid instance after {max_retries} tries ({last})")


# -- validation --------------------------------------------------------------------------


def structural_violations(instance: ScenarioInstance) -> list[str]:
    out: list[str] = []
    w = instance.world
    try:
        check_world(w)
    except GroundingError as exc:
        out.append(f"layout: {exc}")
    for agent in (MATCHER, DIRECTOR):
        if agent not in w.agent_at:
            out.append(f"missing-agent: {agent}")
    if MATCHER not in w.actors:
        out.append("matcher-cannot-act")
    if DIRECTOR in w.actors:
        out.append("director-must-not-act")
    if instance.target not in w.portables:
        out.append("target-not-portable")
    elif not instance.instruction.matches(w.portables[instance.target]):
        out.append("instruction-unsatisfiable")
    if instance.distractor is not None:
        if instance.distractor not in w.portables:
            out.append("distractor-not-portable")
        elif instance.distractor == instance.target:
            out.append("distractor-is-target")
    if instance.instruction.attribute is not None and len(instance.matching_objects()) != 1:
        out.append("attribute-instruction-not-unique")
    return out


def _seen(instance: ScenarioInstance, observer: str) -> tuple[set[str], set[str]]:
    """(all visible objects, free-standing visible objects) for an observer at the start."""
    from .world import init_world, visible_set

    report = visible_set(init_world(instance), observer)
    return report.objects(), {o for o, _ in report.free_objects}


def validate(instance: ScenarioInstance) -> list[str]:
    """Names of every violated clause; empty when the instance is well-formed for its family."""
    problems = structural_violations(instance)
    if problems:
        return problems
    from .world import init_world, visible_set

    fam = instance.family
    w = instance.world
    t, d = instance.target, instance.distractor
    state = init_world(instance)
    if DIRECTOR not in {a for a, _ in visible_set(state, MATCHER).agents}:
        problems.append("director-visible-at-start")

    m_all, m_free = _seen(instance, MATCHER)
    d_all, _ = _seen(instance, DIRECTOR)
    ambiguous = instance.instruction.attribute is None
    matching = instance.matching_objects()

    def need(ok: bool, clause: str) -> None:
        if not ok:
            problems.append(clause)

    if fam is not Family.HIDDEN:
        need(d is not None and w.portables[d].noun == w.portables[t].noun, "distractor-same-type")
        if problems:
            return problems
    candidates = {t, d} - {None}

    def dist(obj: str) -> float:
        return w.distance(instance.matcher_start, w.place_location(w.object_place(obj)))

    if fam is Family.BASE:
        need(candidates <= m_all and candidates <= d_all, "both-see-both")
        need(w.free.get(t) == instance.matcher_start, "target-at-matcher-location")
        need(not ambiguous, "instruction-attribute-constrained")
    elif fam is Family.PERSP:
        need(candidates <= m_all, "matcher-sees-both")
        need(d_all & candidates == {t}, "director-sees-exactly-one")
        need(ambiguous and len(matching) >= 2, "instruction-ambiguous")
    elif fam is Family.DISTRACTOR:
        need(m_all & candidates == {d}, "matcher-sees-distractor-only")
        need(d_all & candidates == {t}, "director-sees-target-only")
        need(w.portables[t].attributes != w.portables[d].attributes, "attributes-differ")
        need(not ambiguous, "instruction-attribute-constrained")
    elif fam is Family.FAR:
        need(candidates <= m_all and candidates <= d_all, "both-see-both")
        need(dist(d) < dist(t), "matcher-closer-to-distractor")
        need(ambiguous and len(matching) >= 2, "instruction-ambiguous")
    elif fam is Family.NEAR:
        need(candidates <= m_all and candidates <= d_all, "both-see-both")
        need(dist(t) < dist(d), "matcher-closer-to-target")
        need(not ambiguous, "instruction-attribute-constrained")
    elif fam is Family.HIDDEN:
        need(not (m_all & set(matching)), "matcher-sees-no-match")
        need(t in d_all, "director-sees-target")
        need(matching == [t], "unique-match")
    elif fam is Family.NOTTHAT:
        need(m_free & candidates == {d}, "salient-view-distractor-only")
        c = w.contained.get(t)
        need(
            c is not None and w.container_open[c] and w.container_at[c] == instance.matcher_start,
            "target-in-open-container-here",
        )
        need(candidates <= d_all, "director-sees-both")
        need(ambiguous and len(matching) >= 2, "instruction-ambiguous")
    return problems


# -- files ---------------------------------------------------------------------------------


def sidecar_text(instance: ScenarioInstance) -> str:
    attr = instance.instruction.attribute
    lengths = ",".join(
        f"{a}:{b}:{instance.world.lengths[e]:g}"
        for e in sorted(instance.world.lengths, key=sorted)
        for a, b in [sorted(e)]
    )
    rows = [
        ("family", instance.family.value),
        ("target", instance.target),
        ("distractor", instance.distractor or ""),
        ("instruction_noun", instance.instruction.noun),
        ("instruction_attribute", f"{attr[0]}:{attr[1]}" if attr else ""),
        ("instruction", instance.instruction.phrasing),
        ("seed", str(instance.seed)),
        ("corridor_lengths", lengths),
    ]
    return "".join(f"{k}={v}\n" for k, v in rows)


def parse_sidecar(text: str) -> dict[str, str]:
    meta = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"sidecar line {n}: expected key=value")
        key, value = line.split("=", 1)
        meta[key.strip()] = value.strip()
    return meta


def instance_from_files(problem_text: str, sidecar: str) -> ScenarioInstance:
    domain = reference_domain()
    world = ground(domain, parse_problem(problem_text, domain))
    meta = parse_sidecar(sidecar)
    lengths = {}
    if meta.get("corridor_lengths"):
        for item in meta["corridor_lengths"].split(","):
            a, b, w = item.split(":")
            lengths[frozenset((a, b))] = float(w) if "." in w else int(w)
    world = dataclasses.replace(world, lengths=lengths)
    check_world(world)
    attr = meta.get("instruction_attribute") or None
    instruction = InstructionDescriptor(
        meta["instruction_noun"], tuple(attr.split(":", 1)) if attr else None
    )
    return ScenarioInstance(
        family=Family.parse(meta["family"]),
        world=world,
        target=meta["target"],
        instruction=instruction,
        distractor=meta.get("distractor") or None,
        seed=int(meta.get("seed", "0")),
    )


def write_instance(instance: ScenarioInstance, directory: Path) -> None:
    from .pddl import emit_problem, reference_domain_text

    directory.mkdir(parents=True, exist_ok=True)
    (directory / "domain.pddl").write_text(reference_domain_text(), encoding="utf-8")
    (directory / "problem.pddl").write_text(emit_problem(instance), encoding="utf-8")
    (directory / "meta.txt").write_text(sidecar_text(instance), encoding="utf-8")


def load_instance(directory) -> ScenarioInstance:
    """Read ``problem.pddl`` and ``meta.txt`` from a path or package resource."""
    directory = Path(directory) if isinstance(directory, str) else directory
    return instance_from_files(
        (directory / "problem.pddl").read_text(encoding="utf-8"),
        (directory / "meta.txt").read_text(encoding="utf-8"),
    )


def shipped_reference_dir(family: Family):
    return resources.files("perspact").joinpath(f"data/scenarios/reference/{family.value}")


def reference_instance(family: Family | str) -> ScenarioInstance:
    """The fixed, shipped encoding of a family."""
    family = Family.parse(family) if isinstance(family, str) else family
    return load_instance(shipped_reference_dir(family))


def instance_digest(instance: ScenarioInstance) -> str:
    from .pddl import emit_problem

    payload = emit_problem(instance) + "\n--\n" + sidecar_text(instance)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
