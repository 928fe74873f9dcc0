"""Trial orchestration and JSON-lines trial logs."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .agents import (
    DIRECTORS,
    MATCHERS,
    Done,
    ProtocolFailure,
    TrialContext,
    make_director,
    make_matcher,
)
from .llm import EndpointConfig, GatewayError, Transport, make_transport
from .scenarios import FAMILIES, Family, ScenarioInstance, generate, reference_instance
from .world import MATCHER, Ask, Move, Open, Take, apply_action, init_world, render_observation, visible_set

log = logging.getLogger(__name__)

STEP_FIELDS = ("kind", "trial", "step", "action", "event", "reason", "answer", "obs_hash")
TRAILER_FIELDS = (
    "kind", "trial", "family", "seed", "policy", "director", "success", "first_take_correct",
    "steps", "asks", "moves", "opens", "takes", "rejected", "failure", "transcript",
)  # fmt: skip


@dataclass
class RunConfig:
    families: tuple = FAMILIES
    source: str = "reference"  # reference | generated
    policy: str = "greedy-literal"
    director: str = "rule"
    trials: int = 5
    max_steps: int = 15
    seed: int = 0
    out: str | None = None
    parallel: int = 1
    transport: str = "playback"
    transcript: str | None = None
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    timing: bool = False

    def __post_init__(self):
        self.families = tuple(Family.parse(f) if isinstance(f, str) else f for f in self.families)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.policy not in MATCHERS:
            raise ValueError(f"unknown policy {self.policy!r}; choose from {', '.join(MATCHERS)}")
        if self.director not in DIRECTORS:
            raise ValueError(f"unknown director {self.director!r}; choose from {', '.join(DIRECTORS)}")
        if self.source not in ("reference", "generated"):
            raise ValueError(f"unknown scenario source {self.source!r}")
        if self.parallel < 1:
            raise ValueError("parallel must be >= 1")

    @property
    def model_backed(self) -> bool:
        return self.policy in ("single-shot", "react") or self.director == "model"

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        data = dict(data)
        if "endpoint" in data:
            data["endpoint"] = EndpointConfig(**data["endpoint"])
        if "families" in data:
            data["families"] = tuple(data["families"])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class StepEntry:
    step: int
    action: str
    event: str
    obs_hash: str
    reason: str | None = None
    answer: str | None = None


@dataclass
class TrialRecord:
    trial: str
    family: Family
    seed: int
    policy: str
    director: str
    entries: list = field(default_factory=list)
    success: bool = False
    first_take_correct: bool | None = None
    steps: int = 0
    asks: int = 0
    moves: int = 0
    opens: int = 0
    takes: int = 0
    rejected: int = 0
    failure: str | None = None
    wall_time_s: float | None = None
    transcript: str | None = None


def obs_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def trial_seed(config: RunConfig, family: Family, trial_index: int) -> int:
    """Global seed + family index x 1000 + trial index (family index in canonical order)."""
    return config.seed + FAMILIES.index(family) * 1000 + trial_index


def run_trial(
    config: RunConfig,
    instance: ScenarioInstance,
    matcher,
    director,
    trial: str = "trial",
    on_step: Callable | None = None,
) -> TrialRecord:
    """Observe, decide, act until the target is taken or the step cap is hit."""
    t0 = time.perf_counter()
    record = TrialRecord(
        trial=trial,
        family=instance.family,
        seed=instance.seed,
        policy=getattr(matcher, "name", type(matcher).__name__),
        director=getattr(director, "name", type(director).__name__),
        transcript=config.transcript if config.model_backed else None,
    )
    state = init_world(instance)
    context = TrialContext(instruction=f"Bring me {instance.instruction.phrasing}.")
    observation = render_observation(state, MATCHER)
    context.observe(observation, visible_set(state, MATCHER))

    for step in range(config.max_steps):
        try:
            decision = matcher.next_action(context, observation)
        except (ProtocolFailure, GatewayError) as exc:
            record.failure = f"{type(exc).__name__}: {exc}"
            break
        action = decision.action
        answer = None
        if isinstance(action, Done):
            event, reason = "rejected", "done before success"
            next_state = state
        else:
            outcome = apply_action(state, MATCHER, action)
            event, reason, next_state = outcome.event, outcome.reason, outcome.state
            if event == "asked":
                try:
                    answer = director.answer(action.question, instance, record.asks)
                except GatewayError as exc:
                    record.failure = f"{type(exc).__name__}: {exc}"
                    break
                context.answers.append(answer)
        if on_step is not None:
            on_step(state, action, event, next_state)
        state = next_state

        record.steps += 1
        if event == "rejected":
            record.rejected += 1
        elif isinstance(action, Ask):
            record.asks += 1
        elif isinstance(action, Move):
            record.moves += 1
        elif isinstance(action, Open):
            record.opens += 1
        elif isinstance(action, Take):
            record.takes += 1
            if record.first_take_correct is None:
                record.first_take_correct = event == "took-correct"

        context.record(action, event if reason is None else f"{event} ({reason})")
        observation = render_observation(state, MATCHER)
        context.observe(observation, visible_set(state, MATCHER))
        record.entries.append(
            StepEntry(step, str(action), event, obs_hash(observation), reason, answer.text if answer else None)
        )
        if event == "took-correct":
            record.success = True
            break
    record.wall_time_s = time.perf_counter() - t0
    return record


def suite_plan(config: RunConfig) -> list[tuple[str, ScenarioInstance]]:
    jobs = []
    for family in config.families:
        for t in range(config.trials):
            seed = trial_seed(config, family, t)
            if config.source == "generated":
                instance = generate(family, seed)
            else:
                instance = dataclasses.replace(reference_instance(family), seed=seed)
            jobs.append((f"{family.short}-{t}", instance))
    return jobs


def run_suite(config: RunConfig, transport: Transport | None = None) -> list[TrialRecord]:
    if transport is None and config.model_backed:
        transport = make_transport(config.transport, config.endpoint, config.transcript)
    settings = config.endpoint.settings

    def one(job: tuple[str, ScenarioInstance]) -> TrialRecord:
        trial, instance = job
        try:
            matcher = make_matcher(config.policy, instance, transport, settings)
            director = make_director(config.director, transport, settings)
            return run_trial(config, instance, matcher, director, trial)
        except Exception as exc:  # one broken trial must not abort the suite
            log.exception("trial %s crashed", trial)
            return TrialRecord(trial, instance.family, instance.seed, config.policy, config.director, failure=f"crash: {exc}")

    jobs = suite_plan(config)
    if config.parallel > 1:
        with ThreadPoolExecutor(max_workers=config.parallel) as pool:
            return list(pool.map(one, jobs))
    return [one(job) for job in jobs]


# -- JSON lines ------------------------------------------------------------------------------


def record_lines(record: TrialRecord, timing: bool = False) -> list[str]:
    lines = []
    for e in record.entries:
        row = {"kind": "step", "trial": record.trial, **asdict(e)}
        lines.append(json.dumps({k: row[k] for k in STEP_FIELDS}))
    trailer = {
        "kind": "trial",
        "trial": record.trial,
        "family": record.family.value,
        "seed": record.seed,
        "policy": record.policy,
        "director": record.director,
        "success": record.success,
        "first_take_correct": record.first_take_correct,
        "steps": record.steps,
        "asks": record.asks,
        "moves": record.moves,
        "opens": record.opens,
        "takes": record.takes,
        "rejected": record.rejected,
        "failure": record.failure,
        "transcript": record.transcript,
    }
    if timing:
        trailer["wall_time_s"] = round(record.wall_time_s or 0.0, 6)
    lines.append(json.dumps(trailer))
    return lines


def write_records(records: Iterable[TrialRecord], path: str | Path, timing: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            for line in record_lines(rec, timing):
                fh.write(line + "\n")
    return path


def read_records(path: str | Path) -> list[TrialRecord]:
    pending: dict[str, list[StepEntry]] = {}
    records = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            row = json.loads(line)
            if row.get("kind") == "step":
                pending.setdefault(row["trial"], []).append(
                    StepEntry(row["step"], row["action"], row["event"], row["obs_hash"], row.get("reason"), row.get("answer"))
                )
            elif row.get("kind") == "trial":
                rec = TrialRecord(
                    trial=row["trial"],
                    family=Family.parse(row["family"]),
                    seed=row["seed"],
                    policy=row["policy"],
                    director=row["director"],
                    entries=pending.pop(row["trial"], []),
                    success=row["success"],
                    first_take_correct=row["first_take_correct"],
                    steps=row["steps"],
                    asks=row["asks"],
                    moves=row["moves"],
                    opens=row["opens"],
                    takes=row["takes"],
                    rejected=row["rejected"],
                    failure=row["failure"],
                    wall_time_s=row.get("wall_time_s"),
                    transcript=row.get("transcript"),
                )
                records.append(rec)
            else:
                raise ValueError(f"{path}:{n}: unknown line kind {row.get('kind')!r}")
    return records
