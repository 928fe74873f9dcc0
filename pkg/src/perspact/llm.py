"""Chat-completions client with record/playback transcripts, plus prompt assembly."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Protocol

import httpx

from . import vocab
from .world import init_world, visible_set

if TYPE_CHECKING:
    from .agents import TrialContext
    from .scenarios import ScenarioInstance

log = logging.getLogger(__name__)

API_KEY_ENV = "PERSPACT_API_KEY"
ROLES = ("system", "user", "assistant")

MATCHER_SYSTEM = (
    "You are the Matcher in this task.\n"
    "The task is to take an object that the Director asks you about.\n"
    "The object the Director is referring to is the {object}.\n"
    "The Director cannot act in the environment and only knows\n"
    "what he sees from his location."
)

ACTION_REMINDER = (
    "Think briefly, then end your reply with exactly one action line:\n"
    'move(<location>) | open(<container>) | take(<object>) | ask("<question>") | done'
)


class GatewayError(RuntimeError):
    pass


class GatewayTimeout(GatewayError):
    pass


class EndpointError(GatewayError):
    def __init__(self, status: int, body: str = ""):
        self.status = status
        super().__init__(f"endpoint returned HTTP {status}: {body[:200]}")


class TranscriptMiss(GatewayError):
    def __init__(self, request_hash: str):
        self.request_hash = request_hash
        super().__init__(f"transcript miss: no recorded response for request {request_hash}")


@dataclass(frozen=True)
class ModelSettings:
    model: str = "o3-mini"
    temperature: float = 0.0
    max_tokens: int = 512


@dataclass(frozen=True)
class ChatExchange:
    messages: tuple  # (role, text) pairs
    model: str
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self):
        if not self.messages or self.messages[0][0] != "system":
            raise ValueError("first message must have role 'system'")
        for i, (role, _) in enumerate(self.messages[1:]):
            expected = "user" if i % 2 == 0 else "assistant"
            if role != expected:
                raise ValueError(f"message {i + 1} has role {role!r}, expected {expected!r}")

    def payload(self) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": r, "content": t} for r, t in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    @property
    def request_hash(self) -> str:
        blob = json.dumps(self.payload(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def extend(self, assistant: str, user: str) -> ChatExchange:
        return ChatExchange(self.messages + (("assistant", assistant), ("user", user)), self.model, self.temperature, self.max_tokens)


@dataclass(frozen=True)
class TranscriptRecord:
    request_hash: str
    response: str
    latency_ms: float
    ts: str

    def to_json(self) -> str:
        return json.dumps(
            {"request_hash": self.request_hash, "response": self.response, "latency_ms": self.latency_ms, "ts": self.ts},
            ensure_ascii=False,
        )


def load_transcript(path: str | Path) -> list[TranscriptRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                records.append(TranscriptRecord(d["request_hash"], d["response"], d["latency_ms"], d["ts"]))
    return records


class Transport(Protocol):
    def complete(self, exchange: ChatExchange) -> str: ...


class LiveTransport:
    """POSTs to ``{base_url}/chat/completions``; retries transient failures."""

    RETRY_STATUS = frozenset({408, 429, 500, 502, 503, 504})

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        retries: int = 3,
        backoff: float = 1.0,
        sleep: Callable[[float], None] = time.sleep,
        http_transport: httpx.BaseTransport | None = None,
    ):
        self.retries = retries
        self.backoff = backoff
        self.sleep = sleep
        key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers, timeout=timeout, transport=http_transport)

    def complete(self, exchange: ChatExchange) -> str:
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                self.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post("/chat/completions", json=exchange.payload())
            except httpx.TimeoutException as exc:
                last = GatewayTimeout(f"request timed out ({exc.__class__.__name__})")
                log.warning("attempt %d/%d timed out", attempt + 1, self.retries + 1)
                continue
            except httpx.TransportError as exc:
                last = GatewayError(f"transport failure: {exc.__class__.__name__}")
                continue
            if resp.status_code in self.RETRY_STATUS:
                last = EndpointError(resp.status_code, resp.text)
                log.warning("attempt %d/%d got HTTP %d", attempt + 1, self.retries + 1, resp.status_code)
                continue
            if resp.status_code >= 400:
                raise EndpointError(resp.status_code, resp.text)
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (KeyError, IndexError, ValueError) as exc:
                raise GatewayError(f"malformed completion payload: {exc}") from exc
        assert last is not None
        raise last

    def close(self) -> None:
        self._client.close()


class FunctionTransport:
    """Wraps a plain callable; used for scripted responders and tests."""

    def __init__(self, fn: Callable[[ChatExchange], str]):
        self.fn = fn

    def complete(self, exchange: ChatExchange) -> str:
        return self.fn(exchange)


class RecordingTransport:
    def __init__(self, inner: Transport, path: str | Path):
        self.inner = inner
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, exchange: ChatExchange) -> str:
        t0 = time.perf_counter()
        text = self.inner.complete(exchange)
        rec = TranscriptRecord(
            request_hash=exchange.request_hash,
            response=text,
            latency_ms=round((time.perf_counter() - t0) * 1000, 3),
            ts=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(rec.to_json() + "\n")
        return text


class PlaybackTransport:
    """Replays recorded responses.

    ``keyed`` mode looks responses up by request hash (repeated identical
    requests are served in recorded order); ordered mode requires the
    requests to arrive in exactly the recorded sequence.
    """

    def __init__(self, records: list[TranscriptRecord], keyed: bool = True):
        self.keyed = keyed
        self._lock = threading.Lock()
        self._ordered = deque(records)
        self._by_hash: dict[str, deque] = defaultdict(deque)
        for rec in records:
            self._by_hash[rec.request_hash].append(rec)

    @classmethod
    def from_file(cls, path: str | Path, keyed: bool = True) -> PlaybackTransport:
        return cls(load_transcript(path), keyed=keyed)

    def complete(self, exchange: ChatExchange) -> str:
        h = exchange.request_hash
        with self._lock:
            if self.keyed:
                queue = self._by_hash.get(h)
                if not queue:
                    raise TranscriptMiss(h)
                rec = queue.popleft() if len(queue) > 1 else queue[0]
            else:
                if not self._ordered:
                    raise TranscriptMiss(h)
                rec = self._ordered.popleft()
                if rec.request_hash != h:
                    raise TranscriptMiss(h)
        if rec.request_hash != h:
            raise GatewayError(f"transcript hash collision for {h}")
        return rec.response


@dataclass
class EndpointConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "o3-mini"
    timeout_s: float = 60.0
    temperature: float = 0.0
    max_tokens: int = 512

    @property
    def settings(self) -> ModelSettings:
        return ModelSettings(self.model, self.temperature, self.max_tokens)


def make_transport(kind: str, endpoint: EndpointConfig, transcript: str | Path | None = None) -> Transport:
    if kind == "playback":
        if transcript is None:
            raise ValueError("playback transport needs a transcript file")
        return PlaybackTransport.from_file(transcript)
    live = LiveTransport(endpoint.base_url, timeout=endpoint.timeout_s)
    if kind == "live":
        return live
    if kind == "record":
        if transcript is None:
            raise ValueError("record transport needs a transcript file")
        return RecordingTransport(live, transcript)
    raise ValueError(f"unknown transport {kind!r}")


# -- prompts ------------------------------------------------------------------------


def _director_template() -> str:
    return resources.files("perspact").joinpath("data/prompts/director.txt").read_text(encoding="utf-8")


def director_template_digest() -> str:
    return hashlib.sha256(_director_template().encode("utf-8")).hexdigest()


def _ids_line(instance: ScenarioInstance, context: TrialContext) -> str:
    objects, containers = set(), set()
    for view in context.views:
        objects |= view.objects()
        containers |= {c for c, _, _ in view.containers}
    for ans in context.answers:
        if ans.grounding.obj:
            objects.add(ans.grounding.obj)
    parts = [f"locations: {', '.join(sorted(instance.world.locations))}"]
    if containers:
        parts.append(f"containers: {', '.join(sorted(containers))}")
    if objects:
        parts.append(f"objects: {', '.join(sorted(objects))}")
    return "Ids you can use -- " + "; ".join(parts) + "."


def build_matcher_prompt(
    instance: ScenarioInstance, context: TrialContext, settings: ModelSettings = ModelSettings()
) -> ChatExchange:
    messages = [("system", MATCHER_SYSTEM.format(object=instance.instruction.object_phrase))]
    answers = iter(context.answers)
    pending = f"Observation: {context.observations[0]}" if context.observations else ""
    for i, (action, event) in enumerate(context.actions):
        messages.append(("user", pending))
        messages.append(("assistant", str(action)))
        lines = [f"Result: {action} -> {event}"]
        if str(action).startswith("ask("):
            answer = next(answers, None)
            if answer is not None:
                lines.append(f"Director: {answer.text}")
        if i + 1 < len(context.observations):
            lines.append(f"Observation: {context.observations[i + 1]}")
        pending = "\n".join(lines)
    final = "\n".join(x for x in (pending, _ids_line(instance, context), ACTION_REMINDER) if x)
    messages.append(("user", final))
    return ChatExchange(tuple(messages), settings.model, settings.temperature, settings.max_tokens)


def place_phrase(instance: ScenarioInstance, obj: str, here: str) -> str:
    w = instance.world
    place = w.object_place(obj)
    loc = w.place_location(place)
    where = f"here in the {loc}, where I am" if loc == here else f"in the {loc}"
    if place in w.containers:
        return f"inside the {place}, {where}"
    return where


def build_director_prompt(
    instance: ScenarioInstance, question: str, settings: ModelSettings = ModelSettings()
) -> ChatExchange:
    if not question.strip():
        raise ValueError("question must be non-empty")
    w = instance.world
    here = instance.director_location
    report = visible_set(init_world(instance), vocab.DIRECTOR)
    seen = []
    for o, loc in report.free_objects:
        seen.append(f"- {vocab.with_article(w.portables[o].phrase)} ({'here' if loc == here else 'in the ' + loc})")
    for c, loc, is_open in report.containers:
        state = "open" if is_open else "closed"
        seen.append(f"- {vocab.with_article(state + ' ' + c)} ({'here' if loc == here else 'in the ' + loc})")
    for o, c in report.contents:
        seen.append(f"- {vocab.with_article(w.portables[o].phrase)} inside the {c}")
    for a, loc in report.agents:
        if a == vocab.MATCHER:
            seen.append(f"- the Matcher ({'here' if loc == here else 'in the ' + loc})")
    system = _director_template().format(
        location=here,
        target=w.portables[instance.target].phrase,
        target_place=place_phrase(instance, instance.target, here),
        visible="\n".join(seen) if seen else "- nothing of note",
    )
    return ChatExchange((("system", system.rstrip("\n")), ("user", question)), settings.model, settings.temperature, settings.max_tokens)
