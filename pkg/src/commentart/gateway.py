"""Uniform client for chat-completion endpoints plus offline transports.

Requests carry ordered content parts (frames first, then prompt text, then
the comments block for discriminative tasks). Every completed request is
appended to a run log keyed by a content hash so runs can be replayed
bit-for-bit without a network.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import threading
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence


class TransportError(RuntimeError):
    """Base for gateway/transport failures."""


class TransientTransportError(TransportError):
    """Retryable failure (timeouts, 429/5xx, flaky mocks)."""


class AuthenticationError(TransportError):
    pass


class ContentPolicyError(TransportError):
    pass


class RetryExhaustedError(TransportError):
    def __init__(self, attempts: int, last: Exception):
        super().__init__(f"gave up after {attempts} attempts: {last}")
        self.attempts = attempts
        self.last = last


class ScriptExhaustedError(TransportError):
    pass


class UnmatchedRequestError(TransportError):
    pass


# --- frame planning --------------------------------------------------------


@dataclass(frozen=True)
class FramePlan:
    mode: str  # fps_1 | fps_half | uniform_384 | uniform_fixed
    frame_count: int
    selected_indices: tuple[int, ...]


def _uniform_indices(count: int, available: int) -> tuple[int, ...]:
    # Evenly spaced, first index 0; consecutive gaps differ by at most 1.
    return tuple(i * available // count for i in range(count))


def frame_plan(duration_s: float, available_frames: int, policy: str = "dynamic", fixed_count: int = 50) -> FramePlan:
    """Pick frame indices per the duration-based sampling rules.

    Dynamic policy: under 128 s sample at 1 fps, under 768 s at 0.5 fps,
    otherwise 384 uniform frames. fixed_50 takes ``fixed_count`` uniform
    frames. Counts are always capped at the frames actually available.
    """
    if duration_s < 0:
        raise ValueError("duration_s must be >= 0")
    if available_frames < 0:
        raise ValueError("available_frames must be >= 0")

    if policy == "fixed_50":
        mode, want = "uniform_fixed", fixed_count
    elif policy == "dynamic":
        if duration_s < 128:
            mode, want = "fps_1", int(duration_s)
        elif duration_s < 768:
            mode, want = "fps_half", int(duration_s * 0.5)
        else:
            mode, want = "uniform_384", 384
    else:
        raise ValueError(f"unknown frame policy {policy!r}")

    if want < 1 and duration_s > 0:
        want = 1
    count = max(0, min(want, available_frames))
    indices = _uniform_indices(count, available_frames) if count else ()
    return FramePlan(mode=mode, frame_count=count, selected_indices=indices)


# --- requests and responses ------------------------------------------------


@dataclass(frozen=True)
class Part:
    kind: str  # "text" | "image"
    value: str


@dataclass(frozen=True)
class ModelRequest:
    model_id: str
    parts: tuple[Part, ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    metadata: tuple[tuple[str, str], ...] = ()

    def meta(self, key: str, default: str = "") -> str:
        for k, v in self.metadata:
            if k == key:
                return v
        return default

    def text(self) -> str:
        return "\n".join(p.value for p in self.parts if p.kind == "text")

    def content_hash(self) -> str:
        doc = {
            "model_id": self.model_id,
            "parts": [[p.kind, p.value] for p in self.parts],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        payload = json.dumps(doc, ensure_ascii=False, sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def make_request(
    model_id: str,
    prompt: str,
    images: Sequence[str] = (),
    comments_block: str = "",
    temperature: float = 0.0,
    max_tokens: int = 1024,
    metadata: dict[str, str] | None = None,
) -> ModelRequest:
    """Assemble parts in the canonical frames -> prompt -> comments order."""
    parts = [Part("image", p) for p in images]
    parts.append(Part("text", prompt))
    if comments_block:
        parts.append(Part("text", comments_block))
    return ModelRequest(
        model_id=model_id,
        parts=tuple(parts),
        temperature=temperature,
        max_tokens=max_tokens,
        metadata=tuple(sorted((metadata or {}).items())),
    )


@dataclass(frozen=True)
class ModelResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_ms: float = 0.0
    status: str = "ok"
    attempts: int = 1


# --- retry policy -----------------------------------------------------------


@dataclass
class RetryPolicy:
    max_attempts: int = 5
    base_delay_s: float = 1.0
    factor: float = 2.0
    jitter: float = 0.2
    sleep: Callable[[float], None] = time.sleep
    rng: random.Random = field(default_factory=lambda: random.Random(0))

    def delay(self, attempt: int) -> float:
        base = self.base_delay_s * (self.factor ** (attempt - 1))
        return base * (1.0 + self.rng.uniform(-self.jitter, self.jitter))


# --- transports -------------------------------------------------------------


@dataclass
class ScriptStep:
    """One canned interaction: a matcher and a reply (text or exception).

    ``match`` may be a substring of the request text, a phase-marker value,
    or a predicate; None matches anything. ``times`` repeats the step; None
    means unlimited reuse.
    """

    reply: "str | Exception"
    match: "str | Callable[[ModelRequest], bool] | None" = None
    times: "int | None" = 1


def _step_matches(step: ScriptStep, request: ModelRequest) -> bool:
    m = step.match
    if m is None:
        return True
    if callable(m):
        return bool(m(request))
    return m == request.meta("phase") or m in request.text()


class ScriptedTransport:
    """Deterministic playback of canned responses for offline runs."""

    def __init__(self, steps: Iterable[ScriptStep]):
        self.steps = [replace(s) for s in steps]
        if not self.steps:
            raise ValueError("script must not be empty")
        self._lock = threading.Lock()
        self.requests_seen: list[ModelRequest] = []

    def send(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            self.requests_seen.append(request)
            any_remaining = False
            for step in self.steps:
                if step.times is not None and step.times <= 0:
                    continue
                any_remaining = True
                if _step_matches(step, request):
                    if step.times is not None:
                        step.times -= 1
                    if isinstance(step.reply, Exception):
                        raise step.reply
                    return ModelResponse(text=step.reply)
            if not any_remaining:
                raise ScriptExhaustedError("script exhausted")
            raise UnmatchedRequestError(
                f"no script step matches request (phase={request.meta('phase')!r}, "
                f"text starts {request.text()[:80]!r})"
            )


class ReplayTransport:
    """Replays a recorded request log; responses dequeue per content hash."""

    def __init__(self, entries: Iterable[dict]):
        self._queues: dict[str, deque] = {}
        self._lock = threading.Lock()
        for e in entries:
            self._queues.setdefault(e["request_hash"], deque()).append(e["response"])

    @classmethod
    def from_log(cls, path: str | Path) -> "ReplayTransport":
        entries = []
        with Path(path).open("r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if line:
                    entries.append(json.loads(line))
        return cls(entries)

    def send(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            queue = self._queues.get(request.content_hash())
            if not queue:
                raise UnmatchedRequestError(
                    f"no recorded response for request hash {request.content_hash()[:12]}"
                )
            raw = queue.popleft()
        return ModelResponse(
            text=raw["text"],
            prompt_tokens=raw.get("prompt_tokens", 0),
            completion_tokens=raw.get("completion_tokens", 0),
            latency_ms=0.0,
        )


# --- HTTP endpoints ----------------------------------------------------------


@dataclass(frozen=True)
class EndpointConfig:
    name: str
    base_url: str
    model_id: str
    credential_env: str = ""
    dialect: str = "openai"  # openai | anthropic
    rpm_cap: "int | None" = None
    temperature_discriminative: float = 0.0
    temperature_generative: float = 0.8
    max_tokens: int = 1024
    timeout_s: float = 120.0


def _image_part(path: str, dialect: str) -> dict:
    url = path if path.startswith(("http://", "https://", "data:")) else f"file://{path}"
    if dialect == "anthropic":
        return {"type": "image", "source": {"type": "url", "url": url}}
    return {"type": "image_url", "image_url": {"url": url}}


def build_wire_payload(request: ModelRequest, dialect: str) -> dict:
    """Chat-completion body with interleaved image and text parts."""
    content = []
    for p in request.parts:
        if p.kind == "image":
            content.append(_image_part(p.value, dialect))
        else:
            content.append({"type": "text", "text": p.value})
    body = {
        "model": request.model_id,
        "messages": [{"role": "user", "content": content}],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }
    return body


class HttpTransport:
    """POSTs chat-completion requests to a configured endpoint."""

    def __init__(self, endpoint: EndpointConfig, session=None):
        import requests

        self.endpoint = endpoint
        self._session = session or requests.Session()
        self._lock = threading.Lock()
        self._last_request_t = 0.0

    def _pace(self) -> None:
        if not self.endpoint.rpm_cap:
            return
        min_interval = 60.0 / self.endpoint.rpm_cap
        with self._lock:
            wait = self._last_request_t + min_interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request_t = time.monotonic()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.endpoint.credential_env:
            credential = os.environ.get(self.endpoint.credential_env, "")
            if not credential:
                raise AuthenticationError(
                    f"credential env var {self.endpoint.credential_env} is not set"
                )
            if self.endpoint.dialect == "anthropic":
                headers["x-api-key"] = credential
            else:
                headers["Authorization"] = f"Bearer {credential}"
        return headers

    def send(self, request: ModelRequest) -> ModelResponse:
        self._pace()
        body = build_wire_payload(request, self.endpoint.dialect)
        url = self.endpoint.base_url.rstrip("/") + (
            "/messages" if self.endpoint.dialect == "anthropic" else "/chat/completions"
        )
        started = time.monotonic()
        try:
            resp = self._session.post(
                url, json=body, headers=self._headers(), timeout=self.endpoint.timeout_s
            )
        except OSError as e:
            raise TransientTransportError(str(e)) from e
        latency = (time.monotonic() - started) * 1000.0
        if resp.status_code in (401, 403):
            raise AuthenticationError(f"endpoint returned {resp.status_code}")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientTransportError(f"endpoint returned {resp.status_code}")
        if resp.status_code >= 400:
            text = resp.text[:500]
            if "content_filter" in text or "content policy" in text.lower():
                raise ContentPolicyError(text)
            raise TransportError(f"endpoint returned {resp.status_code}: {text}")
        data = resp.json()
        if self.endpoint.dialect == "anthropic":
            text = "".join(
                block.get("text", "") for block in data.get("content", [])
            )
            usage = data.get("usage", {})
            return ModelResponse(
                text=text,
                prompt_tokens=usage.get("input_tokens", 0),
                completion_tokens=usage.get("output_tokens", 0),
                latency_ms=latency,
            )
        choice = (data.get("choices") or [{}])[0]
        if choice.get("finish_reason") == "content_filter":
            raise ContentPolicyError("completion stopped by content filter")
        usage = data.get("usage", {})
        return ModelResponse(
            text=(choice.get("message") or {}).get("content") or "",
            prompt_tokens=usage.get("prompt_tokens", 0),
            completion_tokens=usage.get("completion_tokens", 0),
            latency_ms=latency,
        )


# --- request log -------------------------------------------------------------


class RequestLog:
    """Append-only JSONL log of request/response pairs, hash-addressed."""

    def __init__(self, path: "str | Path | None" = None):
        self.path = Path(path) if path is not None else None
        self.entries: list[dict] = []
        self._lock = threading.Lock()

    def append(self, request: ModelRequest, response: ModelResponse) -> None:
        entry = {
            "request_hash": request.content_hash(),
            "request": {
                "model_id": request.model_id,
                "parts": [[p.kind, p.value] for p in request.parts],
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "metadata": list(request.metadata),
            },
            "response": {
                "text": response.text,
                "prompt_tokens": response.prompt_tokens,
                "completion_tokens": response.completion_tokens,
            },
        }
        with self._lock:
            self.entries.append(entry)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as f:
                    f.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def save(self, path: str | Path) -> None:
        with self._lock, Path(path).open("w", encoding="utf-8") as f:
            for entry in self.entries:
                f.write(json.dumps(entry, ensure_ascii=False) + "\n")


# --- gateway -----------------------------------------------------------------


class Gateway:
    """Transport wrapper adding retries, bounded concurrency, and logging."""

    def __init__(
        self,
        transport,
        retry_policy: "RetryPolicy | None" = None,
        log: "RequestLog | None" = None,
        max_in_flight: int = 4,
    ):
        self.transport = transport
        self.retry_policy = retry_policy or RetryPolicy()
        self.log = log if log is not None else RequestLog()
        self._slots = threading.Semaphore(max_in_flight)
        self._calls = 0
        self._calls_lock = threading.Lock()

    @property
    def call_count(self) -> int:
        return self._calls

    def complete(self, request: ModelRequest) -> ModelResponse:
        """First successful response, retrying transient failures with backoff."""
        policy = self.retry_policy
        last: "Exception | None" = None
        with self._slots:
            for attempt in range(1, policy.max_attempts + 1):
                started = time.monotonic()
                try:
                    response = self.transport.send(request)
                except TransientTransportError as e:
                    last = e
                    if attempt < policy.max_attempts:
                        policy.sleep(policy.delay(attempt))
                    continue
                latency = (time.monotonic() - started) * 1000.0
                if response.latency_ms == 0.0 and not isinstance(
                    self.transport, (ScriptedTransport, ReplayTransport)
                ):
                    response = replace(response, latency_ms=latency)
                response = replace(response, attempts=attempt)
                with self._calls_lock:
                    self._calls += 1
                self.log.append(request, response)
                return response
        raise RetryExhaustedError(policy.max_attempts, last or TransportError("unknown"))
