"""Chat-completion backends and the gateway every agent talks through."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx

log = logging.getLogger(__name__)

API_KEY_ENV = "MLZERO_API_KEY"
ROLES = ("coder", "planner", "file_reader")


class LlmError(RuntimeError):
    """Base class for backend failures."""


class TransportError(LlmError):
    """A transient failure talking to a backend; eligible for retry."""


class QueueExhaustedError(LlmError):
    """A scripted backend was asked for more responses than it holds."""


class TokenLimitError(LlmError):
    """The backend stopped because the output token budget ran out."""


@dataclass(frozen=True)
class LlmRequest:
    role_name: str
    turns: tuple[tuple[str, str], ...]
    system_text: str = ""
    temperature: float = 0.0
    max_tokens: int = 65536
    multi_turn: bool = False
    agent: str = ""
    model: str = ""
    top_p: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 1.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 1]")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if not self.turns or self.turns[-1][0] != "user":
            raise ValueError("a request must end with a user turn")
        if not self.multi_turn and len(self.turns) != 1:
            raise ValueError("single-turn requests carry exactly one user message")

    @property
    def prompt(self) -> str:
        return self.turns[-1][1]


@dataclass(frozen=True)
class LlmResponse:
    text: str
    input_token_count: int = 0
    output_token_count: int = 0


class LlmBackend(Protocol):
    def send(self, request: LlmRequest) -> LlmResponse: ...


def _word_count(text: str) -> int:
    return len(text.split())


class ScriptedBackend:
    """Replays canned responses, either from one queue or per agent/role.

    With a mapping, a request is served from the queue keyed by its agent
    name if present, otherwise by its role name, otherwise by the "*" key.
    """

    def __init__(self, responses: Sequence[str] | Mapping[str, Sequence[str]]):
        if isinstance(responses, Mapping):
            self._queues = {key: list(values) for key, values in responses.items()}
        else:
            self._queues = {"*": list(responses)}
        self._lock = threading.Lock()

    def _queue_for(self, request: LlmRequest) -> tuple[str, list[str]]:
        for key in (request.agent, request.role_name, "*"):
            if key and key in self._queues:
                return key, self._queues[key]
        raise QueueExhaustedError(
            f"no scripted responses for agent {request.agent!r} / role {request.role_name!r}"
        )

    def send(self, request: LlmRequest) -> LlmResponse:
        with self._lock:
            key, queue = self._queue_for(request)
            if not queue:
                raise QueueExhaustedError(f"scripted queue {key!r} is exhausted")
            text = queue.pop(0)
        prompt_words = sum(_word_count(t) for _, t in request.turns) + _word_count(request.system_text)
        return LlmResponse(text, prompt_words, _word_count(text))

    def remaining(self) -> dict[str, int]:
        with self._lock:
            return {key: len(queue) for key, queue in self._queues.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        return cls(json.loads(Path(path).read_text()))


class HttpChatBackend:
    """OpenAI-compatible chat-completions client."""

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        api_key: str | None = None,
        proxy_url: str | None = None,
        timeout: float = 600.0,
    ):
        self.url = base_url.rstrip("/")
        if not self.url.endswith("/chat/completions"):
            self.url += "/chat/completions"
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.proxy_url = proxy_url
        self.timeout = timeout

    def payload(self, request: LlmRequest) -> dict:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.extend({"role": speaker, "content": text} for speaker, text in request.turns)
        body = {
            "model": request.model or self.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        if request.top_p is not None:
            body["top_p"] = request.top_p
        return body

    def send(self, request: LlmRequest) -> LlmResponse:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            with httpx.Client(proxy=self.proxy_url, timeout=self.timeout) as client:
                resp = client.post(self.url, json=self.payload(request), headers=headers)
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise LlmError(f"HTTP {resp.status_code}: {resp.text[:500]}")
        data = resp.json()
        choice = data["choices"][0]
        if choice.get("finish_reason") == "length":
            raise TokenLimitError(f"completion hit max_tokens={request.max_tokens}")
        usage = data.get("usage") or {}
        return LlmResponse(
            choice["message"]["content"],
            int(usage.get("prompt_tokens", 0)),
            int(usage.get("completion_tokens", 0)),
        )


class RoutingBackend:
    """Dispatches each request to the backend configured for its role."""

    def __init__(self, by_role: Mapping[str, LlmBackend], default: LlmBackend | None = None):
        self.by_role = dict(by_role)
        self.default = default

    def send(self, request: LlmRequest) -> LlmResponse:
        backend = self.by_role.get(request.role_name, self.default)
        if backend is None:
            raise LlmError(f"no backend configured for role {request.role_name!r}")
        return backend.send(request)


@dataclass
class TokenUsage:
    calls: int = 0
    input_tokens: int = 0
    output_tokens: int = 0

    def add(self, response: LlmResponse) -> None:
        self.calls += 1
        self.input_tokens += response.input_token_count
        self.output_tokens += response.output_token_count

    @property
    def total(self) -> int:
        return self.input_tokens + self.output_tokens


def complete(
    request: LlmRequest,
    backend: LlmBackend,
    *,
    retries: int = 3,
    backoff: float = 1.0,
    usage: TokenUsage | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> LlmResponse:
    """Send ``request``, retrying transient transport failures.

    ``retries`` is the total number of attempts; waits double from ``backoff``.
    """
    delay = backoff
    for attempt in range(1, retries + 1):
        try:
            response = backend.send(request)
        except TransportError as exc:
            if attempt == retries:
                raise
            log.warning("transport failure (attempt %d/%d): %s", attempt, retries, exc)
            sleep(delay)
            delay *= 2
            continue
        if usage is not None:
            usage.add(response)
        return response
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class RoleSettings:
    """Sampling parameters for one LLM role."""

    model: str = ""
    temperature: float = 0.0
    max_tokens: int = 65536
    top_p: float | None = None
    multi_turn: bool = False


@dataclass
class TranscriptEntry:
    agent: str
    role: str
    turns: tuple[tuple[str, str], ...]
    response: str


@dataclass
class Gateway:
    """Backend plus per-role settings, usage counters and a transcript."""

    backend: LlmBackend
    roles: dict[str, RoleSettings] = field(default_factory=dict)
    retries: int = 3
    backoff: float = 1.0
    usage: TokenUsage = field(default_factory=TokenUsage)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    sleep: Callable[[float], None] = time.sleep

    def __post_init__(self) -> None:
        self._lock = threading.Lock()

    def ask(
        self,
        agent: str,
        role: str,
        prompt: str,
        history: Sequence[tuple[str, str]] = (),
        system_text: str = "",
    ) -> str:
        settings = self.roles.get(role, RoleSettings())
        turns = tuple(history) + (("user", prompt),)
        request = LlmRequest(
            role_name=role,
            turns=turns,
            system_text=system_text,
            temperature=settings.temperature,
            max_tokens=settings.max_tokens,
            multi_turn=len(turns) > 1,
            agent=agent,
            model=settings.model,
            top_p=settings.top_p,
        )
        response = complete(
            request, self.backend, retries=self.retries, backoff=self.backoff, sleep=self.sleep
        )
        with self._lock:
            self.usage.add(response)
            self.transcript.append(TranscriptEntry(agent, role, turns, response.text))
        return response.text

    def prompts_for(self, agent: str) -> list[str]:
        return [entry.turns[-1][1] for entry in self.transcript if entry.agent == agent]

    def calls_for(self, agent: str) -> int:
        return sum(1 for entry in self.transcript if entry.agent == agent)

    def transcript_json(self) -> str:
        return json.dumps(
            [
                {"agent": e.agent, "role": e.role, "turns": [list(t) for t in e.turns], "response": e.response}
                for e in self.transcript
            ],
            indent=1,
        )
