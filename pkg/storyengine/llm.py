"""Language-model gateway: pluggable chat backends, retries, transcript logging.

Backends (both expose `async send(request) -> ChatResponse` and `concurrent`):
  HttpBackend      OpenAI-compatible POST {endpoint}/chat/completions via httpx
  ScriptedBackend  deterministic replies queued per agent tag (tests, offline runs)

Gateway.complete() wraps a backend with retry + exponential backoff on
transient failures (timeouts, connection errors, 429/5xx), per-tag sampling
defaults, and an append-only NDJSON transcript of every request/response.
At most `concurrency` requests are in flight at once.

Agent tags: init, goal, role, scorer, exit, recall, thread, plan, writer, caa, gea.
"""

import asyncio
import json
import logging
import os
import time
from collections import deque
from collections.abc import Callable, Mapping
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal, Protocol

import httpx
from pydantic import BaseModel, Field, NonNegativeInt, PositiveInt, field_validator, model_validator

logger = logging.getLogger(__name__)

AGENT_TAGS = frozenset({
    "init", "goal", "role", "scorer", "exit",
    "recall", "thread", "plan", "writer",
    "caa", "gea",
})

DEFAULT_TEMPERATURES: dict[str, float] = {
    "goal": 0.8, "role": 0.8, "writer": 0.8,
    "scorer": 0.1, "exit": 0.1, "caa": 0.1, "gea": 0.1,
    "init": 0.3, "recall": 0.3, "thread": 0.3, "plan": 0.5,
}

DEFAULT_API_KEY_ENV = "CREAGENTIVE_API_KEY"


# ── Errors ───────────────────────────────────────────────


class LLMError(RuntimeError):
    """Base class for backend failures."""

    transient = False


class LLMTimeout(LLMError):
    transient = True


class LLMConnectionError(LLMError):
    transient = True


class HttpStatus(LLMError):
    def __init__(self, code: int, body: str = ""):
        super().__init__(f"LLM provider returned {code}")
        self.code = code
        self.body = body
        self.transient = code == 429 or code >= 500


class ScriptExhausted(LLMError):
    """Scripted backend has no reply left for a tag (test misconfiguration)."""


class MissingApiKey(LLMError):
    pass


class BadResponse(LLMError):
    pass


# ── Wire types ───────────────────────────────────────────


class BackendConfig(BaseModel):
    kind: Literal["http", "scripted"] = "http"
    endpoint: str = ""
    model: str = ""
    api_key_env: str = DEFAULT_API_KEY_ENV
    timeout_s: PositiveInt = 120
    retries: NonNegativeInt = 2
    backoff_s: float = Field(default=1.0, ge=0.0)
    # scripted only: JSON file mapping agent tag → list of replies
    script_path: str | None = None

    @model_validator(mode="after")
    def _http_needs_endpoint(self) -> "BackendConfig":
        if self.kind == "http" and not (self.endpoint and self.model):
            raise ValueError("http backend requires endpoint and model")
        return self


class ChatRequest(BaseModel):
    system: str = ""
    user: str = Field(min_length=1)
    temperature: float = Field(default=0.8, ge=0.0)
    max_tokens: PositiveInt = 2048
    tag: str
    chapter: int | None = None

    @field_validator("tag")
    @classmethod
    def _known_tag(cls, v: str) -> str:
        if v not in AGENT_TAGS:
            raise ValueError(f"unknown agent tag: {v}")
        return v


class ChatResponse(BaseModel):
    text: str
    token_usage: dict[str, NonNegativeInt] = Field(
        default_factory=lambda: {"prompt": 0, "completion": 0}
    )
    latency_ms: NonNegativeInt = 0


class Backend(Protocol):
    concurrent: bool

    async def send(self, request: ChatRequest) -> ChatResponse: ...


# ── Backends ─────────────────────────────────────────────


class HttpBackend:
    """Chat-completions client for any OpenAI-compatible endpoint."""

    concurrent = True

    def __init__(
        self,
        config: BackendConfig,
        api_key: str = "",
        transport: httpx.AsyncBaseTransport | None = None,
    ):
        self.config = config
        self.api_key = api_key
        self._transport = transport

    def _messages(self, request: ChatRequest) -> list[dict[str, str]]:
        messages = []
        if request.system:
            messages.append({"role": "system", "content": request.system})
        messages.append({"role": "user", "content": request.user})
        return messages

    async def send(self, request: ChatRequest) -> ChatResponse:
        url = f"{self.config.endpoint.rstrip('/')}/chat/completions"
        headers: dict[str, str] = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.config.model,
            "messages": self._messages(request),
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

        started = time.monotonic()
        try:
            async with httpx.AsyncClient(
                timeout=self.config.timeout_s, transport=self._transport
            ) as client:
                resp = await client.post(url, json=body, headers=headers)
                resp.raise_for_status()
        except httpx.ConnectError as e:
            raise LLMConnectionError(f"Cannot connect to LLM provider: {e}") from e
        except httpx.HTTPStatusError as e:
            raise HttpStatus(e.response.status_code, e.response.text) from e
        except httpx.TimeoutException as e:
            raise LLMTimeout("LLM provider timed out") from e
        latency_ms = int((time.monotonic() - started) * 1000)

        data = resp.json()
        try:
            text = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BadResponse("Unexpected response format from LLM provider")
        if text is None:
            raise BadResponse("LLM provider returned no content")
        usage = data.get("usage") or {}
        return ChatResponse(
            text=text,
            token_usage={
                "prompt": int(usage.get("prompt_tokens", 0)),
                "completion": int(usage.get("completion_tokens", 0)),
            },
            latency_ms=latency_ms,
        )


class ScriptedBackend:
    """Deterministic backend: replies are consumed in order per agent tag.

    A `responder` callable, when given, answers any tag whose queue is empty;
    without one an empty queue raises ScriptExhausted. Calls are serialized.
    """

    concurrent = False

    def __init__(
        self,
        script: Mapping[str, list[str]] | None = None,
        responder: Callable[[ChatRequest], str] | None = None,
    ):
        self._queues: dict[str, deque[str]] = {
            tag: deque(replies) for tag, replies in (script or {}).items()
        }
        self._responder = responder
        self._lock = asyncio.Lock()

    @classmethod
    def from_file(cls, path: Path) -> "ScriptedBackend":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"Script file must hold an object of tag → replies: {path}")
        return cls({tag: [str(r) for r in replies] for tag, replies in data.items()})

    def remaining(self, tag: str) -> int:
        return len(self._queues.get(tag, ()))

    async def send(self, request: ChatRequest) -> ChatResponse:
        async with self._lock:
            queue = self._queues.get(request.tag)
            if queue:
                text = queue.popleft()
            elif self._responder is not None:
                text = self._responder(request)
            else:
                raise ScriptExhausted(f"No scripted reply left for tag '{request.tag}'")
        return ChatResponse(
            text=text,
            token_usage={
                "prompt": len(request.system.split()) + len(request.user.split()),
                "completion": len(text.split()),
            },
            latency_ms=0,
        )


def create_backend(config: BackendConfig, base_dir: Path | None = None) -> Backend:
    """Build a backend from config. The http API key comes from the environment."""
    if config.kind == "scripted":
        if config.script_path is None:
            return ScriptedBackend()
        path = Path(config.script_path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return ScriptedBackend.from_file(path)
    api_key = os.getenv(config.api_key_env, "")
    if not api_key:
        raise MissingApiKey(f"Environment variable {config.api_key_env} is not set")
    return HttpBackend(config, api_key)


# ── Gateway ──────────────────────────────────────────────


class Gateway:
    """Backend + retry policy + transcript; the handle every agent talks through."""

    def __init__(
        self,
        backend: Backend,
        *,
        retries: int = 0,
        backoff_s: float = 1.0,
        transcript: Path | None = None,
        temperatures: Mapping[str, float] | None = None,
        max_tokens: int = 2048,
        concurrency: int = 1,
    ):
        self.backend = backend
        self.retries = retries
        self.backoff_s = backoff_s
        self.transcript = transcript
        self.temperatures = {**DEFAULT_TEMPERATURES, **(temperatures or {})}
        self.max_tokens = max_tokens
        self.concurrency = concurrency
        self._in_flight = asyncio.Semaphore(max(concurrency, 1))

    @property
    def concurrent(self) -> bool:
        return self.backend.concurrent and self.concurrency > 1

    def request(self, tag: str, user: str, *, system: str = "", chapter: int | None = None) -> ChatRequest:
        """Build a request with this gateway's sampling defaults for `tag`."""
        return ChatRequest(
            system=system,
            user=user,
            temperature=self.temperatures.get(tag, 0.8),
            max_tokens=self.max_tokens,
            tag=tag,
            chapter=chapter,
        )

    async def complete(self, request: ChatRequest) -> ChatResponse:
        """Send with up to `retries` retries on transient errors (retries + 1 attempts)."""
        attempts = self.retries + 1
        for attempt in range(1, attempts + 1):
            try:
                async with self._in_flight:
                    response = await self.backend.send(request)
            except LLMError as e:
                if not e.transient or attempt == attempts:
                    raise
                delay = self.backoff_s * (2 ** (attempt - 1))
                logger.warning(
                    f"{request.tag}: attempt {attempt}/{attempts} failed ({e}); retrying in {delay:.1f}s"
                )
                await asyncio.sleep(delay)
                continue
            self._log(request, response, attempt)
            return response
        raise AssertionError("unreachable")

    def _log(self, request: ChatRequest, response: ChatResponse, attempt: int) -> None:
        if self.transcript is None:
            return
        record = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "tag": request.tag,
            "chapter": request.chapter,
            "attempt": attempt,
            "system": request.system,
            "user": request.user,
            "response": response.text,
            "usage": response.token_usage,
            "latency_ms": response.latency_ms,
        }
        self.transcript.parent.mkdir(parents=True, exist_ok=True)
        with self.transcript.open("a", encoding="utf-8") as f:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
