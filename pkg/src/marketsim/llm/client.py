"""Chat-completion clients: a deterministic scripted mock and an HTTP client."""

from __future__ import annotations

import os
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Protocol, Sequence

import httpx

from .parsing import decision_json_schema
from .prompts import PromptBundle

RETRYABLE_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})


class ConfigurationError(RuntimeError):
    """The client cannot serve a request because of how it was set up."""


class TransportError(RuntimeError):
    """The endpoint could not be reached or kept failing after all retries."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class RawCompletion:
    text: str
    model_id: str
    latency_ms: float = 0.0
    prompt_tokens: Optional[int] = None
    completion_tokens: Optional[int] = None
    attempts: int = 1


@dataclass(frozen=True)
class RequestContext:
    """Who is asking. Scripted responders may use the remaining fields."""

    agent_id: int
    round: int
    agent_type: str = ""
    snapshot: Any = None
    account: Any = None
    news: float = 0.0
    endowment: Optional[int] = None


class LlmClient(Protocol):
    def complete(self, bundle: PromptBundle, context: RequestContext) -> RawCompletion: ...


@dataclass(frozen=True)
class LlmClientConfig:
    mode: str = "scripted"
    endpoint: Optional[str] = None
    model: str = "gpt-4o"
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 60.0
    api_key_env: str = "OPENAI_API_KEY"

    def __post_init__(self) -> None:
        if self.mode not in ("scripted", "http"):
            raise ValueError(f"unknown LLM mode {self.mode!r}")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.mode == "http" and not self.endpoint:
            raise ValueError("http mode needs an endpoint")

    def api_key(self, environ: Mapping[str, str] = os.environ) -> str:
        key = environ.get(self.api_key_env, "")
        if not key:
            raise ConfigurationError(f"environment variable {self.api_key_env} is not set")
        return key


Responder = Callable[[PromptBundle, RequestContext], str]


class ScriptedClient:
    """Replays queued payloads per ``(agent_id, round)``.

    When a queue is missing or empty the optional ``responder`` is asked
    instead; without one the request is a configuration error.
    """

    def __init__(self, script: Optional[Mapping[tuple[int, int], Sequence[str]]] = None,
                 responder: Optional[Responder] = None, model_id: str = "scripted"):
        self.queues = {key: deque(items) for key, items in (script or {}).items()}
        self.responder = responder
        self.model_id = model_id
        self.calls: list[tuple[int, int]] = []

    def push(self, agent_id: int, round_no: int, payload: str) -> None:
        self.queues.setdefault((agent_id, round_no), deque()).append(payload)

    def complete(self, bundle: PromptBundle, context: RequestContext) -> RawCompletion:
        key = (context.agent_id, context.round)
        self.calls.append(key)
        queue = self.queues.get(key)
        if queue:
            return RawCompletion(queue.popleft(), self.model_id)
        if self.responder is not None:
            return RawCompletion(self.responder(bundle, context), self.model_id)
        raise ConfigurationError(
            f"no scripted response queued for agent {context.agent_id} in round {context.round}")


@dataclass
class HttpClient:
    """Client for a chat-completions compatible endpoint.

    Retries timeouts, connection failures, 429 and 5xx responses with
    exponential backoff. Other 4xx responses fail immediately.
    """

    config: LlmClientConfig
    api_key: str
    transport: Optional[httpx.BaseTransport] = None
    sleep: Callable[[float], None] = time.sleep
    backoff: float = 1.0
    clock: Callable[[], float] = time.monotonic
    _client: Optional[httpx.Client] = field(default=None, repr=False)

    @classmethod
    def from_config(cls, config: LlmClientConfig, **kwargs) -> "HttpClient":
        return cls(config, config.api_key(), **kwargs)

    @property
    def client(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(timeout=self.config.timeout, transport=self.transport)
        return self._client

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def request_body(self, bundle: PromptBundle) -> dict:
        return {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": bundle.system_prompt},
                {"role": "user", "content": bundle.user_prompt},
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {"name": "TradeDecisionSchema", "schema": decision_json_schema()},
            },
        }

    def complete(self, bundle: PromptBundle, context: RequestContext) -> RawCompletion:
        body = self.request_body(bundle)
        headers = {"Authorization": f"Bearer {self.api_key}"}
        attempts = 0
        last_error = ""
        while True:
            attempts += 1
            started = self.clock()
            try:
                resp = self.client.post(self.config.endpoint, json=body, headers=headers)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code == 200:
                    return self._completion(resp, attempts, (self.clock() - started) * 1000)
                last_error = f"HTTP {resp.status_code}"
                if resp.status_code not in RETRYABLE_STATUS:
                    raise TransportError(f"{last_error}: {resp.text[:200]}", attempts)
            if attempts > self.config.max_retries:
                raise TransportError(f"giving up after {attempts} attempts: {last_error}",
                                     attempts)
            self.sleep(self.backoff * 2 ** (attempts - 1))

    def _completion(self, resp: httpx.Response, attempts: int, latency: float) -> RawCompletion:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed completion envelope: {exc!r}", attempts) from None
        if not isinstance(text, str) or not text:
            raise TransportError("completion carried no text", attempts)
        usage = data.get("usage") or {}
        return RawCompletion(text, data.get("model", self.config.model), latency,
                             usage.get("prompt_tokens"), usage.get("completion_tokens"), attempts)


def complete(client: LlmClient, bundle: PromptBundle, context: RequestContext) -> RawCompletion:
    return client.complete(bundle, context)
