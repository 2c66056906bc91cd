"""Model backends: anything with ``generate(prompt, params, ...) -> str``.

``problem_id`` and ``iteration`` are passed as keyword context so test
doubles can key their answers; real backends ignore them.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Protocol, runtime_checkable

import httpx

from .errors import (
    BackendHTTPError,
    BackendTimeout,
    BackendTransportError,
    MalformedResponse,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.3
    max_tokens: int = 2048


@runtime_checkable
class ModelBackend(Protocol):
    identity: str
    deterministic: bool
    serial: bool

    def generate(self, prompt: str, params: GenerationParams = GenerationParams(), *,
                 problem_id: str = "", iteration: int = 0) -> str:
        ...


class ScriptedBackend:
    """Deterministic lookup of ``(problem_id, iteration)`` -> completion.

    Values may also be callables taking the prompt, which lets tests build
    answers from what the loop actually sent.
    """

    deterministic = True
    serial = False

    def __init__(self, script: Mapping, default: str = "", identity: str = "scripted"):
        self.script = dict(script)
        self.default = default
        self.identity = identity
        self.calls: list = []
        self._lock = threading.Lock()

    def generate(self, prompt, params=GenerationParams(), *, problem_id="", iteration=0):
        with self._lock:
            self.calls.append((problem_id, iteration, prompt))
        value = self.script.get((problem_id, iteration), self.default)
        if callable(value):
            return value(prompt)
        return value

    @classmethod
    def from_file(cls, path) -> "ScriptedBackend":
        """JSON ``{"default": str, "entries": [{problem_id, iteration, completion}]}``."""
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        script = {(e["problem_id"], int(e["iteration"])): e["completion"]
                  for e in data.get("entries", [])}
        return cls(script, data.get("default", ""))


def scripted_backend(script: Mapping, default: str = "") -> ScriptedBackend:
    return ScriptedBackend(script, default)


class OracleBackend:
    """Answers every prompt with a correct trace from the BFS planner."""

    deterministic = True
    serial = False
    identity = "oracle"

    def __init__(self, problems: Mapping[str, tuple]):
        self.problems = dict(problems)
        self._cache: dict = {}
        self._lock = threading.Lock()

    def generate(self, prompt, params=GenerationParams(), *, problem_id="", iteration=0):
        from .planner import solve
        from .trace import build_trace, render_trace

        with self._lock:
            if problem_id not in self._cache:
                domain, problem = self.problems[problem_id]
                plan = solve(domain, problem)
                trace = build_trace(problem.init, plan, True, 0.99)
                self._cache[problem_id] = render_trace(trace)
            return self._cache[problem_id]


class HTTPBackend:
    """Chat-completion style client with timeout and retry policy.

    Request body ``{model, messages, temperature, max_tokens}``; the reply
    text is read from ``choices[0].message.content``. Timeouts, transport
    errors, 429 and 5xx responses are retried; the API key is never logged.
    """

    deterministic = False
    serial = False

    def __init__(self, endpoint: str, api_key: Optional[str] = None, model: str = "default",
                 timeout: float = 60.0, retries: int = 2, backoff: float = 0.5,
                 client: Optional[httpx.Client] = None,
                 sleep: Callable[[float], None] = time.sleep):
        if not endpoint:
            raise ValueError("HTTPBackend needs an endpoint URL")
        self.endpoint = endpoint
        self._api_key = api_key
        self.model = model
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep
        self.identity = f"http:{model}@{endpoint}"

    def __repr__(self) -> str:
        return f"HTTPBackend(endpoint={self.endpoint!r}, model={self.model!r})"

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

    def _once(self, body: dict) -> str:
        try:
            resp = self._client.post(self.endpoint, json=body, headers=self._headers(),
                                     timeout=self.timeout)
        except httpx.TimeoutException as exc:
            raise BackendTimeout(f"request timed out after {self.timeout}s") from exc
        except httpx.TransportError as exc:
            raise BackendTransportError(f"transport error: {type(exc).__name__}") from exc
        if resp.status_code // 100 != 2:
            raise BackendHTTPError(resp.status_code, resp.text[:200])
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse("response lacks choices[0].message.content") from exc
        if not isinstance(content, str):
            raise MalformedResponse("message content is not a string")
        return content

    def generate(self, prompt, params=GenerationParams(), *, problem_id="", iteration=0):
        body = {"model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": params.temperature,
                "max_tokens": params.max_tokens}
        attempt = 0
        while True:
            try:
                return self._once(body)
            except (BackendTimeout, BackendTransportError, BackendHTTPError) as exc:
                retryable = not isinstance(exc, BackendHTTPError) or \
                    exc.status == 429 or exc.status >= 500
                if not retryable or attempt >= self.retries:
                    raise
                log.warning("model call failed (%s); retry %d/%d",
                            type(exc).__name__, attempt + 1, self.retries)
                self._sleep(self.backoff * (2 ** attempt))
                attempt += 1

    def close(self) -> None:
        self._client.close()


def http_backend(endpoint: Optional[str] = None, auth: Optional[str] = None,
                 model: str = "default", timeout: float = 60.0, retries: int = 2,
                 **kwargs) -> HTTPBackend:
    """Build an HTTPBackend, falling back to MODEL_API_URL / MODEL_API_KEY."""
    endpoint = endpoint or os.environ.get("MODEL_API_URL", "")
    auth = auth or os.environ.get("MODEL_API_KEY") or None
    return HTTPBackend(endpoint, auth, model, timeout, retries, **kwargs)
