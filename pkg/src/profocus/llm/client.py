"""Chat-completion HTTP client with retries and digest-only logging."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import requests

from ..agents import AgentError

logger = logging.getLogger(__name__)

ROLES = ("orchestration", "perception", "decision")
RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str = "http://localhost:8000/v1"
    models: Mapping[str, str] = field(default_factory=lambda: {r: "default" for r in ROLES})
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0
    backoff: float = 0.5
    max_concurrency: int = 4

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")
        missing = [r for r in ROLES if r not in self.models]
        if missing:
            raise ValueError(f"no model configured for roles {missing}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> EndpointConfig:
        data = dict(data.get("llm", data))
        models = dict(data.pop("models", {}))
        default = data.pop("model", None)
        if default is not None:
            for r in ROLES:
                models.setdefault(r, default)
        return cls(models=models, **data)


@dataclass(frozen=True)
class Message:
    role: str
    text: str
    image: str | None = None

    def wire(self) -> dict[str, Any]:
        if self.image is None:
            return {"role": self.role, "content": self.text}
        return {
            "role": self.role,
            "content": [
                {"type": "text", "text": self.text},
                {"type": "image_url", "image_url": {"url": self.image}},
            ],
        }


def _digest(payload: Any) -> str:
    raw = payload if isinstance(payload, str) else json.dumps(payload, sort_keys=True)
    return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


class ChatClient:
    """Thread-safe client; ``log`` receives one dict per HTTP attempt."""

    def __init__(
        self,
        config: EndpointConfig,
        log: Callable[[dict[str, Any]], None] | None = None,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._log = log
        self._session = session or requests.Session()
        self._sleep = sleep
        self._gate = threading.BoundedSemaphore(config.max_concurrency)
        self._lock = threading.Lock()
        self.calls = 0

    def _record(self, entry: dict[str, Any]) -> None:
        if self._log is not None:
            self._log(entry)

    def chat(self, role: str, messages: Sequence[Message | Mapping[str, Any]]) -> str:
        if not messages:
            raise ValueError("messages must not be empty")
        if role not in self.config.models:
            raise ValueError(f"unknown role {role!r}")
        wire = [m.wire() if isinstance(m, Message) else dict(m) for m in messages]
        payload = {
            "model": self.config.models[role],
            "messages": wire,
            "temperature": self.config.temperature,
        }
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        request_digest = _digest(payload)

        last_error = "no attempt made"
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.config.backoff * 2 ** (attempt - 1))
            with self._lock:
                self.calls += 1
                call_no = self.calls
            entry = {"event": "llm_call", "call": call_no, "role": role, "model": payload["model"],
                     "attempt": attempt, "request_sha256": request_digest}
            try:
                with self._gate:
                    resp = self._session.post(url, json=payload, headers=headers, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_error = f"{type(exc).__name__}"
                self._record({**entry, "error": last_error})
                continue
            entry["status"] = resp.status_code
            if resp.status_code in RETRYABLE_STATUS:
                last_error = f"HTTP {resp.status_code}"
                self._record(entry)
                continue
            if resp.status_code >= 400:
                self._record(entry)
                raise AgentError(f"{role}: HTTP {resp.status_code}")
            try:
                text = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError):
                last_error = "malformed response body"
                self._record({**entry, "error": last_error})
                continue
            if not isinstance(text, str):
                text = json.dumps(text)
            self._record({**entry, "response_sha256": _digest(text)})
            return text
        raise AgentError(f"{role}: retries exhausted ({last_error})")
