"""Chat-model backends: live HTTP endpoint, transcript-driven mock, cache.

All backends expose one synchronous complete() call and are safe to use
from multiple worker threads. The mock backend serves canned responses from
fixtures/transcripts/<method>/<key>.json, so every pipeline run is
reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

from .errors import GenerationError


@dataclass(frozen=True)
class ModelRequest:
    method: str
    prompt: str
    key: str  # semantic transcript key; ignored by live backends
    temperature: float = 0.0


@dataclass(frozen=True)
class ModelResponse:
    text: str
    usage: Mapping[str, int] = field(default_factory=dict)


class ChatBackend(Protocol):
    model_id: str

    def complete(self, request: ModelRequest) -> ModelResponse: ...


class MockBackend:
    """Serves transcripts from <root>/<method>/<key>.json.

    A transcript file holds either the raw response text as a JSON document,
    or {"__text__": "..."} for responses that are not themselves JSON.
    """

    model_id = "mock"

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            self.calls += 1
        path = self.root / request.method / f"{request.key}.json"
        if not path.exists():
            raise GenerationError(f"no transcript for {request.method}/{request.key}")
        raw = path.read_text(encoding="utf-8")
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError:
            return ModelResponse(text=raw)
        if isinstance(payload, dict) and "__text__" in payload:
            return ModelResponse(text=payload["__text__"])
        return ModelResponse(text=raw)


class ScriptedBackend:
    """In-memory backend for tests: responses keyed by (method, key).

    A list value is consumed one element per call, which lets tests script
    repair re-asks.
    """

    model_id = "scripted"

    def __init__(self, responses: Mapping[tuple[str, str], str | list[str]]):
        self._responses = {k: list(v) if isinstance(v, list) else v for k, v in responses.items()}
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        with self._lock:
            self.calls += 1
            entry = self._responses.get((request.method, request.key))
            if entry is None:
                raise GenerationError(f"no scripted response for {request.method}/{request.key}")
            if isinstance(entry, list):
                if not entry:
                    raise GenerationError(
                        f"scripted responses exhausted for {request.method}/{request.key}"
                    )
                return ModelResponse(text=entry.pop(0))
            return ModelResponse(text=entry)


class LiveBackend:
    """JSON chat-completion over HTTPS (OpenAI-compatible endpoint shape)."""

    def __init__(
        self,
        base_url: str,
        model: str,
        token_env_var: str = "TASKDV_API_TOKEN",
        timeout: float = 120.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model_id = model
        self.token_env_var = token_env_var
        self.timeout = timeout
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, request: ModelRequest) -> ModelResponse:
        import requests

        with self._lock:
            self.calls += 1
        token = os.environ.get(self.token_env_var, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        }
        resp = requests.post(
            f"{self.base_url}/chat/completions", json=body, headers=headers, timeout=self.timeout
        )
        resp.raise_for_status()
        payload = resp.json()
        text = payload["choices"][0]["message"]["content"]
        usage = payload.get("usage", {})
        return ModelResponse(text=text, usage=usage)


class CachingBackend:
    """Disk-persisted response cache in front of any backend.

    Cache key: hash of (method, rendered prompt, model id, decoding params).
    Two identical requests issue exactly one inner-backend call.
    """

    def __init__(self, inner: ChatBackend, cache_dir: str | Path | None):
        self.inner = inner
        self.model_id = inner.model_id
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, ModelResponse] = {}
        self._lock = threading.Lock()

    def _cache_key(self, request: ModelRequest) -> str:
        blob = "\x1f".join(
            [request.method, request.prompt, self.model_id, repr(request.temperature)]
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def complete(self, request: ModelRequest) -> ModelResponse:
        key = self._cache_key(request)
        with self._lock:
            if key in self._memory:
                return self._memory[key]
        if self.cache_dir is not None:
            path = self.cache_dir / f"{key}.json"
            if path.exists():
                payload = json.loads(path.read_text(encoding="utf-8"))
                response = ModelResponse(text=payload["text"], usage=payload.get("usage", {}))
                with self._lock:
                    self._memory[key] = response
                return response
        response = self.inner.complete(request)
        with self._lock:
            self._memory[key] = response
        if self.cache_dir is not None:
            payload = {"text": response.text, "usage": dict(response.usage)}
            (self.cache_dir / f"{key}.json").write_text(
                json.dumps(payload, ensure_ascii=False), encoding="utf-8"
            )
        return response
