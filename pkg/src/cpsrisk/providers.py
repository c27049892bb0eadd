"""LLM provider contract, hosted-API adapters, and the deterministic mock.

A provider implements a single method::

    complete(prompt, images=(), cfg=SamplingConfig(), step=None) -> str

``images`` are opaque base64 payloads (no local vision processing).  The
``step`` hint names the pipeline step for providers that care (the mock
dispatches on it; hosted adapters ignore it).  Adapters read their API key
from an environment variable and are rate limited with a token bucket.
"""
from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol

import httpx

from .errors import ProviderError


@dataclass(frozen=True)
class SamplingConfig:
    temperature: float = 0.1
    top_p: float = 0.9

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")


class Provider(Protocol):
    def complete(self, prompt: str, images: tuple[str, ...] = (),
                 cfg: SamplingConfig = SamplingConfig(),
                 step: str | None = None) -> str: ...


class TokenBucket:
    """Thread-safe token bucket; ``rate`` tokens/second, burst ``capacity``."""

    def __init__(self, rate: float = 1.0, capacity: float = 5.0):
        self.rate = rate
        self.capacity = capacity
        self._tokens = capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


class MockProvider:
    """Deterministic scripted provider for tests and offline runs.

    ``script`` maps a step name to an ordered list of canned responses;
    each call pops the next one, and the final response repeats once the
    list is exhausted (so refinement replays stay deterministic).
    """

    def __init__(self, script: dict[str, list[str]]):
        self._script = {k: list(v) for k, v in script.items()}
        self._cursor = {k: 0 for k in script}
        self.calls: list[tuple[str, str]] = []

    def complete(self, prompt, images=(), cfg=SamplingConfig(), step=None):
        if step is None or step not in self._script:
            raise ProviderError(500, f"mock has no script for step {step!r}")
        responses = self._script[step]
        i = min(self._cursor[step], len(responses) - 1)
        self._cursor[step] = i + 1
        self.calls.append((step, prompt))
        return responses[i]

    def reset(self) -> None:
        self._cursor = {k: 0 for k in self._script}
        self.calls.clear()


class ScriptedProvider:
    """Pops responses strictly in call order, regardless of step."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self.calls: list[str] = []

    def complete(self, prompt, images=(), cfg=SamplingConfig(), step=None):
        self.calls.append(prompt)
        if not self._responses:
            raise ProviderError(500, "scripted provider exhausted")
        return self._responses.pop(0)


class _HttpAdapter:
    """Shared plumbing for hosted chat-completion APIs."""

    env_key = ""
    url = ""

    def __init__(self, model: str, bucket: TokenBucket | None = None,
                 timeout: float = 120.0):
        self.model = model
        self.bucket = bucket or TokenBucket(rate=1.0, capacity=3.0)
        self.timeout = timeout

    def _api_key(self) -> str:
        key = os.environ.get(self.env_key, "")
        if not key:
            raise ProviderError(401, f"environment variable {self.env_key} not set")
        return key

    def _post(self, payload: dict, headers: dict) -> dict:
        self.bucket.acquire()
        try:
            resp = httpx.post(self.url, json=payload, headers=headers,
                              timeout=self.timeout)
        except httpx.HTTPError as exc:
            raise ProviderError(502, str(exc)) from exc
        if resp.status_code != 200:
            raise ProviderError(resp.status_code, resp.text[:500])
        return resp.json()


class OpenAICompatibleProvider(_HttpAdapter):
    """OpenAI-style /chat/completions adapter (also fits Mistral's API)."""

    env_key = "OPENAI_API_KEY"
    url = "https://api.openai.com/v1/chat/completions"

    def complete(self, prompt, images=(), cfg=SamplingConfig(), step=None):
        content: list[dict] = [{"type": "text", "text": prompt}]
        for img in images:
            content.append({"type": "image_url",
                            "image_url": {"url": f"data:image/png;base64,{img}"}})
        payload = {
            "model": self.model,
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "messages": [{"role": "user", "content": content}],
        }
        data = self._post(payload, {"Authorization": f"Bearer {self._api_key()}"})
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError) as exc:
            raise ProviderError(502, f"malformed completion payload: {exc}") from exc


class MistralProvider(OpenAICompatibleProvider):
    env_key = "MISTRAL_API_KEY"
    url = "https://api.mistral.ai/v1/chat/completions"


class AnthropicProvider(_HttpAdapter):
    env_key = "ANTHROPIC_API_KEY"
    url = "https://api.anthropic.com/v1/messages"

    def complete(self, prompt, images=(), cfg=SamplingConfig(), step=None):
        content: list[dict] = [{"type": "text", "text": prompt}]
        for img in images:
            content.append({"type": "image", "source": {
                "type": "base64", "media_type": "image/png", "data": img}})
        payload = {
            "model": self.model,
            "max_tokens": 8192,
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "messages": [{"role": "user", "content": content}],
        }
        data = self._post(payload, {
            "x-api-key": self._api_key(),
            "anthropic-version": "2023-06-01",
        })
        try:
            return data["content"][0]["text"]
        except (KeyError, IndexError) as exc:
            raise ProviderError(502, f"malformed completion payload: {exc}") from exc


PROVIDER_ADAPTERS = {
    "openai": OpenAICompatibleProvider,
    "mistral": MistralProvider,
    "anthropic": AnthropicProvider,
}
