"""Model providers: the completion interface, a deterministic mock, and an HTTP client.

The mock provider answers from an ordered substring-rule table (first match
wins, and a final catch-all rule is mandatory) with rule-supplied token counts
and latencies, so executions are fully reproducible including their timings.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path


class ProviderError(RuntimeError):
    """Base class for provider failures."""


class ProviderUnavailable(ProviderError):
    """The provider cannot serve requests; execution aborts."""

    def __init__(self, message: str, stats=None) -> None:
        super().__init__(message)
        self.stats = stats  # partial ExecutionStats when raised mid-run


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    prompt: str


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    input_tokens: int
    output_tokens: int
    latency_s: float

    def __post_init__(self) -> None:
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ProviderError("token counts must be nonnegative")


@dataclass(frozen=True)
class MockRule:
    """Answer `respond` whenever `match` occurs in the prompt; '' matches everything."""

    match: str
    respond: str
    input_tokens: int = 0
    output_tokens: int = 0
    latency_s: float = 0.0


class MockProvider:
    """Deterministic provider: ordered substring rules, first match wins.

    The final rule must have match '' so every prompt gets an answer. A log of
    (model_id, prompt) pairs is kept for independent call accounting in tests.
    """

    def __init__(self, rules: list[MockRule]) -> None:
        if not rules or rules[-1].match != "":
            raise ProviderError("mock rules must end with a default rule (match '')")
        self.rules = list(rules)
        self.calls: list[tuple[str, str]] = []
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            self.calls.append((request.model_id, request.prompt))
        for rule in self.rules:
            if rule.match in request.prompt:
                return CompletionResponse(
                    text=rule.respond,
                    input_tokens=rule.input_tokens,
                    output_tokens=rule.output_tokens,
                    latency_s=rule.latency_s,
                )
        raise ProviderError("unreachable: default rule matches every prompt")


def rules_from_json(docs: list[dict]) -> list[MockRule]:
    return [
        MockRule(
            match=d["match"],
            respond=d["respond"],
            input_tokens=int(d.get("input_tokens", 0)),
            output_tokens=int(d.get("output_tokens", 0)),
            latency_s=float(d.get("latency_s", 0.0)),
        )
        for d in docs
    ]


def load_mock_rules(path: str | Path) -> list[MockRule]:
    return rules_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class HttpProviderConfig:
    """Endpoint and model-name mapping; the API key comes from the environment."""

    endpoint: str
    model_names: dict[str, str] = field(default_factory=dict)
    api_key_env: str = "SEMPIPE_API_KEY"
    timeout_s: float = 60.0


class HttpProvider:
    """Minimal JSON-over-HTTP completion client behind the provider interface."""

    def __init__(self, config: HttpProviderConfig) -> None:
        self.config = config

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        import httpx

        api_key = os.environ.get(self.config.api_key_env, "")
        model = self.config.model_names.get(request.model_id, request.model_id)
        started = time.monotonic()
        try:
            response = httpx.post(
                self.config.endpoint,
                json={"model": model, "prompt": request.prompt},
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.config.timeout_s,
            )
            response.raise_for_status()
            body = response.json()
        except Exception as exc:
            raise ProviderUnavailable(f"completion request failed: {exc}") from exc
        return CompletionResponse(
            text=str(body.get("text", "")),
            input_tokens=int(body.get("input_tokens", 0)),
            output_tokens=int(body.get("output_tokens", 0)),
            latency_s=time.monotonic() - started,
        )


def load_http_provider(path: str | Path) -> HttpProvider:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    config = HttpProviderConfig(
        endpoint=doc["endpoint"],
        model_names=dict(doc.get("model_names", {})),
        api_key_env=doc.get("api_key_env", "SEMPIPE_API_KEY"),
        timeout_s=float(doc.get("timeout_s", 60.0)),
    )
    return HttpProvider(config)
