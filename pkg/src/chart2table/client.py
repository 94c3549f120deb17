"""Multimodal-model endpoint client.

Sends one chart image plus a fixed prompt per benchmark item and persists
the raw response verbatim for offline scoring.  Decoding is greedy
(temperature 0) and exactly one successful call is recorded per
(item, model, prompt variant); reruns skip items already in the store, so
batches are resumable and idempotent.

The HTTP layer is a plain callable taking a request description, which
tests replace with canned doubles; three request shapes cover chat-style
JSON APIs, Gemini-style JSON APIs, and generic multipart endpoints for
locally hosted models.
"""

from __future__ import annotations

import base64
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable

from .numformat import format_tick
from .parsing import PredictionRecord, append_prediction_record, read_prediction_records
from .tables import BenchmarkItem, TickFormat

BASE_PROMPT = "Generate underlying data table for the chart."


class PromptKind(str, Enum):
    PLAIN = "plain"
    Y_AXIS_HINT = "hint"


@dataclass(frozen=True, slots=True)
class PromptVariant:
    kind: PromptKind = PromptKind.PLAIN
    hint_format: TickFormat = TickFormat.SCIENTIFIC


def build_prompt(item: BenchmarkItem, variant: PromptVariant | PromptKind | str) -> str:
    """The exact prompt text for an item.

    The hint variant appends the chart's major tick values in scientific
    notation, comma-separated.
    """
    if isinstance(variant, str):
        variant = PromptVariant(PromptKind(variant))
    elif isinstance(variant, PromptKind):
        variant = PromptVariant(variant)
    if variant.kind is PromptKind.PLAIN:
        return BASE_PROMPT
    if item.axis is None:  # pragma: no cover - axis is non-optional on items
        raise ValueError("hint variant requires the item's axis")
    ticks = ", ".join(format_tick(v, variant.hint_format) for v in item.axis.tick_values)
    return f"{BASE_PROMPT} Hint: y-axis major ticks are {ticks}"


class RequestShape(str, Enum):
    OPENAI_CHAT = "openai-chat"
    GEMINI = "gemini"
    GENERIC_MULTIPART = "generic-multipart"


@dataclass(frozen=True, slots=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_seconds: tuple[float, ...] = (1.0, 4.0, 15.0)

    def delay(self, attempt: int) -> float:
        if not self.backoff_seconds:
            return 0.0
        return self.backoff_seconds[min(attempt, len(self.backoff_seconds) - 1)]


@dataclass(frozen=True, slots=True)
class EndpointConfig:
    name: str
    base_url: str
    model_id: str
    request_shape: RequestShape = RequestShape.OPENAI_CHAT
    auth_env: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 2048
    rate_limit_per_minute: float = 60.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    timeout_seconds: float = 120.0

    @classmethod
    def from_dict(cls, d: dict) -> "EndpointConfig":
        retry = d.get("retry", {})
        return cls(
            name=d["name"],
            base_url=d["base_url"].rstrip("/"),
            model_id=d["model_id"],
            request_shape=RequestShape(d.get("request_shape", "openai-chat")),
            auth_env=d.get("auth_env", ""),
            temperature=float(d.get("temperature", 0.0)),
            max_output_tokens=int(d.get("max_output_tokens", 2048)),
            rate_limit_per_minute=float(d.get("rate_limit_per_minute", 60.0)),
            retry=RetryPolicy(
                max_attempts=int(retry.get("max_attempts", 3)),
                backoff_seconds=tuple(retry.get("backoff_seconds", (1.0, 4.0, 15.0))),
            ),
            timeout_seconds=float(d.get("timeout_seconds", 120.0)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "EndpointConfig":
        path = Path(path)
        if path.suffix == ".toml":
            import tomllib  # py>=3.11; JSON is the portable format

            return cls.from_dict(tomllib.loads(path.read_text(encoding="utf-8")))
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))


class ClientError(RuntimeError):
    """Endpoint failure with a stable error code for the record."""

    def __init__(self, code: str, detail: str, retryable: bool = False):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.retryable = retryable


def _resolve_auth(endpoint: EndpointConfig) -> str | None:
    if not endpoint.auth_env:
        return None
    token = os.environ.get(endpoint.auth_env)
    if not token:
        raise ClientError("auth", f"environment variable {endpoint.auth_env!r} is not set")
    return token


def build_request(endpoint: EndpointConfig, prompt: str, image_png: bytes) -> dict:
    """Request description for the endpoint's shape (transport-agnostic)."""
    token = _resolve_auth(endpoint)
    b64 = base64.b64encode(image_png).decode("ascii")
    shape = endpoint.request_shape
    if shape is RequestShape.OPENAI_CHAT:
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return {
            "method": "POST",
            "url": f"{endpoint.base_url}/chat/completions",
            "headers": headers,
            "json": {
                "model": endpoint.model_id,
                "temperature": endpoint.temperature,
                "max_tokens": endpoint.max_output_tokens,
                "messages": [
                    {
                        "role": "user",
                        "content": [
                            {"type": "text", "text": prompt},
                            {
                                "type": "image_url",
                                "image_url": {"url": f"data:image/png;base64,{b64}"},
                            },
                        ],
                    }
                ],
            },
            "timeout": endpoint.timeout_seconds,
        }
    if shape is RequestShape.GEMINI:
        headers = {"Content-Type": "application/json"}
        if token:
            headers["x-goog-api-key"] = token
        return {
            "method": "POST",
            "url": f"{endpoint.base_url}/models/{endpoint.model_id}:generateContent",
            "headers": headers,
            "json": {
                "contents": [
                    {
                        "parts": [
                            {"text": prompt},
                            {"inline_data": {"mime_type": "image/png", "data": b64}},
                        ]
                    }
                ],
                "generationConfig": {
                    "temperature": endpoint.temperature,
                    "maxOutputTokens": endpoint.max_output_tokens,
                },
            },
            "timeout": endpoint.timeout_seconds,
        }
    headers = {}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return {
        "method": "POST",
        "url": endpoint.base_url,
        "headers": headers,
        "data": {
            "model": endpoint.model_id,
            "prompt": prompt,
            "temperature": str(endpoint.temperature),
            "max_tokens": str(endpoint.max_output_tokens),
        },
        "files": {"image": ("chart.png", image_png, "image/png")},
        "timeout": endpoint.timeout_seconds,
    }


def extract_text(shape: RequestShape, body: str) -> str:
    """Pull the model's text out of a successful response body."""
    if shape is RequestShape.GENERIC_MULTIPART:
        try:
            parsed = json.loads(body)
        except json.JSONDecodeError:
            return body
        if isinstance(parsed, dict) and isinstance(parsed.get("text"), str):
            return parsed["text"]
        return body
    try:
        parsed = json.loads(body)
        if shape is RequestShape.OPENAI_CHAT:
            return parsed["choices"][0]["message"]["content"]
        parts = parsed["candidates"][0]["content"]["parts"]
        return "".join(p.get("text", "") for p in parts)
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise ClientError("malformed_response", f"cannot extract text: {exc}") from exc


Transport = Callable[[dict], tuple[int, str]]


def http_transport(request: dict) -> tuple[int, str]:
    """Default transport over `requests`; returns (status_code, body)."""
    import requests

    try:
        resp = requests.request(
            request["method"],
            request["url"],
            headers=request.get("headers"),
            json=request.get("json"),
            data=request.get("data"),
            files=request.get("files"),
            timeout=request.get("timeout"),
        )
    except requests.Timeout as exc:
        raise ClientError("timeout", str(exc), retryable=True) from exc
    except requests.RequestException as exc:
        raise ClientError("transport", str(exc), retryable=True) from exc
    return resp.status_code, resp.text


def _classify_status(status: int) -> ClientError | None:
    if status in (401, 403):
        return ClientError("auth", f"HTTP {status}")
    if status == 429:
        return ClientError("quota", f"HTTP {status}", retryable=True)
    if status >= 500:
        return ClientError("http", f"HTTP {status}", retryable=True)
    if status >= 400:
        return ClientError("http", f"HTTP {status}")
    return None


class PredictionStore:
    """Append-only JSON Lines store keyed by (item, model, variant)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._keys: set[tuple[str, str, str]] = set()
        if self.path.exists():
            for record in read_prediction_records(self.path):
                self._keys.add(record.key)

    def __contains__(self, key: tuple[str, str, str]) -> bool:
        return key in self._keys

    def __len__(self) -> int:
        return len(self._keys)

    def append(self, record: PredictionRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        append_prediction_record(self.path, record)
        self._keys.add(record.key)

    def records(self) -> list[PredictionRecord]:
        if not self.path.exists():
            return []
        return read_prediction_records(self.path)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def query_item(
    endpoint: EndpointConfig,
    item: BenchmarkItem,
    variant: PromptVariant | str,
    store: PredictionStore,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
    image_root: str | Path = ".",
) -> PredictionRecord:
    """One logical request for one item; idempotent per store key.

    Transient failures (timeouts, 429s, 5xx) are retried per the endpoint's
    policy; what ultimately gets stored is either the raw response text or
    a failure record with a stable error code and the attempt count.
    """
    if isinstance(variant, str):
        variant = PromptVariant(PromptKind(variant))
    key = (item.item_id, endpoint.name, variant.kind.value)
    if key in store:
        existing = [r for r in store.records() if r.key == key]
        return existing[-1]

    transport = transport or http_transport
    prompt = build_prompt(item, variant)
    image_path = Path(image_root) / item.image_ref if item.image_ref else None
    if image_path is None or not image_path.exists():
        raise FileNotFoundError(f"item {item.item_id!r} has no rendered image at {image_path}")
    image_png = image_path.read_bytes()

    attempts = 0
    error: ClientError | None = None
    text = ""
    while attempts < endpoint.retry.max_attempts:
        attempts += 1
        try:
            request = build_request(endpoint, prompt, image_png)
            status, body = transport(request)
            failure = _classify_status(status)
            if failure is not None:
                raise failure
            text = extract_text(endpoint.request_shape, body)
            error = None
            break
        except ClientError as exc:
            error = exc
            if not exc.retryable or attempts >= endpoint.retry.max_attempts:
                break
            sleep(endpoint.retry.delay(attempts - 1))

    record = PredictionRecord(
        item_id=item.item_id,
        model=endpoint.name,
        prompt_variant=variant.kind.value,
        raw_text=text,
        timestamp=_utc_now(),
        error=None if error is None else error.code,
        attempts=attempts,
    )
    store.append(record)
    return record


def run_batch(
    endpoint: EndpointConfig,
    items: list[BenchmarkItem],
    variant: PromptVariant | str,
    store: PredictionStore,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
    image_root: str | Path = ".",
    progress: Callable[[str, dict], None] | None = None,
) -> dict[str, int]:
    """Query every item, honoring the endpoint rate limit; resumable.

    Returns {"succeeded": s, "failed": f, "skipped": k}.
    """
    if isinstance(variant, str):
        variant = PromptVariant(PromptKind(variant))
    summary = {"succeeded": 0, "failed": 0, "skipped": 0}
    min_interval = 60.0 / endpoint.rate_limit_per_minute if endpoint.rate_limit_per_minute > 0 else 0.0
    last_call = None
    for item in items:
        key = (item.item_id, endpoint.name, variant.kind.value)
        if key in store:
            summary["skipped"] += 1
            continue
        if last_call is not None and min_interval > 0:
            wait = min_interval - (clock() - last_call)
            if wait > 0:
                sleep(wait)
        last_call = clock()
        record = query_item(
            endpoint, item, variant, store,
            transport=transport, sleep=sleep, image_root=image_root,
        )
        summary["succeeded" if record.error is None else "failed"] += 1
        if progress is not None:
            progress(item.item_id, dict(summary))
    return summary
