"""Chat-completion backends: an OpenAI-compatible HTTP client and a
record/replay mock for hermetic runs.

Both expose the same `complete(bundle, params)` surface, so callers never
care which one they hold. `complete_batch` adds bounded parallelism with
order-preserving results and retry-with-backoff on transient failures.
"""

from __future__ import annotations

import itertools
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

from .errors import (
    BackendError,
    HttpStatusError,
    MalformedResponseError,
    NetworkError,
    RateLimitedError,
    TapeMissError,
)
from .fileio import read_jsonl, write_jsonl
from .prompting import PromptBundle

API_KEY_ENV = "P2T_API_KEY"


@dataclass(frozen=True)
class GenerationParams:
    model: str
    temperature: float = 0.0
    max_tokens: int = 256
    timeout: float = 30.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


@dataclass(frozen=True)
class Completion:
    text: str
    latency: float
    request_id: str


_request_counter = itertools.count(1)
_request_lock = threading.Lock()


def _next_request_id() -> str:
    with _request_lock:
        return f"req-{next(_request_counter):06d}"


class CompletionBackend(Protocol):
    def complete(self, bundle: PromptBundle, params: GenerationParams) -> Completion: ...


class HttpBackend:
    """POSTs {base_url}/v1/chat/completions with the standard JSON body and
    returns the first choice's message content verbatim. The API key comes
    from the P2T_API_KEY environment variable unless given explicitly."""

    def __init__(self, base_url: str, api_key: str | None = None, session: requests.Session | None = None) -> None:
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self._session = session or requests.Session()

    def complete(self, bundle: PromptBundle, params: GenerationParams) -> Completion:
        body = {
            "model": params.model,
            "messages": [{"role": m.role, "content": m.content} for m in bundle.messages],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        }
        if params.seed is not None:
            body["seed"] = params.seed
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.perf_counter()
        try:
            resp = self._session.post(
                f"{self.base_url}/v1/chat/completions",
                json=body,
                headers=headers,
                timeout=params.timeout,
            )
        except (requests.Timeout, requests.ConnectionError) as exc:
            raise NetworkError(str(exc)) from exc
        latency = time.perf_counter() - started
        if resp.status_code == 429:
            raise RateLimitedError(f"rate limited: {resp.text[:200]}")
        if resp.status_code >= 400:
            raise HttpStatusError(resp.status_code, resp.text[:200])
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"missing choices/content: {exc}") from exc
        if not isinstance(text, str):
            raise MalformedResponseError("message content is not a string")
        return Completion(text=text, latency=latency, request_id=_next_request_id())


class ReplayTape:
    """Recorded completions keyed by (mode, final user-message text).

    The file form is JSONL of {mode, user_text, response_text}. Lookups are
    logged so tests can observe exactly which requests were made.
    """

    def __init__(self, entries: Sequence[dict] | None = None) -> None:
        self.entries: list[dict] = []
        self._index: dict[tuple[str, str], str] = {}
        self.lookups: list[tuple[str, str]] = []
        self._lock = threading.Lock()
        for entry in entries or []:
            self.add(entry["mode"], entry["user_text"], entry["response_text"])

    @classmethod
    def load(cls, path: str | Path) -> "ReplayTape":
        return cls(read_jsonl(path))

    def save(self, path: str | Path) -> None:
        write_jsonl(path, self.entries)

    def add(self, mode: str, user_text: str, response_text: str) -> None:
        with self._lock:
            self.entries.append(
                {"mode": mode, "user_text": user_text, "response_text": response_text}
            )
            self._index[(mode, user_text)] = response_text

    def lookup(self, mode: str, user_text: str) -> str:
        key = (mode, user_text)
        with self._lock:
            self.lookups.append(key)
            if key not in self._index:
                raise TapeMissError(key)
            return self._index[key]

    def __len__(self) -> int:
        return len(self.entries)


class MockBackend:
    """Replays a tape; in record mode, misses fall through to a live backend
    and the response is appended to the tape."""

    def __init__(self, tape: ReplayTape, record_from: CompletionBackend | None = None) -> None:
        self.tape = tape
        self.record_from = record_from

    def complete(self, bundle: PromptBundle, params: GenerationParams | None = None) -> Completion:
        key = (bundle.mode.value, bundle.final_user_text)
        try:
            text = self.tape.lookup(*key)
        except TapeMissError:
            if self.record_from is None or params is None:
                raise
            completion = self.record_from.complete(bundle, params)
            self.tape.add(key[0], key[1], completion.text)
            return completion
        return Completion(text=text, latency=0.0, request_id=_next_request_id())


def mock_complete(bundle: PromptBundle, tape: ReplayTape) -> Completion:
    """Strict replay of one bundle against a loaded tape."""
    return MockBackend(tape).complete(bundle)


def complete_batch(
    backend: CompletionBackend,
    bundles: Sequence[PromptBundle],
    params: GenerationParams,
    max_in_flight: int = 4,
    max_attempts: int = 3,
    backoff_base: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> list[Completion | BackendError]:
    """Run many completions with at most max_in_flight outstanding.

    Results come back in input order. Transient failures (rate limits,
    network) are retried with exponential backoff; any other backend error
    is recorded in place so one bad request never aborts the batch.
    """
    if max_in_flight < 1:
        raise ValueError("max_in_flight must be >= 1")

    def one(bundle: PromptBundle) -> Completion | BackendError:
        last: BackendError | None = None
        for attempt in range(max_attempts):
            try:
                return backend.complete(bundle, params)
            except (RateLimitedError, NetworkError) as exc:
                last = exc
                if attempt + 1 < max_attempts:
                    sleep(backoff_base * (2**attempt))
            except BackendError as exc:
                return exc
        assert last is not None
        return last

    with ThreadPoolExecutor(max_workers=max_in_flight) as pool:
        futures = [pool.submit(one, b) for b in bundles]
        return [f.result() for f in futures]
