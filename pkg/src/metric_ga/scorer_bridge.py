"""Clients for external sentence scorers speaking a one-line JSON batch protocol.

A request is a single line

    {"batch_id": "...", "items": [{"id": "...", "src": "...", "mt": "...",
                                   "refs": ["..."]}, ...]}

and the response a single line

    {"batch_id": "...", "scores": [{"id": "...", "score": 0.5}, ...]}

``refs`` is omitted for reference-free (QE-style) metrics. Three endpoint
kinds are supported: a resident subprocess fed over stdin/stdout, an HTTP
service accepting the same body via POST /score, and deterministic in-process
mock rules for tests and desk-scale experiments. Scores are cached by exact
input strings so re-evaluating duplicated GA individuals is free.
"""

from __future__ import annotations

import json
import os
import shlex
import subprocess
import threading
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

TIMEOUT_ENV_VAR = "METRIC_GA_SCORER_TIMEOUT_MS"
DEFAULT_TIMEOUT_MS = 30_000

ENDPOINT_KINDS = ("subprocess", "http", "mock")


class ScorerTransportError(RuntimeError):
    """The endpoint could not be reached or died mid-conversation."""


class ScorerProtocolError(RuntimeError):
    """The endpoint answered, but not with a well-formed response."""


@dataclass(frozen=True)
class ScoreItem:
    """One scoring request. ``refs`` is None for reference-free metrics."""

    id: str
    src: str
    mt: str
    refs: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ScorerEndpoint:
    """Where scores come from: a command line, a URL, or a named mock rule."""

    kind: str
    address: str = ""
    mock_spec: str = ""

    def __post_init__(self):
        if self.kind not in ENDPOINT_KINDS:
            raise ValueError(f"unknown endpoint kind {self.kind!r}")
        if self.kind == "mock" and not self.mock_spec:
            raise ValueError("mock endpoints require a mock_spec")
        if self.kind != "mock" and not self.address:
            raise ValueError(f"{self.kind} endpoints require an address")


# ---------------------------------------------------------------------------
# Mock rules

def _levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
        prev = cur
    return prev[-1]


def _require_refs(item: ScoreItem, rule: str) -> tuple[str, ...]:
    if not item.refs:
        raise ValueError(f"mock rule {rule!r} needs references, item {item.id!r} has none")
    return item.refs


def _neg_edit_distance(item: ScoreItem) -> float:
    """-levenshtein(mt, ref) / max(1, len(ref)), averaged over refs in order."""
    refs = _require_refs(item, "neg-edit-distance")
    scores = [-_levenshtein(item.mt, r) / max(1, len(r)) for r in refs]
    return sum(scores) / len(scores)


def _len_bias(item: ScoreItem) -> float:
    """Token count of mt times 0.01 (computed as count / 100)."""
    return len(item.mt.split()) / 100.0


def _token_overlap_ignoring_numbers(item: ScoreItem) -> float:
    """Multiset F1 over non-digit tokens, averaged over refs in order.

    Tokens made entirely of digits are dropped from both sides before
    matching: a designed blind spot that lets number errors pass unseen.
    """
    refs = _require_refs(item, "token-overlap-ignoring-numbers")
    mt_tokens = [t for t in item.mt.split() if not t.isdigit()]
    scores = []
    for ref in refs:
        ref_tokens = [t for t in ref.split() if not t.isdigit()]
        scores.append(_token_f1(mt_tokens, ref_tokens))
    return sum(scores) / len(scores)


def _token_f1(hyp_tokens: list[str], ref_tokens: list[str]) -> float:
    if not hyp_tokens and not ref_tokens:
        return 1.0
    if not hyp_tokens or not ref_tokens:
        return 0.0
    inter = sum((Counter(hyp_tokens) & Counter(ref_tokens)).values())
    if inter == 0:
        return 0.0
    p = inter / len(hyp_tokens)
    r = inter / len(ref_tokens)
    return 2 * p * r / (p + r)


# rule name -> (scoring function, needs_reference)
MOCK_RULES: dict[str, tuple[Callable[[ScoreItem], float], bool]] = {
    "neg-edit-distance": (_neg_edit_distance, True),
    "len-bias": (_len_bias, False),
    "token-overlap-ignoring-numbers": (_token_overlap_ignoring_numbers, True),
}


def make_mock_scorer(spec: str) -> ScorerEndpoint:
    """Endpoint for one of the documented deterministic mock rules."""
    if spec not in MOCK_RULES:
        known = ", ".join(sorted(MOCK_RULES))
        raise ValueError(f"unknown mock scorer {spec!r} (known: {known})")
    return ScorerEndpoint(kind="mock", mock_spec=spec)


def mock_needs_reference(spec: str) -> bool:
    if spec not in MOCK_RULES:
        raise ValueError(f"unknown mock scorer {spec!r}")
    return MOCK_RULES[spec][1]


# ---------------------------------------------------------------------------
# Cache

class ScoreCache:
    """Exact-string score cache; concurrent readers, exclusive writers."""

    def __init__(self):
        self._entries: dict[tuple, float] = {}
        self._lock = threading.Lock()

    @staticmethod
    def key(endpoint: ScorerEndpoint, item: ScoreItem) -> tuple:
        return (endpoint, item.src, item.mt, item.refs)

    def get(self, key: tuple) -> float | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: tuple, score: float) -> None:
        with self._lock:
            self._entries[key] = score

    def __len__(self) -> int:
        return len(self._entries)


# ---------------------------------------------------------------------------
# Client

def _timeout_seconds(timeout_ms: int | None) -> float:
    if timeout_ms is None:
        timeout_ms = int(os.environ.get(TIMEOUT_ENV_VAR, DEFAULT_TIMEOUT_MS))
    return timeout_ms / 1000.0


class ScorerClient:
    """Owns one endpoint's transport state and serializes its batches.

    ``batches_sent`` / ``items_sent`` count what actually reached the
    endpoint, i.e. cache hits are excluded; tests use them to observe the
    cache and dedup laws.
    """

    def __init__(self, endpoint: ScorerEndpoint, cache: ScoreCache | None = None,
                 timeout_ms: int | None = None, use_cache: bool = True):
        self.endpoint = endpoint
        self.cache = cache if cache is not None else ScoreCache()
        self.use_cache = use_cache
        self.timeout = _timeout_seconds(timeout_ms)
        self.batches_sent = 0
        self.items_sent = 0
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None
        self._batch_seq = 0

    def score_batch(self, items: Sequence[ScoreItem]) -> list[tuple[str, float]]:
        """Score all items, consulting the cache first; output order = input order."""
        if not items:
            raise ValueError("score_batch requires a non-empty item list")
        ids = [item.id for item in items]
        if len(set(ids)) != len(ids):
            raise ValueError("score_batch requires unique item ids within a batch")

        scores: dict[str, float] = {}
        misses: dict[tuple, ScoreItem] = {}
        for item in items:
            key = ScoreCache.key(self.endpoint, item)
            hit = self.cache.get(key) if self.use_cache else None
            if hit is not None:
                scores[item.id] = hit
            elif key not in misses:
                misses[key] = item

        if misses:
            with self._lock:
                fetched = self._dispatch(list(misses.values()))
            for key, item in misses.items():
                score = fetched[item.id]
                self.cache.put(key, score)
            for item in items:
                if item.id not in scores:
                    key = ScoreCache.key(self.endpoint, item)
                    scores[item.id] = fetched[misses[key].id]
        return [(item.id, scores[item.id]) for item in items]

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except Exception:
                self._proc.kill()
            self._proc = None

    # -- transports --------------------------------------------------------

    def _dispatch(self, items: list[ScoreItem]) -> dict[str, float]:
        self.batches_sent += 1
        self.items_sent += len(items)
        if self.endpoint.kind == "mock":
            rule = MOCK_RULES[self.endpoint.mock_spec][0]
            return {item.id: rule(item) for item in items}
        request = self._request_line(items)
        if self.endpoint.kind == "subprocess":
            raw = self._roundtrip_subprocess(request)
        else:
            raw = self._roundtrip_http(request)
        return self._parse_response(raw, items)

    def _request_line(self, items: list[ScoreItem]) -> str:
        self._batch_seq += 1
        payload = {"batch_id": f"b{self._batch_seq}", "items": []}
        for item in items:
            entry = {"id": item.id, "src": item.src, "mt": item.mt}
            if item.refs is not None:
                entry["refs"] = list(item.refs)
            payload["items"].append(entry)
        return json.dumps(payload, ensure_ascii=False)

    def _roundtrip_subprocess(self, request: str) -> str:
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    shlex.split(self.endpoint.address),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    encoding="utf-8",
                    bufsize=1,
                )
            except OSError as exc:
                raise ScorerTransportError(
                    f"cannot start scorer {self.endpoint.address!r}: {exc}") from exc
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ScorerTransportError(
                f"scorer process {self.endpoint.address!r} is gone: {exc}") from exc

        proc = self._proc
        box: list[str] = []
        reader = threading.Thread(target=lambda: box.append(proc.stdout.readline()),
                                  daemon=True)
        reader.start()
        reader.join(self.timeout)
        if reader.is_alive():
            # The stalled reader owns the pipe now; this child is unusable.
            proc.kill()
            self._proc = None
            raise ScorerTransportError(
                f"scorer {self.endpoint.address!r} timed out after {self.timeout:.1f}s")
        line = box[0] if box else ""
        if not line:
            code = proc.poll()
            self._proc = None
            raise ScorerTransportError(
                f"scorer {self.endpoint.address!r} closed its output (exit={code})")
        return line

    def _roundtrip_http(self, request: str) -> str:
        url = self.endpoint.address
        if not url.rstrip("/").endswith("/score"):
            url = url.rstrip("/") + "/score"
        req = urllib.request.Request(
            url, data=request.encode("utf-8"),
            headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.read().decode("utf-8")
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise ScorerTransportError(f"scorer at {url!r} unreachable: {exc}") from exc

    def _parse_response(self, raw: str, items: list[ScoreItem]) -> dict[str, float]:
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ScorerProtocolError(f"malformed scorer response: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ScorerProtocolError("scorer response is not an object")
        if "error" in obj:
            raise ScorerProtocolError(f"scorer reported an error: {obj['error']}")
        got = {}
        for entry in obj.get("scores", []):
            if not isinstance(entry, dict) or "id" not in entry or "score" not in entry:
                raise ScorerProtocolError(f"malformed score entry: {entry!r}")
            try:
                got[str(entry["id"])] = float(entry["score"])
            except (TypeError, ValueError):
                raise ScorerProtocolError(f"non-numeric score for id {entry['id']!r}") from None
        missing = [item.id for item in items if item.id not in got]
        if missing:
            raise ScorerProtocolError(f"scorer response is missing ids: {missing}")
        return got


# ---------------------------------------------------------------------------
# Process-wide client registry (keeps subprocess scorers resident)

_CLIENTS: dict[ScorerEndpoint, ScorerClient] = {}
_CLIENTS_LOCK = threading.Lock()


def get_client(endpoint: ScorerEndpoint) -> ScorerClient:
    with _CLIENTS_LOCK:
        client = _CLIENTS.get(endpoint)
        if client is None:
            client = ScorerClient(endpoint)
            _CLIENTS[endpoint] = client
        return client


def score_batch(endpoint: ScorerEndpoint, items: Sequence[ScoreItem]) -> list[tuple[str, float]]:
    """Score a batch via the shared client for ``endpoint``."""
    return get_client(endpoint).score_batch(items)


def close_clients() -> None:
    with _CLIENTS_LOCK:
        for client in _CLIENTS.values():
            client.close()
        _CLIENTS.clear()
