"""Request handling and transports for the scoring service.

Protocol (one line per message):

    -> {"batch_id": "...", "items": [{"id","src","mt","refs"?}, ...]}
    <- {"batch_id": "...", "scores": [{"id","score"}, ...]}
    <- {"batch_id": "...", "error": "..."}        on a bad request

A malformed request produces an error response and the service keeps
serving; only a model that fails to load terminates the process (before the
first response). Scores are serialized at full precision (shortest
round-trip decimal), so clients caching by exact value stay consistent.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .rules import STUB_RULES


@dataclass
class AdapterConfig:
    model_name: str
    device: str = "cpu"
    batch_size: int = 16

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class StubScorer:
    """In-process deterministic scorer; no model assets needed."""

    def __init__(self, rule: str):
        if rule not in STUB_RULES:
            known = ", ".join(sorted(STUB_RULES))
            raise ValueError(f"unknown stub rule {rule!r} (known: {known})")
        self.name = f"stub:{rule}"
        self._fn, self.needs_reference = STUB_RULES[rule]

    def score_batch(self, items: list[dict]) -> list[float]:
        return [self._fn(item["mt"], item.get("refs")) for item in items]


class CometScorer:
    """Reference-based or QE COMET checkpoints via the unbabel-comet package."""

    def __init__(self, config: AdapterConfig):
        try:
            from comet import download_model, load_from_checkpoint
        except ImportError as exc:
            raise RuntimeError(f"COMET backend not installed: {exc}") from exc
        self.name = config.model_name
        self.needs_reference = "qe" not in config.model_name
        self.batch_size = config.batch_size
        self.device = config.device
        self._model = load_from_checkpoint(download_model(config.model_name))

    def score_batch(self, items: list[dict]) -> list[float]:
        data = []
        for item in items:
            entry = {"src": item["src"], "mt": item["mt"]}
            if self.needs_reference:
                entry["ref"] = item["refs"][0]
            data.append(entry)
        gpus = 0 if self.device == "cpu" else 1
        out = self._model.predict(data, batch_size=self.batch_size, gpus=gpus)
        return [float(s) for s in out.scores]


class BleurtScorer:
    """BLEURT checkpoints via the bleurt package (reference-based)."""

    needs_reference = True

    def __init__(self, config: AdapterConfig):
        try:
            from bleurt import score as bleurt_score
        except ImportError as exc:
            raise RuntimeError(f"BLEURT backend not installed: {exc}") from exc
        self.name = config.model_name
        self._scorer = bleurt_score.BleurtScorer(config.model_name)

    def score_batch(self, items: list[dict]) -> list[float]:
        refs = [item["refs"][0] for item in items]
        cands = [item["mt"] for item in items]
        return [float(s) for s in self._scorer.score(references=refs, candidates=cands)]


def build_scorer(config: AdapterConfig):
    """Instantiate the scorer for a model name; stub:<rule> needs no assets.

    Raises ValueError for an unknown stub rule and RuntimeError when a neural
    backend is unavailable or the model name matches no known family; the CLI
    turns both into a non-zero exit before any response is written.
    """
    name = config.model_name
    if name.startswith("stub:"):
        return StubScorer(name[len("stub:"):])
    if "comet" in name.lower():
        return CometScorer(config)
    if "bleurt" in name.lower():
        return BleurtScorer(config)
    raise RuntimeError(f"no backend for model {name!r}; "
                       "expected stub:<rule>, a COMET name, or a BLEURT checkpoint")


# ---------------------------------------------------------------------------
# Request handling

def _error(batch_id, message: str) -> dict:
    return {"batch_id": batch_id if isinstance(batch_id, str) else "",
            "error": message}


def handle_request(obj, scorer) -> dict:
    """Score one decoded request object; bad requests become error objects."""
    if not isinstance(obj, dict):
        return _error("", "request must be a JSON object")
    batch_id = obj.get("batch_id")
    if not isinstance(batch_id, str):
        return _error(batch_id, "request is missing a string 'batch_id'")
    items = obj.get("items")
    if not isinstance(items, list):
        return _error(batch_id, "request is missing an 'items' list")
    cleaned = []
    for k, item in enumerate(items):
        if not isinstance(item, dict):
            return _error(batch_id, f"item {k} is not an object")
        missing = [key for key in ("id", "src", "mt") if key not in item]
        if missing:
            return _error(batch_id, f"item {k} is missing {missing}")
        refs = item.get("refs")
        if refs is not None and (not isinstance(refs, list)
                                 or not all(isinstance(r, str) for r in refs)):
            return _error(batch_id, f"item {k} has a malformed 'refs' list")
        if scorer.needs_reference and not refs:
            return _error(batch_id,
                          f"model {scorer.name} needs references, item "
                          f"{item['id']!r} has none")
        cleaned.append({"id": str(item["id"]), "src": str(item["src"]),
                        "mt": str(item["mt"]), "refs": refs})
    try:
        scores = scorer.score_batch(cleaned)
    except Exception as exc:  # surface scoring failures in-band
        return _error(batch_id, f"scoring failed: {exc}")
    return {"batch_id": batch_id,
            "scores": [{"id": item["id"], "score": score}
                       for item, score in zip(cleaned, scores)]}


def handle_line(line: str, scorer) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        return _error("", f"malformed request line: {exc.msg}")
    return handle_request(obj, scorer)


# ---------------------------------------------------------------------------
# Transports

def serve_stdio(scorer, stdin=None, stdout=None) -> None:
    """Blocking request loop: one response line per request line."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        response = handle_line(line, scorer)
        stdout.write(json.dumps(response, ensure_ascii=False) + "\n")
        stdout.flush()


def make_http_server(scorer, port: int) -> ThreadingHTTPServer:
    """HTTP server accepting the same request bodies via POST /score."""

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if self.path.rstrip("/") != "/score":
                self.send_error(404, "unknown path; POST /score")
                return
            length = int(self.headers.get("Content-Length", 0))
            body = self.rfile.read(length).decode("utf-8")
            response = handle_line(body, scorer)
            payload = json.dumps(response, ensure_ascii=False).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, fmt, *args):
            print(f"[scorer-adapter] {fmt % args}", file=sys.stderr)

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)
