"""Test-set cases: a source sentence with references and candidate hypotheses.

The on-disk format is UTF-8 JSON lines, one case per line:

    {"id": "...", "src": "...", "refs": ["..."],
     "hyps": [{"text": "...", "logprob": -3.1, "origin": "beam"}, ...]}

``logprob`` defaults to 0.0 and ``origin`` to "user" when omitted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

ORIGINS = ("beam", "sample", "user")


class CaseParseError(ValueError):
    """Malformed case input; the message names the offending line."""


@dataclass
class HypothesisRecord:
    """One candidate translation with its model log-probability (natural log)."""

    text: str
    logprob: float = 0.0
    origin: str = "user"


@dataclass
class SentenceCase:
    """One test-set item: source, reference list, initial hypotheses."""

    id: str
    src: str
    refs: list[str] = field(default_factory=list)
    hyps: list[HypothesisRecord] = field(default_factory=list)

    @property
    def hyp_texts(self) -> list[str]:
        return [h.text for h in self.hyps]


def parse_case(obj: dict, where: str = "case") -> SentenceCase:
    """Build a validated SentenceCase from a decoded JSON object."""
    if not isinstance(obj, dict):
        raise CaseParseError(f"{where}: expected a JSON object")
    try:
        case_id = str(obj["id"])
        src = str(obj["src"])
        raw_hyps = obj["hyps"]
    except KeyError as exc:
        raise CaseParseError(f"{where}: missing required field {exc.args[0]!r}") from None
    refs = [str(r) for r in obj.get("refs", [])]
    if not isinstance(raw_hyps, list) or not raw_hyps:
        raise CaseParseError(f"{where}: 'hyps' must be a non-empty list")
    hyps = []
    for k, h in enumerate(raw_hyps):
        if not isinstance(h, dict) or "text" not in h:
            raise CaseParseError(f"{where}: hypothesis {k} must be an object with 'text'")
        origin = str(h.get("origin", "user"))
        if origin not in ORIGINS:
            raise CaseParseError(
                f"{where}: hypothesis {k} has unknown origin {origin!r}"
                f" (expected one of {', '.join(ORIGINS)})"
            )
        hyps.append(HypothesisRecord(str(h["text"]), float(h.get("logprob", 0.0)), origin))
    return SentenceCase(case_id, src, refs, hyps)


def load_cases(lines: Iterable[str]) -> list[SentenceCase]:
    """Parse JSONL content; parse errors carry 1-based line numbers."""
    cases = []
    for n, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CaseParseError(f"line {n}: invalid JSON ({exc.msg})") from None
        cases.append(parse_case(obj, where=f"line {n}"))
    return cases


def read_cases(path: str) -> list[SentenceCase]:
    with open(path, encoding="utf-8") as fh:
        return load_cases(fh)


def case_to_dict(case: SentenceCase) -> dict:
    return {
        "id": case.id,
        "src": case.src,
        "refs": list(case.refs),
        "hyps": [{"text": h.text, "logprob": h.logprob, "origin": h.origin} for h in case.hyps],
    }


def write_cases(path: str, cases: Iterable[SentenceCase]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for case in cases:
            fh.write(json.dumps(case_to_dict(case), ensure_ascii=False) + "\n")
