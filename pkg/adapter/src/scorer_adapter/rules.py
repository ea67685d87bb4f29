"""Deterministic stub scoring rules for CI and desk-scale experiments.

Each rule is specified exactly, down to the arithmetic, so a stub process and
any in-process reimplementation of the same rule produce bit-identical
doubles:

- neg-edit-distance: -levenshtein(mt, ref) / max(1, len(ref)), averaged over
  the refs in order (sum of per-ref scores divided by the count).
- len-bias: token count of mt divided by 100.
- token-overlap-ignoring-numbers: multiset F1 over non-digit tokens,
  2*p*r/(p+r) with p = matches/len(mt'), r = matches/len(ref'), averaged over
  refs in order. Both sides empty scores 1.0, one side empty 0.0.
"""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    row = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        diag = row[0]
        row[0] = i
        for j, cb in enumerate(b, start=1):
            prev = row[j]
            row[j] = min(prev + 1, row[j - 1] + 1, diag + (ca != cb))
            diag = prev
    return row[-1]


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def neg_edit_distance(mt: str, refs: list[str]) -> float:
    return _mean([-levenshtein(mt, ref) / max(1, len(ref)) for ref in refs])


def len_bias(mt: str, refs: list[str] | None) -> float:
    return len(mt.split()) / 100.0


def _non_digit_tokens(text: str) -> list[str]:
    return [tok for tok in text.split() if not tok.isdigit()]


def _multiset_f1(hyp_tokens: list[str], ref_tokens: list[str]) -> float:
    if not hyp_tokens and not ref_tokens:
        return 1.0
    if not hyp_tokens or not ref_tokens:
        return 0.0
    counts: dict[str, int] = {}
    for tok in ref_tokens:
        counts[tok] = counts.get(tok, 0) + 1
    inter = 0
    for tok in hyp_tokens:
        if counts.get(tok, 0) > 0:
            counts[tok] -= 1
            inter += 1
    if inter == 0:
        return 0.0
    p = inter / len(hyp_tokens)
    r = inter / len(ref_tokens)
    return 2 * p * r / (p + r)


def token_overlap_ignoring_numbers(mt: str, refs: list[str]) -> float:
    hyp_tokens = _non_digit_tokens(mt)
    return _mean([_multiset_f1(hyp_tokens, _non_digit_tokens(ref)) for ref in refs])


# rule name -> (fn(mt, refs) -> float, needs_reference)
STUB_RULES = {
    "neg-edit-distance": (neg_edit_distance, True),
    "len-bias": (len_bias, False),
    "token-overlap-ignoring-numbers": (token_overlap_ignoring_numbers, True),
}
