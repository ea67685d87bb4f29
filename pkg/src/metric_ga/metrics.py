"""Native string-based MT metrics: BLEU, ChrF2 and length-normalized log-prob.

Both BLEU and ChrF are reported on the 0-100 scale. BLEU consumes whitespace
tokens directly (no embedded tokenizer); ChrF works on raw strings with all
whitespace removed. Multi-reference scores are the arithmetic mean of
single-reference scores, never the multi-reference pooling formula.

Empty hypotheses score 0 on every metric instead of raising: GA mutation can
delete every token of a candidate and the fitness must stay defined.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

from .cases import HypothesisRecord
from .textcore import char_ngrams, tokenize, word_ngrams

BLEU_ORDER = 4
CHRF_ORDER = 6
CHRF_BETA = 2.0

TokenSeq = Sequence[str]


# ---------------------------------------------------------------------------
# BLEU

@lru_cache(maxsize=16384)
def _ref_word_stats(ref: tuple[str, ...]):
    return tuple(word_ngrams(ref, n) for n in range(1, BLEU_ORDER + 1))


def _bleu_counts(hyp: tuple[str, ...], ref: tuple[str, ...]):
    """Clipped/total n-gram counts of ``hyp`` against ``ref``, orders 1..4."""
    ref_stats = _ref_word_stats(ref)
    correct = [0] * BLEU_ORDER
    total = [0] * BLEU_ORDER
    for n in range(1, BLEU_ORDER + 1):
        hyp_counts = word_ngrams(hyp, n)
        ref_counts = ref_stats[n - 1]
        correct[n - 1] = sum(min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items())
        total[n - 1] = sum(hyp_counts.values())
    return correct, total


def _bleu_score(correct, total, hyp_len: int, ref_len: int,
                smooth: bool, effective_order: bool) -> float:
    """BLEU from sufficient statistics, on the 0-100 scale.

    ``smooth`` applies exponential smoothing to zero counts: the k-th zero at
    order n falls back to a precision of 1 / (2^k * total_n). With
    ``effective_order`` the geometric mean runs only over orders for which the
    hypothesis has any n-grams (sentence-level behaviour); without it a
    missing or unmatched order zeroes the score (corpus-level behaviour).
    """
    if hyp_len == 0:
        return 0.0
    precisions = []
    smooth_factor = 1.0
    for n in range(1, BLEU_ORDER + 1):
        if total[n - 1] == 0:
            if effective_order:
                break
            return 0.0
        if correct[n - 1] == 0:
            if not smooth:
                return 0.0
            smooth_factor *= 2.0
            precisions.append(1.0 / (smooth_factor * total[n - 1]))
        else:
            precisions.append(correct[n - 1] / total[n - 1])
    if not precisions:
        return 0.0
    log_mean = sum(math.log(p) for p in precisions) / len(precisions)
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_mean)


def sentence_bleu(hyp: TokenSeq, refs: Sequence[TokenSeq]) -> float:
    """Smoothed sentence BLEU of ``hyp`` against each reference, averaged.

    Orders 1-4, exponential smoothing of zero precisions, brevity penalty,
    effective-order handling for hypotheses shorter than 4 tokens.
    """
    if not refs:
        raise ValueError("sentence_bleu requires at least one reference")
    hyp_t = tuple(hyp)
    scores = []
    for ref in refs:
        ref_t = tuple(ref)
        correct, total = _bleu_counts(hyp_t, ref_t)
        scores.append(_bleu_score(correct, total, len(hyp_t), len(ref_t),
                                  smooth=True, effective_order=True))
    return sum(scores) / len(scores)


def corpus_bleu(pairs: Sequence[tuple[TokenSeq, Sequence[TokenSeq]]]) -> float:
    """Corpus BLEU: pooled clipped counts, pooled-length brevity penalty, no smoothing.

    Every segment must carry the same number of references; with more than one
    the result is the mean of per-reference-slot corpus scores.
    """
    if not pairs:
        raise ValueError("corpus_bleu requires a non-empty corpus")
    n_refs = len(pairs[0][1])
    if n_refs == 0 or any(len(refs) != n_refs for _, refs in pairs):
        raise ValueError("corpus_bleu requires the same non-zero reference count per segment")
    scores = []
    for slot in range(n_refs):
        correct = [0] * BLEU_ORDER
        total = [0] * BLEU_ORDER
        hyp_len = 0
        ref_len = 0
        for hyp, refs in pairs:
            hyp_t = tuple(hyp)
            ref_t = tuple(refs[slot])
            seg_correct, seg_total = _bleu_counts(hyp_t, ref_t)
            for i in range(BLEU_ORDER):
                correct[i] += seg_correct[i]
                total[i] += seg_total[i]
            hyp_len += len(hyp_t)
            ref_len += len(ref_t)
        scores.append(_bleu_score(correct, total, hyp_len, ref_len,
                                  smooth=False, effective_order=False))
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# ChrF

@lru_cache(maxsize=16384)
def _ref_char_stats(ref: str):
    return tuple(char_ngrams(ref, n) for n in range(1, CHRF_ORDER + 1))


def _chrf_segment_stats(hyp: str, ref: str) -> list[tuple[int, int, int]]:
    """Per-order (match, hyp_total, ref_total) over whitespace-free characters."""
    ref_stats = _ref_char_stats(ref)
    stats = []
    for n in range(1, CHRF_ORDER + 1):
        hyp_counts = char_ngrams(hyp, n)
        ref_counts = ref_stats[n - 1]
        match = sum(min(c, ref_counts.get(g, 0)) for g, c in hyp_counts.items())
        stats.append((match, sum(hyp_counts.values()), sum(ref_counts.values())))
    return stats


def _chrf_from_stats(stats: Sequence[tuple[int, int, int]], beta: float = CHRF_BETA) -> float:
    """F_beta of macro-averaged per-order precision and recall, 0-100 scale.

    Orders where the reference has no n-grams are skipped; at an included
    order a hypothesis with no n-grams contributes zero precision.
    """
    precisions = []
    recalls = []
    for match, hyp_total, ref_total in stats:
        if ref_total == 0:
            continue
        precisions.append(match / hyp_total if hyp_total else 0.0)
        recalls.append(match / ref_total)
    if not recalls:
        return 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    beta_sq = beta * beta
    denom = beta_sq * p + r
    if denom == 0.0:
        return 0.0
    return 100.0 * (1.0 + beta_sq) * p * r / denom


def sentence_chrf(hyp: str, refs: Sequence[str]) -> float:
    """ChrF2 of ``hyp`` against each reference string, averaged."""
    if not refs:
        raise ValueError("sentence_chrf requires at least one reference")
    if not hyp.split():
        return 0.0
    scores = [_chrf_from_stats(_chrf_segment_stats(hyp, ref)) for ref in refs]
    return sum(scores) / len(scores)


def corpus_chrf(pairs: Sequence[tuple[str, Sequence[str]]]) -> float:
    """ChrF2 over per-order counts pooled across all segments.

    Reference handling mirrors :func:`corpus_bleu`: equal reference counts per
    segment, mean over reference slots.
    """
    if not pairs:
        raise ValueError("corpus_chrf requires a non-empty corpus")
    n_refs = len(pairs[0][1])
    if n_refs == 0 or any(len(refs) != n_refs for _, refs in pairs):
        raise ValueError("corpus_chrf requires the same non-zero reference count per segment")
    scores = []
    for slot in range(n_refs):
        pooled = [[0, 0, 0] for _ in range(CHRF_ORDER)]
        for hyp, refs in pairs:
            for i, seg in enumerate(_chrf_segment_stats(hyp, refs[slot])):
                pooled[i][0] += seg[0]
                pooled[i][1] += seg[1]
                pooled[i][2] += seg[2]
        scores.append(_chrf_from_stats([tuple(row) for row in pooled]))
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# Log-prob

def length_normalized_logprob(h: HypothesisRecord) -> float:
    """Model log-probability divided by the token count (floored at one)."""
    return h.logprob / max(1, len(tokenize(h.text)))
