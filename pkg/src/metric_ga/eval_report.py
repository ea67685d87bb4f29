"""Reranking baselines, corpus-level reports, improve/degrade ratios, and
paired bootstrap significance testing.

Bootstrap confidence intervals are percentile intervals: segment indices are
resampled with replacement, the per-resample means form an empirical
distribution, and the reported interval spans its 2.5th and 97.5th order
statistics. The one-sided p-value counts resamples where system A fails to
beat system B, ties included (conservative).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import scorer_bridge
from .cases import SentenceCase
from .fitness import FitnessComponent, mbr_rank, mbr_spec, oracle_spec, evaluate_population
from .metrics import corpus_bleu, corpus_chrf, length_normalized_logprob
from .scorer_bridge import ScoreItem
from .textcore import tokenize

RERANK_MODES = ("logprob", "oracle", "mbr")


@dataclass
class BootstrapReport:
    """Mean and 95% interval of resampled system-A means, plus the p-value."""

    mean: float
    ci_low: float
    ci_high: float
    resamples: int
    p_better: float | None = None


def rerank(case: SentenceCase, mode: str,
           component: FitnessComponent | None = None) -> int:
    """Index of the chosen hypothesis; ties go to the lowest index.

    ``logprob`` picks the highest length-normalized model log-prob. ``oracle``
    scores hypotheses with ``component`` against the true references. ``mbr``
    scores them against the deduplicated hypothesis texts as
    pseudo-references.
    """
    if mode not in RERANK_MODES:
        raise ValueError(f"unknown rerank mode {mode!r}")
    if mode == "logprob":
        scores = [length_normalized_logprob(h) for h in case.hyps]
        return max(range(len(scores)), key=lambda i: (scores[i], -i))
    if component is None:
        raise ValueError(f"rerank mode {mode!r} requires a metric component")
    if mode == "oracle":
        if not case.refs:
            raise ValueError(f"case {case.id!r} has no references for oracle reranking")
        spec = oracle_spec([component], case.refs)
        values = evaluate_population(spec, case.src, case.hyp_texts)
        return max(range(len(values)), key=lambda i: (values[i].total, -i))
    spec = mbr_spec([component], list(dict.fromkeys(case.hyp_texts)))
    ranked = mbr_rank(spec, case.src, case.hyp_texts)
    return ranked[0][0]


def corpus_report(cases: Sequence[SentenceCase], chosen_texts: Sequence[str],
                  metrics: Sequence[FitnessComponent]) -> dict[str, float]:
    """Corpus score per metric for one chosen translation per case.

    Native metrics pool their counts corpus-style; external metrics are the
    unweighted mean of segment scores.
    """
    if len(cases) != len(chosen_texts):
        raise ValueError("corpus_report requires one chosen text per case")
    if not cases:
        raise ValueError("corpus_report requires at least one case")
    report: dict[str, float] = {}
    for comp in metrics:
        if comp.metric == "bleu":
            pairs = [(tokenize(text), [tokenize(r) for r in case.refs])
                     for case, text in zip(cases, chosen_texts)]
            report[comp.name] = corpus_bleu(pairs)
        elif comp.metric == "chrf":
            pairs = [(text, list(case.refs)) for case, text in zip(cases, chosen_texts)]
            report[comp.name] = corpus_chrf(pairs)
        else:
            items = []
            for i, (case, text) in enumerate(zip(cases, chosen_texts)):
                refs = tuple(case.refs) if comp.needs_reference else None
                items.append(ScoreItem(id=f"s{i}", src=case.src, mt=text, refs=refs))
            scores = [s for _, s in scorer_bridge.score_batch(comp.endpoint, items)]
            report[comp.name] = sum(scores) / len(scores)
    return report


def ratio_table(held_out_scores_ga: Sequence[float],
                held_out_scores_baseline: Sequence[float]) -> tuple[float, float, float]:
    """Percentages of segments where the first system's score strictly
    improves, strictly degrades, or exactly equals the baseline's."""
    if len(held_out_scores_ga) != len(held_out_scores_baseline):
        raise ValueError("ratio_table requires aligned score lists")
    if not held_out_scores_ga:
        raise ValueError("ratio_table requires non-empty score lists")
    n = len(held_out_scores_ga)
    improved = sum(1 for g, b in zip(held_out_scores_ga, held_out_scores_baseline) if g > b)
    degraded = sum(1 for g, b in zip(held_out_scores_ga, held_out_scores_baseline) if g < b)
    unchanged = n - improved - degraded
    return (100.0 * improved / n, 100.0 * degraded / n, 100.0 * unchanged / n)


def paired_bootstrap(scores_a: Sequence[float], scores_b: Sequence[float] | None,
                     resamples: int = 100_000, seed: int = 0) -> BootstrapReport:
    """Paired bootstrap over segments; deterministic for a given seed.

    Both systems are resampled with the same segment indices per resample.
    ``p_better`` is the fraction of resamples where mean(a) <= mean(b) and is
    None when ``scores_b`` is None (CI-only report).
    """
    a = np.asarray(scores_a, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("paired_bootstrap requires a non-empty score vector")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    b = None
    if scores_b is not None:
        b = np.asarray(scores_b, dtype=float)
        if b.shape != a.shape:
            raise ValueError("score vectors are not aligned")

    rng = np.random.default_rng(seed)
    n = a.size
    means_a = np.empty(resamples, dtype=float)
    not_better = 0
    done = 0
    while done < resamples:
        chunk = min(8192, resamples - done)
        idx = rng.integers(0, n, size=(chunk, n))
        resampled_a = a[idx].mean(axis=1)
        means_a[done:done + chunk] = resampled_a
        if b is not None:
            not_better += int(np.count_nonzero(resampled_a <= b[idx].mean(axis=1)))
        done += chunk

    means_a.sort()
    lo = means_a[math.floor(0.025 * (resamples - 1))]
    hi = means_a[math.ceil(0.975 * (resamples - 1))]
    p_better = not_better / resamples if b is not None else None
    return BootstrapReport(mean=float(means_a.mean()), ci_low=float(lo),
                           ci_high=float(hi), resamples=resamples, p_better=p_better)
