"""Fitness evaluation of candidate texts: single metrics or summed compositions.

Two modes. Oracle mode scores every reference-needing component against the
true references (multi-reference averaging, as in :mod:`metric_ga.metrics`).
MBR mode replaces the references with a fixed pseudo-reference set, usually
the deduplicated initial hypotheses, and averages each reference-needing
component over all pseudo-references. Reference-free components score
(src, candidate) once in either mode. Component scores are summed with no
scaling into the fitness total.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import scorer_bridge
from .cases import SentenceCase
from .metrics import sentence_bleu, sentence_chrf
from .scorer_bridge import ScoreItem, ScorerEndpoint, make_mock_scorer, mock_needs_reference
from .textcore import tokenize

NATIVE_METRICS = ("bleu", "chrf")


@dataclass(frozen=True)
class FitnessComponent:
    """One metric inside a fitness composition.

    ``metric`` is "bleu", "chrf", or "external"; external components carry the
    scorer endpoint that produces their scores.
    """

    metric: str
    endpoint: ScorerEndpoint | None = None
    needs_reference: bool = True
    needs_source: bool = False
    name: str = ""

    def __post_init__(self):
        if self.metric in NATIVE_METRICS:
            if self.endpoint is not None:
                raise ValueError(f"native metric {self.metric!r} takes no endpoint")
        elif self.metric == "external":
            if self.endpoint is None:
                raise ValueError("external components require an endpoint")
        else:
            raise ValueError(f"unknown fitness metric {self.metric!r}")
        if not self.name:
            object.__setattr__(self, "name", self.metric if self.metric != "external"
                               else (self.endpoint.mock_spec or self.endpoint.address))


def native_component(metric: str) -> FitnessComponent:
    return FitnessComponent(metric=metric, needs_reference=True, needs_source=False)


def external_component(endpoint: ScorerEndpoint, name: str = "",
                       needs_reference: bool | None = None) -> FitnessComponent:
    if needs_reference is None:
        needs_reference = (mock_needs_reference(endpoint.mock_spec)
                           if endpoint.kind == "mock" else True)
    return FitnessComponent(metric="external", endpoint=endpoint,
                            needs_reference=needs_reference, needs_source=True,
                            name=name)


def mock_component(spec: str, name: str = "") -> FitnessComponent:
    """External component backed by one of the documented mock rules."""
    return external_component(make_mock_scorer(spec), name=name or spec)


@dataclass(frozen=True)
class FitnessSpec:
    """A component composition plus the scoring mode.

    Oracle mode needs at least one true reference; MBR mode needs at least one
    pseudo-reference. The pseudo-reference set stays fixed for the spec's
    lifetime (one GA run evaluates every generation against the same set).
    """

    components: tuple[FitnessComponent, ...]
    mode: str
    references: tuple[str, ...] = ()
    pseudo_references: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.components:
            raise ValueError("fitness spec needs at least one component")
        if self.mode == "oracle":
            if not self.references:
                raise ValueError("oracle mode requires at least one reference")
        elif self.mode == "mbr":
            if not self.pseudo_references:
                raise ValueError("mbr mode requires at least one pseudo-reference")
        else:
            raise ValueError(f"unknown fitness mode {self.mode!r}")

    @property
    def scoring_references(self) -> tuple[str, ...]:
        return self.references if self.mode == "oracle" else self.pseudo_references


@dataclass(frozen=True)
class FitnessValue:
    """Total fitness and the per-component scores it sums."""

    total: float
    per_component: tuple[float, ...]


def oracle_spec(components: Sequence[FitnessComponent], references: Sequence[str]) -> FitnessSpec:
    return FitnessSpec(tuple(components), "oracle", references=tuple(references))


def mbr_spec(components: Sequence[FitnessComponent],
             pseudo_references: Sequence[str]) -> FitnessSpec:
    return FitnessSpec(tuple(components), "mbr", pseudo_references=tuple(pseudo_references))


def spec_for_case(components: Sequence[FitnessComponent], mode: str,
                  case: SentenceCase) -> FitnessSpec:
    """Bind a component composition to one case.

    MBR pseudo-references are the case's deduplicated hypothesis texts, in
    first-seen order.
    """
    if mode == "oracle":
        return oracle_spec(components, case.refs)
    return mbr_spec(components, list(dict.fromkeys(case.hyp_texts)))


# ---------------------------------------------------------------------------
# Evaluation

def evaluate(spec: FitnessSpec, src: str, candidate: str) -> FitnessValue:
    """Fitness of one candidate text."""
    return evaluate_population(spec, src, [candidate])[0]


def evaluate_population(spec: FitnessSpec, src: str,
                        candidates: Sequence[str]) -> list[FitnessValue]:
    """Fitness of many candidates; duplicates are scored once and reused.

    External components submit all their score items as one batch per
    component.
    """
    if not candidates:
        raise ValueError("evaluate_population requires at least one candidate")
    unique = list(dict.fromkeys(candidates))
    columns = [_score_component(spec, comp, idx, src, unique)
               for idx, comp in enumerate(spec.components)]
    by_text: dict[str, FitnessValue] = {}
    for i, text in enumerate(unique):
        per = tuple(col[i] for col in columns)
        by_text[text] = FitnessValue(sum(per), per)
    return [by_text[c] for c in candidates]


def _score_component(spec: FitnessSpec, comp: FitnessComponent, comp_idx: int,
                     src: str, unique: list[str]) -> list[float]:
    refs = spec.scoring_references
    if comp.metric == "bleu":
        ref_tokens = [tokenize(r) for r in refs]
        return [sentence_bleu(tokenize(text), ref_tokens) for text in unique]
    if comp.metric == "chrf":
        return [sentence_chrf(text, refs) for text in unique]

    # external component: one batch for the whole population
    if not comp.needs_reference:
        items = [ScoreItem(id=f"c{comp_idx}.{i}", src=src, mt=text)
                 for i, text in enumerate(unique)]
        scored = dict(scorer_bridge.score_batch(comp.endpoint, items))
        return [scored[item.id] for item in items]

    if spec.mode == "oracle":
        items = [ScoreItem(id=f"c{comp_idx}.{i}", src=src, mt=text, refs=tuple(refs))
                 for i, text in enumerate(unique)]
        scored = dict(scorer_bridge.score_batch(comp.endpoint, items))
        return [scored[item.id] for item in items]

    # MBR: average the component over every pseudo-reference
    items = []
    for i, text in enumerate(unique):
        for j, pseudo in enumerate(refs):
            items.append(ScoreItem(id=f"c{comp_idx}.{i}.{j}", src=src, mt=text,
                                   refs=(pseudo,)))
    scored = dict(scorer_bridge.score_batch(comp.endpoint, items))
    out = []
    for i in range(len(unique)):
        per_ref = [scored[f"c{comp_idx}.{i}.{j}"] for j in range(len(refs))]
        out.append(sum(per_ref) / len(per_ref))
    return out


def mbr_rank(spec: FitnessSpec, src: str,
             candidates: Sequence[str]) -> list[tuple[int, FitnessValue]]:
    """Candidates ranked by MBR fitness, best first; ties keep the lower index."""
    if spec.mode != "mbr":
        raise ValueError("mbr_rank requires a spec in mbr mode")
    values = evaluate_population(spec, src, candidates)
    order = sorted(range(len(values)), key=lambda i: (-values[i].total, i))
    return [(i, values[i]) for i in order]


class CachingEvaluator:
    """Memoizes fitness values per candidate text for one (spec, src).

    Fitness depends only on the decoded text, so a GA run can reuse values
    across generations no matter how individuals are padded or duplicated.
    """

    def __init__(self, spec: FitnessSpec, src: str):
        self.spec = spec
        self.src = src
        self._memo: dict[str, FitnessValue] = {}

    def evaluate_population(self, candidates: Sequence[str]) -> list[FitnessValue]:
        missing = [c for c in dict.fromkeys(candidates) if c not in self._memo]
        if missing:
            for text, value in zip(missing,
                                   evaluate_population(self.spec, self.src, missing)):
                self._memo[text] = value
        return [self._memo[c] for c in candidates]
