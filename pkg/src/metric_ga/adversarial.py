"""Mining adversarial examples: candidates that fool the objective metric.

Per case, the initial hypotheses are ranked by the objective (oracle mode,
scored against the true references), the GA then optimizes the case towards
the same objective, and both the initial best and the GA best are scored with
a held-out metric. A result is adversarial when the objective improved by
more than a margin while the held-out score dropped by more than another
margin: Goodhart's law made measurable.

Records serialize to JSON lines with exactly the field names of
:class:`AdversarialRecord`.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Sequence

from .cases import SentenceCase
from .fitness import FitnessComponent, evaluate, evaluate_population, oracle_spec
from .ga_engine import GAConfig, derive_case_seed, run


@dataclass(frozen=True)
class Margins:
    """Minimum objective gain and held-out loss for the adversarial predicate."""

    objective: float = 1e-3
    held_out: float = 1e-3

    def __post_init__(self):
        if self.objective < 0 or self.held_out < 0:
            raise ValueError("margins must be >= 0")


@dataclass
class AdversarialRecord:
    case_id: str
    src: str
    ref: str
    best_init: str
    best_ga: str
    o_init: float
    o_ga: float
    h_init: float
    h_ga: float
    is_adversarial: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def is_adversarial(o_init: float, o_ga: float, h_init: float, h_ga: float,
                   margins: Margins = Margins()) -> bool:
    """objective improved beyond its margin AND held-out dropped beyond its margin."""
    return o_init + margins.objective < o_ga and h_init > h_ga + margins.held_out


def mine(cases: Sequence[SentenceCase], objective: Sequence[FitnessComponent],
         held_out: FitnessComponent, mutation_pool: Sequence[str], config: GAConfig,
         margins: Margins = Margins(), jobs: int = 1) -> list[AdversarialRecord]:
    """One record per case, in input order; filtering is the caller's concern.

    Cases are independent; each derives its own seed from the config seed and
    the case id, so results do not depend on ``jobs``.
    """
    for case in cases:
        if not case.refs:
            raise ValueError(f"case {case.id!r} has no reference; mining needs oracles")

    def mine_case(case: SentenceCase) -> AdversarialRecord:
        obj_spec = oracle_spec(objective, case.refs)
        held_spec = oracle_spec([held_out], case.refs)

        values = evaluate_population(obj_spec, case.src, case.hyp_texts)
        init_idx = max(range(len(values)), key=lambda i: (values[i].total, -i))
        best_init = case.hyps[init_idx].text
        o_init = values[init_idx].total
        h_init = evaluate(held_spec, case.src, best_init).total

        case_config = replace(config, seed=derive_case_seed(config.seed, case.id))
        result = run(case, obj_spec, mutation_pool, case_config)
        o_ga = result.best_fitness.total
        h_ga = evaluate(held_spec, case.src, result.best_text).total

        return AdversarialRecord(
            case_id=case.id, src=case.src, ref=case.refs[0],
            best_init=best_init, best_ga=result.best_text,
            o_init=o_init, o_ga=o_ga, h_init=h_init, h_ga=h_ga,
            is_adversarial=is_adversarial(o_init, o_ga, h_init, h_ga, margins),
        )

    if jobs <= 1:
        return [mine_case(case) for case in cases]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(mine_case, cases))
