import json

import pytest

from metric_ga.adversarial import AdversarialRecord, Margins, is_adversarial, mine
from metric_ga.cases import HypothesisRecord, SentenceCase
from metric_ga.fitness import evaluate, mock_component, oracle_spec
from metric_ga.ga_engine import GAConfig


def test_margins_defaults_and_validation():
    m = Margins()
    assert m.objective == 1e-3 and m.held_out == 1e-3
    with pytest.raises(ValueError):
        Margins(objective=-0.1)


def test_is_adversarial_reference_row():
    # first row of the published QE adversarial table
    assert is_adversarial(0.6425, 0.7850, 0.6069, -0.8532) is True


def test_is_adversarial_rejects_unmet_margins():
    assert is_adversarial(0.5, 0.5, 0.7, 0.7) is False
    assert is_adversarial(0.5, 0.6, 0.5, 0.6) is False  # held-out improved


def test_is_adversarial_monotone():
    margins = Margins()
    base = (0.4, 0.6, 0.5, 0.2)
    assert is_adversarial(*base, margins)
    assert is_adversarial(base[0], base[1] + 0.3, base[2], base[3], margins)
    assert is_adversarial(base[0], base[1], base[2], base[3] - 0.3, margins)


def _goodhart_case(case_id="g0"):
    return SentenceCase(
        case_id, "src",
        refs=["pay 500 euros to the account now"],
        hyps=[
            HypothesisRecord("pay 500 euross to the accounts now", -1.0, "beam"),
            HypothesisRecord("pay 500 euros to that account now", -2.0, "beam"),
            HypothesisRecord("send 500 euro to the account now", -3.0, "sample"),
        ],
    )


OBJECTIVE = [mock_component("token-overlap-ignoring-numbers")]
HELD_OUT = mock_component("neg-edit-distance")


def test_mine_emits_one_record_per_case_in_order():
    cases = [_goodhart_case("a"), _goodhart_case("b")]
    config = GAConfig(population_size=8, generations=2, seed=5)
    pool = ["pay", "euros", "to", "the", "account", "now", "7777"]
    records = mine(cases, OBJECTIVE, HELD_OUT, pool, config)
    assert [r.case_id for r in records] == ["a", "b"]


def test_mine_same_objective_and_held_out_never_adversarial():
    cases = [_goodhart_case()]
    config = GAConfig(population_size=8, generations=4, seed=5)
    pool = ["pay", "euros", "to", "the", "account", "now"]
    records = mine(cases, [HELD_OUT], HELD_OUT, pool, config)
    # O == H: both inequalities cannot hold at once
    for r in records:
        assert r.o_init == r.h_init and r.o_ga == r.h_ga
        assert not r.is_adversarial


def test_mine_gens_zero_keeps_objective_fixed():
    cases = [_goodhart_case()]
    config = GAConfig(population_size=6, generations=0, seed=5)
    pool = ["pay"]
    records = mine(cases, OBJECTIVE, HELD_OUT, pool, config)
    record = records[0]
    assert record.o_init == record.o_ga
    assert not record.is_adversarial
    # best_init chosen by the objective, not log-prob: hyp 2 has the best
    # non-digit overlap ("that" is its only error)
    assert record.best_init == "pay 500 euros to that account now"


def test_mine_records_reproduce_scores_exactly():
    cases = [_goodhart_case()]
    config = GAConfig(population_size=10, generations=12, seed=31)
    pool = ["pay", "euros", "to", "the", "account", "now", "8912", "40404"]
    record = mine(cases, OBJECTIVE, HELD_OUT, pool, config)[0]
    case = cases[0]
    obj = oracle_spec(OBJECTIVE, case.refs)
    held = oracle_spec([HELD_OUT], case.refs)
    assert evaluate(obj, case.src, record.best_init).total == record.o_init
    assert evaluate(obj, case.src, record.best_ga).total == record.o_ga
    assert evaluate(held, case.src, record.best_init).total == record.h_init
    assert evaluate(held, case.src, record.best_ga).total == record.h_ga
    assert record.is_adversarial == is_adversarial(
        record.o_init, record.o_ga, record.h_init, record.h_ga)


def test_mine_requires_references():
    case = SentenceCase("x", "src", refs=[], hyps=[HypothesisRecord("a")])
    with pytest.raises(ValueError):
        mine([case], OBJECTIVE, HELD_OUT, ["a"], GAConfig(population_size=4, generations=1))


def test_mine_jobs_do_not_change_results():
    cases = [_goodhart_case(f"case-{i}") for i in range(4)]
    config = GAConfig(population_size=8, generations=6, seed=17)
    pool = ["pay", "euros", "to", "the", "account", "now", "31415"]
    sequential = mine(cases, OBJECTIVE, HELD_OUT, pool, config, jobs=1)
    parallel = mine(cases, OBJECTIVE, HELD_OUT, pool, config, jobs=4)
    assert sequential == parallel


def test_record_json_round_trip():
    record = AdversarialRecord("id1", "src", "ref", "init text", "ga text",
                               0.1, 0.9, 0.8, -0.2, True)
    obj = json.loads(record.to_json())
    assert list(obj) == ["case_id", "src", "ref", "best_init", "best_ga",
                         "o_init", "o_ga", "h_init", "h_ga", "is_adversarial"]
    assert obj["is_adversarial"] is True
    assert obj["o_ga"] == 0.9
