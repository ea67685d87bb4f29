import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metric_ga.cases import HypothesisRecord, SentenceCase
from metric_ga.fitness import mock_component, native_component, spec_for_case
from metric_ga.ga_engine import (EMPTY, GAConfig, GAResult, chromosome_length,
                                 crossover, decode, derive_case_seed, encode,
                                 mutate, run, tournament_select)

PAPER_SENT1 = "Genetic algorithm can be used to produce novel solutions ."
PAPER_SENT1_GENES = [
    "Genetic", "", "algorithm", "", "can", "", "be", "", "used", "",
    "to", "", "produce", "", "novel", "", "solutions", "", ".", "", "", "",
]
PAPER_SENT2_GENES = [
    "Genetic", "", "algorithm", "", "creates", "", "new", "",
    "solutions", "", ".", "", "", "", "", "", "", "", "", "", "", "",
]

token_st = st.text(alphabet="abcdefg.", min_size=1, max_size=5)
tokens_st = st.lists(token_st, max_size=10)


# ---------------------------------------------------------------------------
# Encoding

def test_chromosome_length_formula():
    assert chromosome_length([["x"] * 10], 1.1) == 22
    assert chromosome_length([["x"]], 1.0) == 2
    assert chromosome_length([["x"] * 3], 1.2) == 8  # ceil(7.2) = 8, already even
    with pytest.raises(ValueError):
        chromosome_length([], 1.1)
    with pytest.raises(ValueError):
        chromosome_length([["x"]], 0.9)


def test_encode_matches_reference_gene_layout():
    tokens = PAPER_SENT1.split()
    assert chromosome_length([tokens], 1.1) == 22
    assert encode(tokens, 22) == PAPER_SENT1_GENES


def test_encode_simple_and_overflow():
    assert encode(["a"], 4) == ["a", "", "", ""]
    with pytest.raises(ValueError):
        encode(["a", "b", "c"], 4)


def test_decode_drops_empty_genes():
    assert decode(["", "", "", ""]) == []
    assert decode(["", "a", "", "b"]) == ["a", "b"]
    assert decode(PAPER_SENT2_GENES) == ["Genetic", "algorithm", "creates",
                                         "new", "solutions", "."]


@given(tokens_st, st.integers(0, 6))
def test_decode_encode_identity(tokens, pad_pairs):
    length = 2 * len(tokens) + 2 * pad_pairs
    if length == 0:
        length = 2
    assert decode(encode(tokens, length)) == tokens


# ---------------------------------------------------------------------------
# Selection

class ScriptedRng:
    """random.Random stand-in whose randrange draws are predetermined."""

    def __init__(self, draws):
        self.draws = list(draws)

    def randrange(self, _n):
        return self.draws.pop(0)


def test_tournament_picks_argmax_of_members():
    totals = [0.9, 0.1, 0.5]
    # focus 1, rival draws 0 and 1 map to indices 0 and 2: members {0,1,2}
    assert tournament_select(totals, ScriptedRng([0, 1]), focus=1, size=3) == 0
    # members {1,2,2}: best among them is 2
    assert tournament_select(totals, ScriptedRng([1, 1]), focus=1, size=3) == 2


def test_tournament_tie_breaks_to_lowest_index():
    totals = [1.0, 1.0, 1.0]
    # members {2,0,1}: all equal, lowest index wins
    assert tournament_select(totals, ScriptedRng([0, 1]), focus=2, size=3) == 0
    # with all totals equal the winner is always the lowest member index
    rng = random.Random(2)
    for _ in range(50):
        winner = tournament_select([1.0] * 6, rng, focus=5, size=3)
        assert winner <= 5


def test_tournament_selection_is_reproducible():
    totals = [random.Random(5).random() for _ in range(6)]
    seq_a = [tournament_select(totals, random.Random(99), focus=i % 6) for i in range(20)]
    seq_b = [tournament_select(totals, random.Random(99), focus=i % 6) for i in range(20)]
    assert seq_a == seq_b


def test_tournament_singleton_population():
    assert tournament_select([1.0], random.Random(0), focus=0) == 0


# ---------------------------------------------------------------------------
# Crossover

def test_crossover_formula():
    c1, c2 = crossover(list("ABCD"), list("wxyz"), 2)
    assert c1 == list("AByz")
    assert c2 == list("wxCD")


def test_crossover_identical_parents():
    p = ["a", "", "b", ""]
    for i in range(1, 4):
        c1, c2 = crossover(p, p, i)
        assert c1 == p and c2 == p


def test_crossover_validation():
    with pytest.raises(ValueError):
        crossover(["a"], ["a", "b"], 1)
    with pytest.raises(ValueError):
        crossover(["a", "b"], ["c", "d"], 0)
    with pytest.raises(ValueError):
        crossover(["a", "b"], ["c", "d"], 2)


@given(st.lists(token_st | st.just(""), min_size=2, max_size=12),
       st.lists(token_st | st.just(""), min_size=2, max_size=12),
       st.data())
@settings(max_examples=200)
def test_crossover_positional_gene_conservation(p1, p2, data):
    length = min(len(p1), len(p2))
    p1, p2 = p1[:length], p2[:length]
    i = data.draw(st.integers(1, length - 1))
    c1, c2 = crossover(p1, p2, i)
    assert len(c1) == len(c2) == length
    for j in range(length):
        assert {c1[j], c2[j]} == {p1[j], p2[j]}


# ---------------------------------------------------------------------------
# Mutation

def test_mutation_zero_rates_is_identity():
    rng = random.Random(3)
    chromosome = ["a", "", "b", "", "", ""]
    assert mutate(chromosome, ["x", "y"], rng, 0.0, 0.0) == chromosome


def test_mutation_insertion_into_empty_chromosome():
    rng = random.Random(4)
    out = mutate([""] * 8, ["x"], rng, 0.0, 1.0)
    assert decode(out) == ["x"] * 8  # every empty slot fires at rate 1


def test_mutation_requires_pool():
    with pytest.raises(ValueError):
        mutate(["a"], [], random.Random(0), 0.5, 0.05)


def test_mutation_reproducible():
    chromosome = ["tok", "", "other", ""] * 5
    pool = ["p1", "p2", "p3"]
    a = mutate(chromosome, pool, random.Random(11), 0.3, 0.1)
    b = mutate(chromosome, pool, random.Random(11), 0.3, 0.1)
    assert a == b


@given(st.lists(token_st | st.just(""), min_size=1, max_size=20), st.integers(0, 2**32))
@settings(max_examples=200)
def test_mutation_preserves_length_and_pool_closure(chromosome, seed):
    pool = ["pool1", "pool2"]
    out = mutate(chromosome, pool, random.Random(seed), 0.4, 0.2)
    assert len(out) == len(chromosome)
    for before, after in zip(chromosome, out):
        assert after == before or after == EMPTY or after in pool


# ---------------------------------------------------------------------------
# Full runs

def _case(texts, refs=("the cat sat on the mat .",), case_id="c"):
    return SentenceCase(case_id, "src sentence", list(refs),
                        [HypothesisRecord(t, logprob=-float(i + 1), origin="beam")
                         for i, t in enumerate(texts)])


def _chrf_spec(case):
    return spec_for_case([native_component("chrf")], "oracle", case)


def test_run_gens_zero_is_reranking():
    case = _case(["the cat sat on a mat .", "the cat sat on the mat .", "a dog"])
    config = GAConfig(population_size=6, generations=0, seed=1)
    result = run(case, _chrf_spec(case), ["the"], config)
    assert result.best_text == "the cat sat on the mat ."
    assert result.best_fitness.total == 100.0
    assert result.is_novel is False
    assert result.trace == []


def test_run_trace_length_and_types():
    case = _case(["the cat", "a cat sat"])
    config = GAConfig(population_size=4, generations=7, seed=5)
    result = run(case, _chrf_spec(case), ["the", "cat", "sat"], config)
    assert len(result.trace) == 7
    assert all(isinstance(b, float) and isinstance(m, float) for b, m in result.trace)
    assert isinstance(result, GAResult)


def test_run_best_ever_dominates_trace():
    case = _case(["the cat", "a dog ran", "sat ."])
    config = GAConfig(population_size=10, generations=25, seed=9)
    result = run(case, _chrf_spec(case), ["the", "cat", "sat", "mat", "junk"], config)
    assert result.best_fitness.total >= max(best for best, _ in result.trace)
    running_max = float("-inf")
    for best, _ in result.trace:
        running_max = max(running_max, best)
        assert result.best_fitness.total >= running_max


def test_run_is_deterministic_given_seed():
    case = _case(["the cat sat", "a cat on the mat", "dog ."])
    pool = ["the", "cat", "sat", "on", "mat", ".", "dog", "a"]
    config = GAConfig(population_size=8, generations=12, seed=77)
    r1 = run(case, _chrf_spec(case), pool, config)
    r2 = run(case, _chrf_spec(case), pool, config)
    assert r1 == r2


def test_run_population_and_length_constant():
    case = _case(["the cat sat", "a dog", "on the mat"])
    config = GAConfig(population_size=6, generations=10, seed=3)
    seen = []

    def observer(gen, individuals):
        assert all(ind.fitness is not None for ind in individuals)
        assert all(ind.born_in_generation == gen for ind in individuals)
        assert all(ind.is_initial == (gen == 0) for ind in individuals)
        seen.append((gen, len(individuals), {len(ind.chromosome) for ind in individuals}))

    run(case, _chrf_spec(case), ["the", "a"], config, observer=observer)
    assert [g for g, *_ in seen] == list(range(11))
    lengths = {next(iter(s)) for _, _, s in seen}
    assert len(lengths) == 1  # one shared chromosome length everywhere
    assert all(p == 6 for _, p, _ in seen)


def test_run_selection_only_closure():
    # crossover off, mutation rates zero: only initial texts can ever appear
    case = _case(["the cat sat", "a dog ran", "on the mat ."])
    initial = {"the cat sat", "a dog ran", "on the mat ."}
    config = GAConfig(population_size=6, generations=8, seed=13,
                      crossover_rate=0.0, replace_rate=0.0, indel_rate=0.0)
    texts_seen = set()

    def observer(gen, individuals):
        texts_seen.update(" ".join(decode(ind.chromosome)) for ind in individuals)

    result = run(case, _chrf_spec(case), ["x"], config, observer=observer)
    assert texts_seen <= initial
    assert result.is_novel is False


def test_run_novelty_flag():
    # GA must fix the single wrong token to reach the reference exactly
    case = _case(["the cat sat on the mat junk"], refs=("the cat sat on the mat .",))
    config = GAConfig(population_size=20, generations=60, seed=21)
    pool = ["the", "cat", "sat", "on", "mat", "."]
    result = run(case, _chrf_spec(case), pool, config)
    if result.best_text == "the cat sat on the mat .":
        assert result.is_novel is True


def test_run_validates_config_and_pool():
    case = _case(["the cat"])
    with pytest.raises(ValueError):
        run(case, _chrf_spec(case), [], GAConfig(population_size=4, generations=1))
    with pytest.raises(ValueError):
        run(case, _chrf_spec(case), ["x"], GAConfig(population_size=5, generations=1))
    with pytest.raises(ValueError):
        run(case, _chrf_spec(case), ["x"], GAConfig(population_size=4, generations=-1))
    with pytest.raises(ValueError):
        run(case, _chrf_spec(case), ["x"],
            GAConfig(population_size=4, generations=1, crossover_rate=1.5))


def test_equal_decode_implies_equal_fitness():
    case = _case(["the cat sat"])
    spec = _chrf_spec(case)
    from metric_ga.fitness import evaluate
    from metric_ga.textcore import detokenize
    a = encode(["the", "cat", "sat"], 10)
    b = ["", "the", "", "", "cat", "", "", "", "sat", ""]
    assert decode(a) == decode(b)
    assert evaluate(spec, case.src, detokenize(decode(a))) == \
        evaluate(spec, case.src, detokenize(decode(b)))


def test_mock_fitness_run_smoke():
    case = _case(["pay 5 euro now", "pay 5 euros now"], refs=("pay 5 euros now",))
    spec = spec_for_case([mock_component("token-overlap-ignoring-numbers")], "oracle", case)
    config = GAConfig(population_size=4, generations=3, seed=2)
    result = run(case, spec, ["pay", "euros", "now", "7"], config)
    assert result.best_fitness.total == 1.0


def test_derive_case_seed_is_stable_and_spread():
    a = derive_case_seed(42, "case-1")
    b = derive_case_seed(42, "case-1")
    c = derive_case_seed(42, "case-2")
    d = derive_case_seed(43, "case-1")
    assert a == b
    assert len({a, c, d}) == 3
    assert 0 <= a < 2**64
