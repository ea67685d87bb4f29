"""The genetic algorithm over token chromosomes with empty-gene placeholders.

A chromosome is a fixed-length list of strings where "" marks an empty slot.
Candidates are encoded as [t1, "", t2, "", ...] and right-padded with empty
genes, so mutation can insert (empty -> token) or delete (token -> empty)
without changing the chromosome length, and crossover stays a plain cut at a
shared index. Empty genes never influence fitness: individuals are scored by
their decoded, detokenized text.

Selection is per-slot tournament (each slot's individual plus randomly drawn
rivals), parents are paired consecutively, each pair is crossed over with a
configured probability, and every child is mutated gene by gene. There is no
elitism; the run returns the best individual ever observed.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .cases import SentenceCase
from .fitness import CachingEvaluator, FitnessSpec, FitnessValue
from .textcore import detokenize, tokenize

EMPTY = ""

Chromosome = list  # list[str]; "" is the empty placeholder


@dataclass
class GAConfig:
    """Run parameters. Defaults follow the reference setup.

    ``replace_rate`` (token -> other token) defaults to 1/L for chromosome
    length L; ``indel_rate`` (insertion or deletion) defaults to a tenth of
    the replace rate.
    """

    population_size: int = 2000
    generations: int = 300
    crossover_rate: float = 0.1
    length_factor: float = 1.1
    tournament_size: int = 3
    seed: int = 42
    replace_rate: float | None = None
    indel_rate: float | None = None

    def validate(self) -> None:
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be an even integer >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if self.length_factor < 1.0:
            raise ValueError("length_factor must be >= 1")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")


@dataclass
class Individual:
    chromosome: Chromosome
    fitness: FitnessValue | None = None
    born_in_generation: int = 0
    is_initial: bool = False


@dataclass
class GAResult:
    """Best-ever candidate of a run plus the per-generation fitness trace."""

    best_text: str
    best_fitness: FitnessValue
    is_novel: bool
    trace: list[tuple[float, float]] = field(default_factory=list)


def derive_case_seed(seed: int, case_id: str) -> int:
    """Stable per-case seed: the run seed XOR a hash of the case id."""
    digest = hashlib.sha256(case_id.encode("utf-8")).digest()
    return (seed ^ int.from_bytes(digest[:8], "big")) & 0xFFFFFFFFFFFFFFFF


def chromosome_length(hypotheses: Sequence[Sequence[str]], k: float) -> int:
    """Shared chromosome length for a hypothesis set.

    ceil(2 * T_max * k) rounded up to the next even integer, where T_max is
    the largest hypothesis token count; floored at 2 so even a degenerate set
    leaves room for insertions.
    """
    if not hypotheses:
        raise ValueError("chromosome_length requires at least one hypothesis")
    if k < 1.0:
        raise ValueError("length factor k must be >= 1")
    t_max = max(len(h) for h in hypotheses)
    length = math.ceil(2 * t_max * k)
    if length % 2:
        length += 1
    return max(length, 2)


def encode(tokens: Sequence[str], length: int) -> Chromosome:
    """[t1, "", t2, "", ...] right-padded with empty genes to ``length``."""
    if 2 * len(tokens) > length:
        raise ValueError(f"{len(tokens)} tokens do not fit a chromosome of length {length}")
    genes: Chromosome = []
    for tok in tokens:
        genes.append(tok)
        genes.append(EMPTY)
    genes.extend([EMPTY] * (length - len(genes)))
    return genes


def decode(chromosome: Sequence[str]) -> list[str]:
    """The non-empty genes, in positional order."""
    return [g for g in chromosome if g]


def tournament_select(fitness_totals: Sequence[float], rng: random.Random,
                      focus: int, size: int = 3) -> int:
    """Index of the fittest among ``focus`` plus size-1 random rivals.

    Rivals are drawn uniformly from the other slots, independently of each
    other (collisions allowed). Ties go to the lowest index.
    """
    n = len(fitness_totals)
    best = focus
    if n <= 1:
        return best
    for _ in range(size - 1):
        j = rng.randrange(n - 1)
        if j >= focus:
            j += 1
        if (fitness_totals[j] > fitness_totals[best]
                or (fitness_totals[j] == fitness_totals[best] and j < best)):
            best = j
    return best


def crossover(p1: Chromosome, p2: Chromosome, i: int) -> tuple[Chromosome, Chromosome]:
    """Single-point crossover: c1 = p1[:i] + p2[i:], c2 = p2[:i] + p1[i:]."""
    if len(p1) != len(p2):
        raise ValueError("crossover requires parents of equal length")
    if not 1 <= i <= len(p1) - 1:
        raise ValueError(f"crossover index {i} out of range [1, {len(p1) - 1}]")
    return p1[:i] + p2[i:], p2[:i] + p1[i:]


def mutate(chromosome: Sequence[str], mutation_set: Sequence[str], rng: random.Random,
           replace_rate: float, indel_rate: float) -> Chromosome:
    """Mutate each gene with one uniform draw.

    Non-empty gene: u < replace_rate replaces it with a random pool token;
    replace_rate <= u < replace_rate + indel_rate deletes it. Empty gene:
    u < indel_rate inserts a random pool token. Length is preserved.
    """
    if not mutation_set:
        raise ValueError("mutation set must not be empty")
    out = list(chromosome)
    n_pool = len(mutation_set)
    for idx, gene in enumerate(out):
        u = rng.random()
        if gene:
            if u < replace_rate:
                out[idx] = mutation_set[rng.randrange(n_pool)]
            elif u < replace_rate + indel_rate:
                out[idx] = EMPTY
        elif u < indel_rate:
            out[idx] = mutation_set[rng.randrange(n_pool)]
    return out


def run(case: SentenceCase, spec: FitnessSpec, mutation_set: Sequence[str],
        config: GAConfig,
        observer: Callable[[int, list[Individual]], None] | None = None,
        ) -> GAResult:
    """Run the GA on one case and return the best-ever candidate.

    The initial population replicates the case's hypotheses round-robin up to
    the population size. Each generation evaluates everyone, tournament-
    selects one parent per slot, crosses consecutive pairs with probability
    ``crossover_rate`` at a uniform index, and mutates every child. With zero
    generations this degenerates to reranking the initial hypotheses.

    ``observer``, when given, receives the evaluated Individuals of each
    generation (generation 0 is the initial population); it exists for
    fitness-trace logging and invariant checks and costs nothing when absent.
    """
    config.validate()
    if not case.hyps:
        raise ValueError(f"case {case.id!r} has no hypotheses")
    pool = list(mutation_set)
    if not pool:
        raise ValueError("mutation set must not be empty")

    hyp_tokens = [tokenize(h.text) for h in case.hyps]
    length = chromosome_length(hyp_tokens, config.length_factor)
    seeds = [encode(toks, length) for toks in hyp_tokens]
    pop_size = config.population_size
    population = [list(seeds[i % len(seeds)]) for i in range(pop_size)]

    rng = random.Random(config.seed)
    replace_rate = config.replace_rate if config.replace_rate is not None else 1.0 / length
    indel_rate = config.indel_rate if config.indel_rate is not None else replace_rate / 10.0

    evaluator = CachingEvaluator(spec, case.src)
    initial_texts = {detokenize(toks) for toks in hyp_tokens}

    def evaluate(pop: list[Chromosome]) -> tuple[list[str], list[FitnessValue]]:
        texts = [detokenize(decode(ch)) for ch in pop]
        return texts, evaluator.evaluate_population(texts)

    def notify(generation: int, pop, vals) -> None:
        if observer is not None:
            observer(generation,
                     [Individual(chromosome=ch, fitness=v,
                                 born_in_generation=generation,
                                 is_initial=generation == 0)
                      for ch, v in zip(pop, vals)])

    texts, values = evaluate(population)
    notify(0, population, values)
    best_idx = max(range(pop_size), key=lambda i: values[i].total)
    best_text, best_value = texts[best_idx], values[best_idx]

    trace: list[tuple[float, float]] = []
    for generation in range(1, config.generations + 1):
        totals = [v.total for v in values]
        parents = [population[tournament_select(totals, rng, focus=slot,
                                                size=config.tournament_size)]
                   for slot in range(pop_size)]
        children: list[Chromosome] = []
        for a in range(0, pop_size, 2):
            p1, p2 = parents[a], parents[a + 1]
            if rng.random() < config.crossover_rate:
                cut = rng.randint(1, length - 1)
                c1, c2 = crossover(p1, p2, cut)
            else:
                c1, c2 = p1, p2
            children.append(c1)
            children.append(c2)
        population = [mutate(child, pool, rng, replace_rate, indel_rate)
                      for child in children]
        texts, values = evaluate(population)
        notify(generation, population, values)
        gen_totals = [v.total for v in values]
        gen_best = max(range(pop_size), key=lambda i: gen_totals[i])
        trace.append((gen_totals[gen_best], sum(gen_totals) / pop_size))
        if gen_totals[gen_best] > best_value.total:
            best_text, best_value = texts[gen_best], values[gen_best]

    return GAResult(best_text=best_text, best_fitness=best_value,
                    is_novel=best_text not in initial_texts, trace=trace)
