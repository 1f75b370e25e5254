"""Generational search loop and the exhaustive oracle.

Every generation carries the top slice of the population forward unchanged
(scores and all), breeds the remaining slots from those survivors, and
evaluates only chromosomes that have never been tested before. Runs are a
pure function of (config, split, train config): all randomness flows from
the master seed, and evaluation parallelism cannot change the result
because offspring are produced sequentially and merged in production order.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import SplitDataset
from .errors import (
    CapExceededError,
    ConfigError,
    EmptyChromosomeError,
    NoveltyExhausted,
    TooFewSurvivorsError,
)
from .fitness import (
    Graveyard,
    Score,
    evaluate_batch,
    ranking_key,
)
from .genome import Chromosome, canonical_key, mutate, uniform_crossover
from .mlp import TrainConfig

# Exact fallback sampling enumerates the remaining space below this size;
# larger spaces use rejection sampling.
ENUMERATION_LIMIT = 12

EXHAUSTIVE_CAP_DEFAULT = 14

Member = tuple[Chromosome, Score]


def subset_count(n_vars: int) -> int:
    """Number of distinct nonempty variable subsets."""
    return (1 << n_vars) - 1


@dataclass(frozen=True)
class GaConfig:
    n_vars: int
    population_size: int = 50
    survival_fraction: float = 0.20
    mutation_rate: float = 0.1
    p_one_parent: float = 0.5
    generations: int = 25
    master_seed: int = 0
    offspring_retry_limit: int = 200

    def __post_init__(self):
        if self.n_vars < 1:
            raise ConfigError(f"n_vars must be >= 1, got {self.n_vars}")
        if self.population_size < 4:
            raise ConfigError(
                f"population_size must be >= 4, got {self.population_size}"
            )
        if not 0 < self.survival_fraction < 1:
            raise ConfigError(
                f"survival_fraction must be in (0,1), got {self.survival_fraction}"
            )
        if self.survivor_count < 2:
            raise ConfigError(
                "survival_fraction and population_size must keep at least 2 survivors"
            )
        if not 0 <= self.mutation_rate <= 1:
            raise ConfigError(f"mutation_rate must be in [0,1], got {self.mutation_rate}")
        if not 0 <= self.p_one_parent <= 1:
            raise ConfigError(f"p_one_parent must be in [0,1], got {self.p_one_parent}")
        if self.generations < 1:
            raise ConfigError(f"generations must be >= 1, got {self.generations}")
        if self.offspring_retry_limit < 1:
            raise ConfigError(
                f"offspring_retry_limit must be >= 1, got {self.offspring_retry_limit}"
            )
        if subset_count(self.n_vars) < self.population_size:
            raise ConfigError(
                f"{self.n_vars} variables admit only {subset_count(self.n_vars)} "
                f"distinct chromosomes, fewer than population_size "
                f"{self.population_size}"
            )

    @property
    def survivor_count(self) -> int:
        # ceil keeps the survivor slice nonempty for small populations.
        return math.ceil(self.survival_fraction * self.population_size)


@dataclass
class GenerationReport:
    generation: int
    best_genes: Chromosome
    best_cv_sse: float
    mean_cv_sse: float
    new_evaluations: int
    graveyard_size: int
    exhausted: bool = False
    elapsed: float = 0.0

    def to_record(self) -> dict:
        # elapsed is wall-clock noise and is deliberately left out so that
        # equal-seed runs serialize byte-identically.
        return {
            "generation": self.generation,
            "best_genes": self.best_genes.one_based(),
            "best_cv_sse": self.best_cv_sse,
            "mean_cv_sse": self.mean_cv_sse,
            "new_evaluations": self.new_evaluations,
            "graveyard_size": self.graveyard_size,
            "exhausted": self.exhausted,
        }


@dataclass
class RunResult:
    best: Chromosome
    best_score: Score
    reports: list[GenerationReport]
    graveyard: Graveyard
    exhausted: bool


@dataclass
class RunState:
    cfg: GaConfig
    split: SplitDataset
    train_cfg: TrainConfig
    rng: np.random.Generator
    graveyard: Graveyard
    population: list[Member]
    generation: int = 0
    mapper: object = map


def init_population(
    cfg: GaConfig, rng: np.random.Generator | None = None
) -> list[Chromosome]:
    """Seed the search with singletons, the full set, and spread fillers.

    Every single-variable subset and the all-variables subset are always
    present; remaining slots get random chromosomes whose gene counts are
    drawn evenly from {2, ..., n_vars-1} so initial diversity covers the
    whole cardinality range. When the population is too small for all
    singletons, they are taken in ascending index order and the final slot
    still goes to the full set.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.master_seed)
    n, size = cfg.n_vars, cfg.population_size
    full = Chromosome(range(n))
    if size < n + 1:
        warnings.warn(
            f"population_size {size} cannot hold all {n} singletons; truncating"
        )
        members = [Chromosome([i]) for i in range(size - 1)] + [full]
        return members

    members = [Chromosome([i]) for i in range(n)] + [full]
    used = {canonical_key(c) for c in members}
    cardinalities = [c for c in range(2, n)]
    while len(members) < size:
        # Bounded only by the space itself: distinctness is guaranteed
        # because the config admits at least population_size subsets.
        if cardinalities:
            k = int(rng.choice(cardinalities))
            genes = rng.choice(n, size=k, replace=False)
            candidate = Chromosome(int(g) for g in genes)
        else:
            candidate = _random_chromosome(n, rng)
        key = canonical_key(candidate)
        if key in used:
            continue
        used.add(key)
        members.append(candidate)
    return members


def _random_chromosome(n_vars: int, rng: np.random.Generator) -> Chromosome:
    """Uniform draw over all nonempty subsets."""
    while True:
        bits = rng.random(n_vars) < 0.5
        if bits.any():
            return Chromosome(int(i) for i in np.flatnonzero(bits))


def select_parents(
    survivors: list[Member], rng: np.random.Generator
) -> tuple[Chromosome, Chromosome]:
    """Two distinct survivors, uniform over unordered pairs."""
    if len(survivors) < 2:
        raise TooFewSurvivorsError(
            f"need at least 2 survivors, have {len(survivors)}"
        )
    i, j = rng.choice(len(survivors), size=2, replace=False)
    return survivors[int(i)][0], survivors[int(j)][0]


def produce_offspring(
    survivors: list[Member],
    graveyard: Graveyard,
    pending: set,
    cfg: GaConfig,
    rng: np.random.Generator,
) -> Chromosome:
    """Breed one chromosome that has never been tested and is not pending.

    Crossover/mutation attempts that duplicate a buried or already-produced
    chromosome are discarded. After offspring_retry_limit failures the
    breeder falls back to a uniformly random untested chromosome to restore
    diversity; if even that cannot be found the space is spent and
    NoveltyExhausted is raised.
    """
    for _ in range(cfg.offspring_retry_limit):
        a, b = select_parents(survivors, rng)
        try:
            child = uniform_crossover(a, b, cfg.p_one_parent, rng)
        except EmptyChromosomeError:
            continue
        child = mutate(child, cfg.mutation_rate, cfg.n_vars, rng)
        key = canonical_key(child)
        if key in pending or key in graveyard:
            continue
        pending.add(key)
        return child

    child = _random_novel(graveyard, pending, cfg, rng)
    pending.add(canonical_key(child))
    return child


def _random_novel(
    graveyard: Graveyard, pending: set, cfg: GaConfig, rng: np.random.Generator
) -> Chromosome:
    n = cfg.n_vars
    if n <= ENUMERATION_LIMIT:
        taken = set(pending)
        taken.update(key for key, _ in graveyard.entries())
        free = []
        for mask in range(1, 1 << n):
            genes = tuple(i for i in range(n) if mask >> i & 1)
            if genes not in taken:
                free.append(genes)
        if not free:
            raise NoveltyExhausted(f"all {subset_count(n)} chromosomes tested")
        pick = free[int(rng.integers(len(free)))]
        return Chromosome(pick)
    for _ in range(cfg.offspring_retry_limit):
        candidate = _random_chromosome(n, rng)
        key = canonical_key(candidate)
        if key not in pending and key not in graveyard:
            return candidate
    raise NoveltyExhausted(
        f"no untested chromosome found in {cfg.offspring_retry_limit} random draws"
    )


def _sort_members(members: list[Member]) -> list[Member]:
    return sorted(members, key=lambda m: ranking_key(canonical_key(m[0]), m[1]))


def _make_report(
    state: RunState, new_evaluations: int, exhausted: bool, started: float
) -> GenerationReport:
    best_c, best_s = state.population[0]
    mean = float(np.mean([s.cv_sse for _, s in state.population]))
    return GenerationReport(
        generation=state.generation,
        best_genes=best_c,
        best_cv_sse=best_s.cv_sse,
        mean_cv_sse=mean,
        new_evaluations=new_evaluations,
        graveyard_size=len(state.graveyard),
        exhausted=exhausted,
        elapsed=time.perf_counter() - started,
    )


def step_generation(state: RunState) -> tuple[RunState, GenerationReport]:
    """Advance one generation: carry the elite, breed and score the rest.

    Survivors keep their stored scores untouched (retesting would change
    nothing). If novelty runs out mid-breeding the generation closes with
    the offspring produced so far and is flagged exhausted.
    """
    started = time.perf_counter()
    cfg = state.cfg
    state.generation += 1
    survivors = state.population[: cfg.survivor_count]
    wanted = cfg.population_size - len(survivors)

    pending: set = set()
    offspring: list[Chromosome] = []
    exhausted = False
    for _ in range(wanted):
        try:
            offspring.append(
                produce_offspring(survivors, state.graveyard, pending, cfg, state.rng)
            )
        except NoveltyExhausted:
            exhausted = True
            break

    scores = evaluate_batch(
        offspring,
        state.graveyard,
        state.split,
        state.train_cfg,
        cfg.master_seed,
        generation=state.generation,
        mapper=state.mapper,
    )
    state.population = _sort_members(survivors + list(zip(offspring, scores)))
    report = _make_report(state, len(offspring), exhausted, started)
    return state, report


def run(
    cfg: GaConfig,
    split: SplitDataset,
    train_cfg: TrainConfig,
    threads: int = 1,
) -> RunResult:
    """Full search: initialize, evaluate, then loop generations.

    Returns the global best under the fitness total order, the per
    generation reports, and the graveyard. Deterministic for a given
    (cfg, split, train_cfg) at any thread count.
    """
    if split.n_vars != cfg.n_vars:
        raise ConfigError(
            f"config n_vars {cfg.n_vars} does not match dataset {split.n_vars}"
        )
    rng = np.random.default_rng(cfg.master_seed)
    graveyard = Graveyard()
    state = RunState(
        cfg=cfg,
        split=split,
        train_cfg=train_cfg,
        rng=rng,
        graveyard=graveyard,
        population=[],
    )

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        if pool is not None:
            state.mapper = pool.map
        initial = init_population(cfg, rng)
        scores = evaluate_batch(
            initial,
            graveyard,
            split,
            train_cfg,
            cfg.master_seed,
            generation=0,
            mapper=state.mapper,
        )
        state.population = _sort_members(list(zip(initial, scores)))

        reports: list[GenerationReport] = []
        exhausted = False
        for _ in range(cfg.generations):
            state, report = step_generation(state)
            reports.append(report)
            if report.exhausted:
                exhausted = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    best_key, best_score = graveyard.best()
    return RunResult(
        best=Chromosome(best_key),
        best_score=best_score,
        reports=reports,
        graveyard=graveyard,
        exhausted=exhausted,
    )


def exhaustive_search(
    n_vars: int,
    split: SplitDataset,
    train_cfg: TrainConfig,
    master_seed: int,
    cap: int = EXHAUSTIVE_CAP_DEFAULT,
    threads: int = 1,
) -> tuple[tuple[Chromosome, Score], list[tuple[Chromosome, Score]]]:
    """Score every nonempty subset once; the oracle the search approximates.

    Uses the same scoring and seed derivation as the GA, so a GA run and
    the oracle agree on every chromosome they both touch. Capped because
    the table doubles per variable.
    """
    if n_vars > cap:
        raise CapExceededError(
            f"exhaustive search over {n_vars} variables exceeds cap {cap} "
            f"({subset_count(n_vars)} models)"
        )
    if split.n_vars != n_vars:
        raise ConfigError(
            f"n_vars {n_vars} does not match dataset {split.n_vars}"
        )
    chromosomes = [
        Chromosome(i for i in range(n_vars) if mask >> i & 1)
        for mask in range(1, 1 << n_vars)
    ]
    graveyard = Graveyard()
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        mapper = pool.map if pool is not None else map
        scores = evaluate_batch(
            chromosomes,
            graveyard,
            split,
            train_cfg,
            master_seed,
            generation=0,
            mapper=mapper,
        )
    finally:
        if pool is not None:
            pool.shutdown()
    table = list(zip(chromosomes, scores))
    best = min(table, key=lambda m: ranking_key(canonical_key(m[0]), m[1]))
    return best, table
