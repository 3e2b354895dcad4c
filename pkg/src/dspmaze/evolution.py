"""Genetic algorithm over plasticity rules (and hill-climb parameters).

A genotype packs 32 discrete weight-change entries with four continuous
parameters (or, for the hill-climb variant, three continuous parameters
and nothing discrete). Fitness is the mean best episodic performance over
independent trials across all eight goal positions, minimized.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hillclimb import HcParams, hc_trial
from .maze import GoalConfig, Maze, N_FINALS
from .plasticity import DspRule, N_RULE_ENTRIES, dsp_trial

logger = logging.getLogger(__name__)

SeedLike = int | np.random.SeedSequence


@dataclass(frozen=True)
class Genotype:
    """Discrete slots first, continuous slots second; slices stay in range."""

    discrete: tuple[int, ...]
    continuous: tuple[float, ...]

    def __post_init__(self) -> None:
        if any(d not in (-1, 0, 1) for d in self.discrete):
            raise ValueError("discrete slots must be -1, 0 or +1")
        if any(not 0.0 <= c <= 1.0 for c in self.continuous):
            raise ValueError("continuous slots must be in [0, 1]")

    @property
    def n_slots(self) -> int:
        return len(self.discrete) + len(self.continuous)

    def slots(self) -> tuple[float, ...]:
        return self.discrete + self.continuous

    def to_rule(self, rule_id: int = 0) -> DspRule:
        if len(self.discrete) != N_RULE_ENTRIES or len(self.continuous) != 4:
            raise ValueError("not a plasticity-rule genotype")
        eta, theta, alpha_h, alpha_o = self.continuous
        return DspRule(
            delta=self.discrete,
            eta=eta,
            theta=theta,
            alpha_h=alpha_h,
            alpha_o=alpha_o,
            rule_id=rule_id,
        )

    def to_hc_params(self) -> HcParams:
        if self.discrete or len(self.continuous) != 3:
            raise ValueError("not a hill-climb genotype")
        sigma, alpha_h, alpha_o = self.continuous
        return HcParams(sigma=sigma, alpha_h=alpha_h, alpha_o=alpha_o)


@dataclass(frozen=True)
class GaConfig:
    pop_size: int = 14
    elites: int = 4
    crossover_prob: float = 0.5
    discrete_mutation_prob: float = 0.15
    continuous_mutation_sigma: float = 0.1
    generations: int = 300
    trials_per_goal: int = 5
    goals: int = N_FINALS
    episodes_per_trial: int = 100
    n_discrete: int = N_RULE_ENTRIES
    n_continuous: int = 4

    def __post_init__(self) -> None:
        if self.elites >= self.pop_size:
            raise ValueError("elites must be smaller than pop_size")
        for name in ("crossover_prob", "discrete_mutation_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in (
            "pop_size", "generations", "trials_per_goal", "goals", "episodes_per_trial"
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def for_hc(cls, **overrides) -> "GaConfig":
        """Preset for evolving the three hill-climb parameters."""
        return cls(n_discrete=0, n_continuous=3, **overrides)


def random_genotype(config: GaConfig, rng: np.random.Generator) -> Genotype:
    return Genotype(
        discrete=tuple(int(v) for v in rng.integers(-1, 2, config.n_discrete)),
        continuous=tuple(float(v) for v in rng.uniform(0.0, 1.0, config.n_continuous)),
    )


def _as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def evaluate_dsp(genotype: Genotype, maze: Maze, config: GaConfig, seed: SeedLike) -> float:
    """Mean best episodic performance over goals x trials, fresh RNN each trial.

    The seed fans out to one independent stream per (goal, trial), so the
    result does not depend on evaluation order.
    """
    rule = genotype.to_rule()
    children = _as_seed_sequence(seed).spawn(config.goals * config.trials_per_goal)
    total = 0.0
    k = 0
    for g in range(1, config.goals + 1):
        for _ in range(config.trials_per_goal):
            rng = np.random.default_rng(children[k])
            k += 1
            result = dsp_trial(
                maze, GoalConfig(g), rule, config.episodes_per_trial, rng=rng
            )
            total += result.best_ep
    return total / (config.goals * config.trials_per_goal)


def evaluate_hc(genotype: Genotype, maze: Maze, config: GaConfig, seed: SeedLike) -> float:
    """Same trial structure as evaluate_dsp with the hill climber inside."""
    params = genotype.to_hc_params()
    children = _as_seed_sequence(seed).spawn(config.goals * config.trials_per_goal)
    total = 0.0
    k = 0
    for g in range(1, config.goals + 1):
        for _ in range(config.trials_per_goal):
            rng = np.random.default_rng(children[k])
            k += 1
            result = hc_trial(
                maze, GoalConfig(g), params, config.episodes_per_trial, rng=rng
            )
            total += result.best_ep
    return total / (config.goals * config.trials_per_goal)


Evaluator = Callable[[Genotype, Maze, GaConfig, SeedLike], float]


def roulette_select(
    population: Sequence[Genotype],
    fitnesses: Sequence[float],
    rng: np.random.Generator,
) -> Genotype:
    """Fitness-proportional pick on a minimized objective.

    Selection weight is (max fitness - fitness) plus a small floor so the
    worst individual keeps a nonzero chance; all-equal fitnesses degrade to
    a uniform pick.
    """
    f = np.asarray(fitnesses, dtype=float)
    if len(population) != f.size or f.size == 0:
        raise ValueError("population and fitnesses must be equal-length and non-empty")
    max_f = f.max()
    weights = (max_f - f) + 1e-6 * max_f
    total = weights.sum()
    if total <= 0.0:
        return population[int(rng.integers(f.size))]
    return population[int(rng.choice(f.size, p=weights / total))]


def crossover_1pt(
    g1: Genotype, g2: Genotype, prob: float, rng: np.random.Generator
) -> Genotype:
    """With probability ``prob``, splice the two genotypes at a uniform cut.

    The cut point ranges over the full discrete-then-continuous
    concatenation; otherwise the first parent is returned unchanged.
    """
    if len(g1.discrete) != len(g2.discrete) or len(g1.continuous) != len(g2.continuous):
        raise ValueError("genotype shapes do not match")
    if rng.random() >= prob:
        return g1
    n = g1.n_slots
    cut = int(rng.integers(1, n))
    nd = len(g1.discrete)
    if cut <= nd:
        return Genotype(
            discrete=g1.discrete[:cut] + g2.discrete[cut:],
            continuous=g2.continuous,
        )
    c = cut - nd
    return Genotype(
        discrete=g1.discrete,
        continuous=g1.continuous[:c] + g2.continuous[c:],
    )


def mutate(g: Genotype, config: GaConfig, rng: np.random.Generator) -> Genotype:
    """Re-sample discrete slots with fixed probability; jitter continuous ones.

    Continuous slots take zero-mean Gaussian noise and clamp to [0, 1].
    """
    discrete = tuple(
        int(rng.integers(-1, 2)) if rng.random() < config.discrete_mutation_prob else d
        for d in g.discrete
    )
    continuous = tuple(
        float(min(1.0, max(0.0, c + config.continuous_mutation_sigma * rng.standard_normal())))
        for c in g.continuous
    )
    return Genotype(discrete=discrete, continuous=continuous)


@dataclass
class FitnessRecord:
    genotype: Genotype
    fitness: float
    generation: int


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_genotype: Genotype


@dataclass
class EvolveResult:
    best: FitnessRecord
    history: list[GenerationStats]
    populations: list[list[Genotype]] | None = None


def _eval_task(args) -> float:
    genotype, maze, config, seed, evaluator = args
    return evaluator(genotype, maze, config, seed)


def _evaluate_many(
    genotypes: Sequence[Genotype],
    seeds: Sequence[np.random.SeedSequence],
    maze: Maze,
    config: GaConfig,
    evaluator: Evaluator,
    workers: int,
) -> list[float]:
    tasks = [(g, maze, config, s, evaluator) for g, s in zip(genotypes, seeds)]
    if workers <= 1 or len(tasks) <= 1:
        return [_eval_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_eval_task, tasks))


def evolve(
    config: GaConfig,
    maze: Maze,
    evaluator: Evaluator,
    seed: SeedLike,
    workers: int = 1,
    keep_populations: bool = False,
    on_generation: Callable[[GenerationStats], None] | None = None,
) -> EvolveResult:
    """Generational GA: elites survive verbatim, the rest are bred.

    Offspring come from roulette selection followed by one-point crossover
    and mutation. Elite fitnesses are cached, never re-evaluated. Every
    evaluation draws its own seed stream keyed by creation order, so
    parallel execution cannot change the outcome.
    """
    master = _as_seed_sequence(seed)
    ops_ss, eval_ss = master.spawn(2)
    ops_rng = np.random.default_rng(ops_ss)

    population = [random_genotype(config, ops_rng) for _ in range(config.pop_size)]
    fitnesses = _evaluate_many(
        population, eval_ss.spawn(len(population)), maze, config, evaluator, workers
    )

    best: FitnessRecord | None = None
    history: list[GenerationStats] = []
    populations: list[list[Genotype]] = []

    for gen in range(config.generations):
        order = sorted(range(config.pop_size), key=lambda i: fitnesses[i])
        top = order[0]
        if best is None or fitnesses[top] < best.fitness:
            best = FitnessRecord(population[top], fitnesses[top], gen)
        stats = GenerationStats(
            generation=gen,
            best_fitness=fitnesses[top],
            mean_fitness=float(np.mean(fitnesses)),
            best_genotype=population[top],
        )
        history.append(stats)
        if keep_populations:
            populations.append(list(population))
        if on_generation is not None:
            on_generation(stats)
        if gen + 1 == config.generations:
            break

        elites = [population[i] for i in order[: config.elites]]
        elite_fitnesses = [fitnesses[i] for i in order[: config.elites]]
        n_offspring = config.pop_size - config.elites
        offspring = []
        for _ in range(n_offspring):
            p1 = roulette_select(population, fitnesses, ops_rng)
            p2 = roulette_select(population, fitnesses, ops_rng)
            child = crossover_1pt(p1, p2, config.crossover_prob, ops_rng)
            offspring.append(mutate(child, config, ops_rng))
        offspring_fitnesses = _evaluate_many(
            offspring, eval_ss.spawn(n_offspring), maze, config, evaluator, workers
        )
        population = elites + offspring
        fitnesses = elite_fitnesses + offspring_fitnesses
        logger.debug(
            "generation %d: best %.3f mean %.3f", gen + 1, min(fitnesses), np.mean(fitnesses)
        )

    assert best is not None
    return EvolveResult(
        best=best, history=history, populations=populations if keep_populations else None
    )
