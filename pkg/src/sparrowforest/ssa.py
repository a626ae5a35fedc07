"""Sparrow search over a box-bounded continuous space, minimizing a fitness.

The population plays three roles each iteration: producers (the best
fraction) explore, scroungers follow the best producer or jump away from
the worst position, and a random scout squad re-randomizes against
stagnation. The global best ever seen is tracked elitically, so the
best-so-far curve never increases.

All randomness flows through one numpy Generator in a fixed, documented
draw order, which makes runs reproducible and lets the improved variant
reduce exactly to this one when its extras are switched off.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, OptimizationError

_SCOUT_EPS = 1e-50


@dataclass
class SearchSpace:
    """Axis-aligned box; positions are clamped to it after every step."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ConfigError("bounds must be 1-D vectors of equal length")
        if not np.all(self.lower < self.upper):
            raise ConfigError("every lower bound must be strictly below its upper bound")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, positions: np.ndarray) -> np.ndarray:
        return np.clip(positions, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass
class SsaConfig:
    population_size: int = 30
    max_iterations: int = 40
    producer_fraction: float = 0.2
    scout_fraction: float = 0.1
    safety_threshold: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 4:
            raise ConfigError("population_size must be >= 4")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        for name in ("producer_fraction", "scout_fraction", "safety_threshold"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must be in (0, 1)")

    @property
    def n_producers(self) -> int:
        return max(1, math.ceil(self.producer_fraction * self.population_size))

    @property
    def n_scouts(self) -> int:
        return max(1, math.ceil(self.scout_fraction * self.population_size))


@dataclass(frozen=True)
class Sparrow:
    position: np.ndarray
    fitness: float


@dataclass
class OptimizationTrace:
    """Best-so-far fitness per iteration; non-increasing by construction."""

    best_so_far: list[float] = field(default_factory=list)
    best_position: np.ndarray | None = None
    evaluations: int = 0
    rounds: list[int] | None = None

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            if self.rounds is None:
                writer.writerow(["iteration", "best_fitness"])
                for i, v in enumerate(self.best_so_far):
                    writer.writerow([i, repr(v)])
            else:
                writer.writerow(["round", "iteration", "best_fitness"])
                it = 0
                prev_round = None
                for r, v in zip(self.rounds, self.best_so_far):
                    it = 0 if r != prev_round else it + 1
                    prev_round = r
                    writer.writerow([r, it, repr(v)])


class CountingFitness:
    """Wraps a fitness function: counts calls, wraps raised errors."""

    def __init__(self, fn):
        self.fn = fn
        self.count = 0

    def __call__(self, x: np.ndarray) -> float:
        self.count += 1
        try:
            return float(self.fn(x))
        except Exception as exc:
            raise OptimizationError(
                f"fitness evaluation {self.count} failed at position {x.tolist()}: {exc}"
            ) from exc


class Population:
    """Positions and fitnesses kept sorted ascending, plus the elitist best."""

    def __init__(self, positions: np.ndarray, fitness_fn):
        self.positions = np.array(positions, dtype=np.float64)
        self.fitness = np.empty(len(self.positions), dtype=np.float64)
        self.evaluations = 0
        self.best_position = self.positions[0].copy()
        self.best_fitness = math.inf
        self._evaluate(fitness_fn)
        self._resort()

    def __len__(self) -> int:
        return len(self.positions)

    def _evaluate(self, fitness_fn) -> None:
        for i in range(len(self.positions)):
            v = fitness_fn(self.positions[i])
            # non-finite values are worst, never propagated
            self.fitness[i] = v if math.isfinite(v) else math.inf
        self.evaluations += len(self.positions)

    def _resort(self) -> None:
        order = np.argsort(self.fitness, kind="stable")
        self.positions = self.positions[order]
        self.fitness = self.fitness[order]
        if self.fitness[0] < self.best_fitness:
            self.best_fitness = float(self.fitness[0])
            self.best_position = self.positions[0].copy()

    def refresh(self, fitness_fn) -> None:
        self._evaluate(fitness_fn)
        self._resort()

    def replace_best(self, position: np.ndarray, fitness: float) -> None:
        self.positions[0] = position
        self.fitness[0] = fitness
        if fitness < self.best_fitness:
            self.best_fitness = float(fitness)
            self.best_position = np.array(position, dtype=np.float64)

    def sparrows(self) -> list[Sparrow]:
        return [
            Sparrow(self.positions[i].copy(), float(self.fitness[i]))
            for i in range(len(self.positions))
        ]


def uniform_positions(space: SearchSpace, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(space.lower, space.upper, size=(n, space.dimension))


def init_population(space: SearchSpace, n: int, rng: np.random.Generator, fitness_fn) -> Population:
    """Uniform-random population with all fitnesses evaluated."""
    if n < 4:
        raise ConfigError("population size must be >= 4")
    return Population(uniform_positions(space, n, rng), fitness_fn)


def ssa_step(
    population: Population,
    space: SearchSpace,
    config: SsaConfig,
    fitness_fn,
    t: int,
    rng: np.random.Generator,
    *,
    weight: float = 1.0,
) -> Population:
    """One producer/scrounger/scout sweep.

    `weight` scales only the producer displacement (1.0 leaves the update
    untouched); the improved variant drives it with a decaying schedule.
    Draw order per step: alarm value, producer noise, scrounger noise
    (followers first, jumpers second), scout indices, scout noise.
    """
    X = population.positions
    F = population.fitness
    n = len(population)
    d = space.dimension
    n_prod = min(config.n_producers, n)
    T = max(1, config.max_iterations)

    # (a) producers: shrink toward the origin while safe, jump when alarmed
    alarm = rng.random()
    ranks = np.arange(1, n_prod + 1, dtype=np.float64)
    if alarm < config.safety_threshold:
        alpha = 1.0 - rng.random(n_prod)  # in (0, 1]
        target = X[:n_prod] * np.exp(-ranks / (alpha * T))[:, None]
    else:
        target = X[:n_prod] + rng.standard_normal(n_prod)[:, None]
    if weight == 1.0:
        X[:n_prod] = target
    else:
        X[:n_prod] = X[:n_prod] + weight * (target - X[:n_prod])

    # (b) scroungers: the better half follows the best producer, the worse
    # half jumps away from the worst position
    if n_prod < n:
        x_best_prod = X[0].copy()
        x_worst = X[n - 1].copy()
        cut = n_prod + (n - n_prod) / 2.0  # 1-based rank threshold
        scrounger_ranks = np.arange(n_prod + 1, n + 1)
        n_follow = int(np.count_nonzero(scrounger_ranks <= cut))
        if n_follow > 0:
            block = X[n_prod : n_prod + n_follow]
            signs = rng.integers(0, 2, size=(n_follow, d)) * 2 - 1
            X[n_prod : n_prod + n_follow] = x_best_prod + (np.abs(block - x_best_prod) * signs) / d
        start = n_prod + n_follow
        if start < n:
            q = rng.standard_normal(n - start)[:, None]
            jump_ranks = scrounger_ranks[n_follow:].astype(np.float64)[:, None]
            X[start:n] = q * np.exp((x_worst - X[start:n]) / jump_ranks**2)

    # (c) scouts: danger-aware re-randomization of a random squad
    n_scouts = min(config.n_scouts, n)
    scout_idx = rng.choice(n, size=n_scouts, replace=False)
    beta = rng.standard_normal(n_scouts)
    k = rng.uniform(-1.0, 1.0, n_scouts)
    x_worst_now = X[n - 1].copy()
    f_worst = F[n - 1]
    for j, i in enumerate(scout_idx):
        if F[i] > population.best_fitness:
            X[i] = population.best_position + beta[j] * np.abs(X[i] - population.best_position)
        else:
            denom = F[i] - f_worst + _SCOUT_EPS
            if math.isfinite(denom):
                X[i] = X[i] + k[j] * (np.abs(X[i] - x_worst_now) / denom)

    np.clip(X, space.lower, space.upper, out=X)
    population.refresh(fitness_fn)
    return population


def optimize(fitness_fn, space: SearchSpace, config: SsaConfig):
    """Run init + max_iterations steps; returns (best_position, best_fitness, trace)."""
    counted = CountingFitness(fitness_fn)
    rng = np.random.default_rng(config.seed)
    population = init_population(space, config.population_size, rng, counted)
    trace = OptimizationTrace(best_so_far=[population.best_fitness])
    for t in range(1, config.max_iterations + 1):
        ssa_step(population, space, config, counted, t, rng)
        trace.best_so_far.append(population.best_fitness)
    trace.best_position = population.best_position.copy()
    trace.evaluations = counted.count
    return population.best_position.copy(), population.best_fitness, trace
