"""Improved sparrow search wrapped in an iterated local search.

Three changes over the plain optimizer: the population starts on a logistic
chaotic orbit instead of uniform noise, producer steps shrink under a
linearly decaying weight, and after every iteration the best sparrow is
challenged by its box-mirrored opposite and a heavy-tailed Cauchy mutant
(greedy keep-the-best). The whole thing runs inside an ILS outer loop:
later rounds restart the search from a Cauchy kick of the incumbent and the
round result is accepted Metropolis-style.

Two test hooks (`uniform_init`, `elite_refresh_enabled`) plus degenerate
weights and `ils_restarts=1` make this reduce bit-exactly to plain SSA.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .ssa import (
    CountingFitness,
    OptimizationTrace,
    Population,
    SearchSpace,
    SsaConfig,
    ssa_step,
    uniform_positions,
)

_LOGISTIC_FIXED_POINTS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass
class IssaConfig:
    base: SsaConfig = field(default_factory=SsaConfig)
    chaos_seed: float = 0.7
    weight_max: float = 0.9
    weight_min: float = 0.4
    cauchy_scale: float = 0.1
    ils_restarts: int = 5
    acceptance_temperature: float = 0.01
    # test hooks: disable individual improvements to recover plain SSA
    uniform_init: bool = False
    elite_refresh_enabled: bool = True

    def __post_init__(self):
        if not 0.0 < self.chaos_seed < 1.0 or self.chaos_seed in _LOGISTIC_FIXED_POINTS:
            raise ConfigError(
                "chaos_seed must lie in (0, 1) and avoid the degenerate orbit "
                f"points {_LOGISTIC_FIXED_POINTS}"
            )
        # equality allowed: weight_min == weight_max == 1 is the reduction hook
        if self.weight_min > self.weight_max:
            raise ConfigError("weight_min must not exceed weight_max")
        if self.cauchy_scale < 0.0:
            raise ConfigError("cauchy_scale must be >= 0")
        if self.ils_restarts < 1:
            raise ConfigError("ils_restarts must be >= 1")
        if self.acceptance_temperature <= 0.0:
            raise ConfigError("acceptance_temperature must be > 0")


class LogisticOrbit:
    """The chaotic sequence x -> 4 x (1 - x), emitted starting at the seed."""

    def __init__(self, seed: float):
        if not 0.0 < seed < 1.0 or seed in _LOGISTIC_FIXED_POINTS:
            raise ConfigError(f"degenerate logistic seed {seed!r}")
        self._x = float(seed)

    def take(self, k: int) -> np.ndarray:
        out = np.empty(k, dtype=np.float64)
        x = self._x
        for i in range(k):
            out[i] = x
            x = 4.0 * x * (1.0 - x)
        self._x = x
        return out


def chaotic_init(space: SearchSpace, n: int, chaos: LogisticOrbit | float) -> np.ndarray:
    """n positions from the logistic orbit, consumed row-major, mapped to the box."""
    if n < 4:
        raise ConfigError("population size must be >= 4")
    orbit = chaos if isinstance(chaos, LogisticOrbit) else LogisticOrbit(chaos)
    vals = orbit.take(n * space.dimension).reshape(n, space.dimension)
    return space.lower + vals * space.width


def adaptive_weight(t: int, max_iterations: int, w_min: float, w_max: float) -> float:
    """Linear decay from w_max at t=0 to w_min at t=max_iterations."""
    if max_iterations < 1:
        raise ConfigError("max_iterations must be >= 1")
    if not 0 <= t <= max_iterations:
        raise ConfigError("iteration index out of range")
    return w_max - (w_max - w_min) * t / max_iterations


def opposition(x: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Mirror a position through the box center: lower + upper - x."""
    return space.lower + space.upper - np.asarray(x, dtype=np.float64)


def standard_cauchy(rng: np.random.Generator, size) -> np.ndarray:
    """Standard Cauchy draws via tan(pi (u - 1/2)); quartiles at +-1."""
    u = rng.random(size)
    return np.tan(np.pi * (u - 0.5))


def cauchy_mutate(
    x: np.ndarray, scale: float, rng: np.random.Generator, space: SearchSpace
) -> np.ndarray:
    """Heavy-tailed kick: x + scale * width * Cauchy, clamped to the box."""
    if scale < 0.0:
        raise ConfigError("scale must be >= 0")
    c = standard_cauchy(rng, space.dimension)
    return space.clip(np.asarray(x, dtype=np.float64) + scale * space.width * c)


def elite_refresh(
    best_position: np.ndarray,
    best_fitness: float,
    space: SearchSpace,
    rng: np.random.Generator,
    config: IssaConfig,
    fitness_fn,
) -> tuple[np.ndarray, float]:
    """Challenge the best sparrow with its opposite and a Cauchy mutant.

    Greedy: the best of {original, opposite, mutant} wins; ties keep the
    original. Costs exactly two fitness evaluations.
    """
    keep_pos = np.asarray(best_position, dtype=np.float64)
    keep_fit = best_fitness
    opp = opposition(keep_pos, space)
    mut = cauchy_mutate(keep_pos, config.cauchy_scale, rng, space)
    for cand in (opp, mut):
        f = fitness_fn(cand)
        if not math.isfinite(f):
            f = math.inf
        if f < keep_fit:
            keep_pos, keep_fit = cand, f
    return keep_pos, keep_fit


def _run_round(
    fitness_fn,
    space: SearchSpace,
    config: IssaConfig,
    rng: np.random.Generator,
    orbit: LogisticOrbit,
    injected: np.ndarray | None,
    record,
) -> Population:
    base = config.base
    if config.uniform_init:
        positions = uniform_positions(space, base.population_size, rng)
    else:
        positions = chaotic_init(space, base.population_size, orbit)
    if injected is not None:
        positions[0] = injected
    population = Population(positions, fitness_fn)
    record(population.best_fitness)
    for t in range(1, base.max_iterations + 1):
        w = adaptive_weight(t, base.max_iterations, config.weight_min, config.weight_max)
        ssa_step(population, space, base, fitness_fn, t, rng, weight=w)
        if config.elite_refresh_enabled:
            pos, fit = elite_refresh(
                population.positions[0],
                float(population.fitness[0]),
                space,
                rng,
                config,
                fitness_fn,
            )
            population.replace_best(pos, fit)
        record(population.best_fitness)
    return population


def ils_optimize(fitness_fn, space: SearchSpace, config: IssaConfig):
    """Improved SSA inside an iterated local search.

    Round 1 searches from scratch; every later round restarts from a Cauchy
    kick of the incumbent (injected into a fresh chaotic population) and its
    result is accepted when better, or with probability exp(-delta/tau)
    otherwise. The returned best is elitist over all rounds, independent of
    the acceptance decisions.
    """
    counted = CountingFitness(fitness_fn)
    rng = np.random.default_rng(config.base.seed)
    orbit = LogisticOrbit(config.chaos_seed)
    trace = OptimizationTrace(rounds=[])

    global_best_pos: np.ndarray | None = None
    global_best_fit = math.inf
    incumbent_pos: np.ndarray | None = None
    incumbent_fit = math.inf

    for round_no in range(1, config.ils_restarts + 1):

        def record(best_fit: float, _round=round_no):
            nonlocal global_best_fit
            if best_fit < global_best_fit:
                global_best_fit = best_fit
            trace.best_so_far.append(global_best_fit)
            trace.rounds.append(_round)

        injected = None
        if round_no > 1:
            injected = cauchy_mutate(incumbent_pos, config.cauchy_scale, rng, space)
        before_round = global_best_fit
        population = _run_round(counted, space, config, rng, orbit, injected, record)

        round_pos = population.best_position.copy()
        round_fit = population.best_fitness
        if global_best_pos is None or round_fit < before_round:
            global_best_pos = round_pos.copy()

        if round_no == 1:
            incumbent_pos, incumbent_fit = round_pos, round_fit
        else:
            delta = round_fit - incumbent_fit
            if delta <= 0 or rng.random() < math.exp(-delta / config.acceptance_temperature):
                incumbent_pos, incumbent_fit = round_pos, round_fit

    trace.best_position = global_best_pos.copy()
    trace.evaluations = counted.count
    return global_best_pos.copy(), global_best_fit, trace
