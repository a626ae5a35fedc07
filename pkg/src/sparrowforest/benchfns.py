"""Standard continuous test objectives and an equal-budget comparison harness.

The harness sizes each optimizer so its planned evaluation count lands
within 1% of a shared budget, runs them over seeds, and summarizes final
bests with the same median/min/max statistics the dataset module uses. A
uniform random-search baseline keeps the comparison falsifiable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import issa as issa_mod
from . import ssa as ssa_mod
from .dataset import column_stats
from .errors import ConfigError
from .issa import IssaConfig
from .ssa import OptimizationTrace, SearchSpace, SsaConfig

BUDGET_TOLERANCE = 0.01


def sphere(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x * x))


def rastrigin(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def ackley(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    a, b, c = 20.0, 0.2, 2.0 * np.pi
    d = x.size
    s1 = np.sum(x * x)
    s2 = np.sum(np.cos(c * x))
    return float(-a * np.exp(-b * np.sqrt(s1 / d)) - np.exp(s2 / d) + a + np.e)


def rosenbrock(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


@dataclass(frozen=True)
class Objective:
    name: str
    dimension: int
    space: SearchSpace
    fn: Callable[[np.ndarray], float]
    known_minimum: float
    known_argmin: np.ndarray

    def evaluate(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dimension,):
            raise ConfigError(
                f"{self.name} expects dimension {self.dimension}, got shape {x.shape}"
            )
        return self.fn(x)


def _box(dim: int, lo: float, hi: float) -> SearchSpace:
    return SearchSpace(np.full(dim, lo), np.full(dim, hi))


def make_sphere(dim: int) -> Objective:
    return Objective("sphere", dim, _box(dim, -5.12, 5.12), sphere, 0.0, np.zeros(dim))


def make_rastrigin(dim: int) -> Objective:
    return Objective("rastrigin", dim, _box(dim, -5.12, 5.12), rastrigin, 0.0, np.zeros(dim))


def make_ackley(dim: int) -> Objective:
    return Objective("ackley", dim, _box(dim, -32.768, 32.768), ackley, 0.0, np.zeros(dim))


def make_rosenbrock(dim: int) -> Objective:
    return Objective("rosenbrock", dim, _box(dim, -5.0, 10.0), rosenbrock, 0.0, np.ones(dim))


DEFAULT_OBJECTIVES = (make_sphere, make_rastrigin, make_ackley, make_rosenbrock)


def random_search(fitness_fn, space: SearchSpace, budget: int, seed: int):
    """Uniform sampling baseline: exactly `budget` evaluations."""
    rng = np.random.default_rng(seed)
    best_pos = None
    best_fit = math.inf
    trace = OptimizationTrace()
    for _ in range(budget):
        x = rng.uniform(space.lower, space.upper)
        v = float(fitness_fn(x))
        if not math.isfinite(v):
            v = math.inf
        if v < best_fit:
            best_fit = v
            best_pos = x
        trace.best_so_far.append(best_fit)
    trace.best_position = best_pos
    trace.evaluations = budget
    return best_pos, best_fit, trace


def planned_evaluations_ssa(config: SsaConfig) -> int:
    return config.population_size * (config.max_iterations + 1)


def planned_evaluations_issa(config: IssaConfig) -> int:
    n = config.base.population_size
    per_step = n + (2 if config.elite_refresh_enabled else 0)
    return config.ils_restarts * (n + config.base.max_iterations * per_step)


def ssa_config_for_budget(budget: int, population_size: int = 30, **kwargs) -> SsaConfig:
    """SSA config whose evaluation count best approximates the budget."""
    iters = max(1, round(budget / population_size) - 1)
    return SsaConfig(population_size=population_size, max_iterations=iters, **kwargs)


def issa_config_for_budget(
    budget: int, population_size: int = 30, restarts: int = 5, **kwargs
) -> IssaConfig:
    """ISSA config whose evaluation count best approximates the budget."""
    cfg = IssaConfig(
        base=SsaConfig(population_size=population_size, max_iterations=1),
        ils_restarts=restarts,
        **kwargs,
    )
    per_step = population_size + (2 if cfg.elite_refresh_enabled else 0)
    iters = max(1, round((budget / restarts - population_size) / per_step))
    return replace(cfg, base=replace(cfg.base, max_iterations=iters))


class Runner:
    """A named optimizer bound to a budget; callable as (objective, seed)."""

    def __init__(self, name: str, planned_evaluations: int, fn):
        self.name = name
        self.planned_evaluations = planned_evaluations
        self._fn = fn

    def __call__(self, objective: Objective, seed: int):
        return self._fn(objective, seed)


def make_ssa_runner(budget: int, population_size: int = 30) -> Runner:
    cfg = ssa_config_for_budget(budget, population_size)

    def run(objective: Objective, seed: int):
        return ssa_mod.optimize(objective.evaluate, objective.space, replace(cfg, seed=seed))

    return Runner("ssa", planned_evaluations_ssa(cfg), run)


def make_issa_runner(budget: int, population_size: int = 30, restarts: int = 5, **kwargs) -> Runner:
    cfg = issa_config_for_budget(budget, population_size, restarts, **kwargs)

    def run(objective: Objective, seed: int):
        seeded = replace(cfg, base=replace(cfg.base, seed=seed))
        return issa_mod.ils_optimize(objective.evaluate, objective.space, seeded)

    return Runner("issa", planned_evaluations_issa(cfg), run)


def make_random_runner(budget: int) -> Runner:
    def run(objective: Objective, seed: int):
        return random_search(objective.evaluate, objective.space, budget, seed)

    return Runner("random", budget, run)


@dataclass(frozen=True)
class SuiteRow:
    optimizer: str
    objective: str
    dimension: int
    seed: int
    final_best: float
    evaluations: int


def run_suite(
    runners: Sequence[Runner],
    objectives: Sequence[Objective],
    seeds: Sequence[int],
    budget: int,
    trace_dir=None,
) -> tuple[list[SuiteRow], dict]:
    """Run every (optimizer, objective, seed) cell at a shared budget.

    Raises ConfigError when any runner's planned evaluation count strays
    more than 1% from the budget, so comparisons stay fair by construction.
    """
    for r in runners:
        if abs(r.planned_evaluations - budget) > BUDGET_TOLERANCE * budget:
            raise ConfigError(
                f"runner {r.name!r} plans {r.planned_evaluations} evaluations, "
                f"more than 1% away from the budget {budget}"
            )
    rows: list[SuiteRow] = []
    for objective in objectives:
        for runner in runners:
            for seed in seeds:
                _, best, trace = runner(objective, seed)
                rows.append(
                    SuiteRow(
                        optimizer=runner.name,
                        objective=objective.name,
                        dimension=objective.dimension,
                        seed=seed,
                        final_best=best,
                        evaluations=trace.evaluations,
                    )
                )
                if trace_dir is not None:
                    trace.write_csv(
                        f"{trace_dir}/trace_{runner.name}_{objective.name}_{seed}.csv"
                    )
    summary = {}
    for objective in objectives:
        for runner in runners:
            finals = [
                r.final_best
                for r in rows
                if r.optimizer == runner.name and r.objective == objective.name
            ]
            stats = column_stats(finals)
            summary[(runner.name, objective.name)] = {
                "median": stats.median,
                "min": stats.minimum,
                "max": stats.maximum,
            }
    return rows, summary


def write_results_csv(rows: Sequence[SuiteRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["optimizer", "objective", "dimension", "seed", "final_best", "evaluations"])
        for r in rows:
            writer.writerow(
                [r.optimizer, r.objective, r.dimension, r.seed, repr(r.final_best), r.evaluations]
            )
