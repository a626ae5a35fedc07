"""Bridge between the optimizers and the forest.

A candidate solution is a real vector: [max_depth, criterion switch,
min_samples_leaf, mtry fraction, one mask entry per feature column].
Fitness is 1 - mean stratified-CV accuracy on the training split only; the
held-out test rows are never touched while tuning (all fitness-time row
access funnels through `take_rows`, which the test suite instruments).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import forest as rf
from . import issa as issa_mod
from . import ssa as ssa_mod
from .dataset import Dataset, encode, stratified_split_indices
from .errors import ConfigError

METHODS = ("rf", "ssa-rf", "issa-rf")

DEPTH_RANGE = (1.0, 20.0)
LEAF_RANGE = (1.0, 10.0)

N_BASE_DIMS = 4  # depth, criterion, min_leaf, mtry; then one dim per feature


def search_space(n_features: int) -> ssa_mod.SearchSpace:
    lower = np.array([DEPTH_RANGE[0], 0.0, LEAF_RANGE[0], 0.0] + [0.0] * n_features)
    upper = np.array([DEPTH_RANGE[1], 1.0, LEAF_RANGE[1], 1.0] + [1.0] * n_features)
    return ssa_mod.SearchSpace(lower, upper)


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def decode(v: Sequence[float], n_features: int, n_trees: int = 100) -> rf.HyperParams:
    """Map a search vector onto HyperParams; every in-box vector decodes.

    An all-false mask is repaired by activating the entry with the largest
    raw value.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (N_BASE_DIMS + n_features,):
        raise ConfigError(f"search vector must have length {N_BASE_DIMS + n_features}")
    max_depth = min(max(_round_half_up(v[0]), int(DEPTH_RANGE[0])), int(DEPTH_RANGE[1]))
    criterion = "gini" if v[1] < 0.5 else "entropy"
    min_leaf = min(max(_round_half_up(v[2]), int(LEAF_RANGE[0])), int(LEAF_RANGE[1]))
    raw_mask = v[N_BASE_DIMS:]
    mask = raw_mask >= 0.5
    if not mask.any():
        mask = np.zeros(n_features, dtype=bool)
        mask[int(np.argmax(raw_mask))] = True
    active = int(mask.sum())
    mtry = max(1, _round_half_up(v[3] * active))
    return rf.HyperParams(
        n_trees=n_trees,
        max_depth=max_depth,
        split_criterion=criterion,
        min_samples_leaf=min_leaf,
        mtry=mtry,
        feature_mask=tuple(bool(b) for b in mask),
    )


def take_rows(X: np.ndarray, y: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The single fitness-time row-gather path (instrumented in tests)."""
    return X[idx], y[idx]


def make_cv_folds(labels: np.ndarray, folds: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic stratified k-fold over positions 0..len(labels)-1."""
    if folds < 2:
        raise ConfigError("folds must be >= 2")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    assignment = np.empty(len(labels), dtype=np.int64)
    for c in np.unique(labels):
        pos = np.flatnonzero(labels == c)
        pos = pos[rng.permutation(len(pos))]
        for j, p in enumerate(pos):
            assignment[p] = j % folds
    out = []
    for f in range(folds):
        val = np.flatnonzero(assignment == f)
        train = np.flatnonzero(assignment != f)
        out.append((train, val))
    return out


class CvFitness:
    """1 - mean validation accuracy of a decoded forest over stratified folds.

    Deterministic: the fold layout and per-fold training seeds depend only
    on (labels, folds, seed). Folds that lose a class are skipped; if every
    fold is skipped the fitness is the worst value 1.0.
    """

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        train_idx: np.ndarray,
        folds: int,
        seed: int,
        n_trees: int = 100,
        threads: int = 1,
    ):
        self.X = X
        self.y = y
        self.train_idx = np.asarray(train_idx, dtype=np.int64)
        self.n_features = X.shape[1]
        self.n_trees = n_trees
        self.threads = threads
        y_train = y[self.train_idx]
        self._folds = make_cv_folds(y_train, folds, seed)
        self._fold_seeds = [
            int(np.random.SeedSequence([seed, f]).generate_state(1)[0])
            for f in range(folds)
        ]

    def __call__(self, v: np.ndarray) -> float:
        params = decode(v, self.n_features, self.n_trees)
        accuracies = []
        for fold_no, (tr_rel, va_rel) in enumerate(self._folds):
            if len(tr_rel) == 0 or len(va_rel) == 0:
                continue
            Xtr, ytr = take_rows(self.X, self.y, self.train_idx[tr_rel])
            Xva, yva = take_rows(self.X, self.y, self.train_idx[va_rel])
            if len(np.unique(ytr)) < 2 or len(np.unique(yva)) < 2:
                continue
            model = rf.fit(Xtr, ytr, params, self._fold_seeds[fold_no], threads=self.threads)
            _, acc = rf.evaluate(model, Xva, yva)
            accuracies.append(acc)
        if not accuracies:
            return 1.0
        return 1.0 - float(np.mean(accuracies))


@dataclass
class ExperimentConfig:
    seed: int = 0
    train_fraction: float = 0.7
    folds: int = 5
    n_trees: int = 100
    threads: int = 1
    forest: rf.HyperParams = field(default_factory=rf.HyperParams)
    ssa: ssa_mod.SsaConfig = field(default_factory=lambda: ssa_mod.SsaConfig(population_size=20))
    issa: issa_mod.IssaConfig = field(
        default_factory=lambda: issa_mod.IssaConfig(base=ssa_mod.SsaConfig(population_size=20))
    )

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


@dataclass
class MethodReport:
    method: str
    train_accuracy: float
    test_accuracy: float
    train_confusion: list[list[int]]
    test_confusion: list[list[int]]
    hyperparams: dict
    best_cv_fitness: float | None
    optimizer_evaluations: int
    seeds: dict
    metadata: dict
    wall_time_s: float
    trace: ssa_mod.OptimizationTrace | None = None
    trace_csv: str | None = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "train_confusion": self.train_confusion,
            "test_confusion": self.test_confusion,
            "hyperparams": self.hyperparams,
            "best_cv_fitness": self.best_cv_fitness,
            "optimizer_evaluations": self.optimizer_evaluations,
            "seeds": self.seeds,
            "metadata": self.metadata,
            "trace_csv": self.trace_csv,
            "timing": {"wall_time_s": self.wall_time_s},
        }


def _derived_seeds(master: int) -> dict:
    children = np.random.SeedSequence(master).spawn(4)
    names = ("split", "cv", "optimizer", "final_forest")
    out = {"master": master}
    out.update({n: int(c.generate_state(1)[0]) for n, c in zip(names, children)})
    return out


# Carried over from the original experiment protocol for report fidelity;
# a random forest has no learning rate, so the value is never used.
_PROTOCOL_METADATA = {
    "learning_rate": 0.001,
    "learning_rate_used": False,
}


def tune_method(
    X: np.ndarray,
    y: np.ndarray,
    train_idx: np.ndarray,
    method: str,
    config: ExperimentConfig,
    opt_seed: int,
    cv_seed: int,
):
    """Run one optimizer over the search box; returns (params, fitness, trace, evals)."""
    fitness = CvFitness(
        X, y, train_idx, config.folds, cv_seed, n_trees=config.n_trees, threads=config.threads
    )
    space = search_space(X.shape[1])
    if method == "ssa-rf":
        best_v, best_f, trace = ssa_mod.optimize(
            fitness, space, replace(config.ssa, seed=opt_seed)
        )
    elif method == "issa-rf":
        issa_cfg = replace(config.issa, base=replace(config.issa.base, seed=opt_seed))
        best_v, best_f, trace = issa_mod.ils_optimize(fitness, space, issa_cfg)
    else:
        raise ConfigError(f"unknown tuned method {method!r}")
    params = decode(best_v, X.shape[1], config.n_trees)
    return params, best_f, trace, trace.evaluations


def run_experiment(data: Dataset, method: str, config: ExperimentConfig):
    """Train and score one method end to end; returns (MethodReport, Forest).

    The dataset is split 7:3 (stratified) by default; tuned methods search
    the hyperparameter box against CV fitness on the training split, then
    one final forest is retrained on the whole training split.
    """
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}")
    X, y = encode(data)
    seeds = _derived_seeds(config.seed)
    train_idx, test_idx = stratified_split_indices(y, config.train_fraction, seeds["split"])

    t0 = time.perf_counter()
    if method == "rf":
        params = replace(config.forest, n_trees=config.n_trees)
        best_f, trace, n_evals = None, None, 0
    else:
        params, best_f, trace, n_evals = tune_method(
            X, y, train_idx, method, config, seeds["optimizer"], seeds["cv"]
        )

    Xtr, ytr = X[train_idx], y[train_idx]
    Xte, yte = X[test_idx], y[test_idx]
    model = rf.fit(Xtr, ytr, params, seeds["final_forest"], threads=config.threads)
    train_cm, train_acc = rf.evaluate(model, Xtr, ytr)
    test_cm, test_acc = rf.evaluate(model, Xte, yte)
    wall = time.perf_counter() - t0

    resolved = params.resolve(X.shape[1])
    report = MethodReport(
        method=method,
        train_accuracy=train_acc,
        test_accuracy=test_acc,
        train_confusion=train_cm.to_lists(),
        test_confusion=test_cm.to_lists(),
        hyperparams={
            "n_trees": resolved.n_trees,
            "max_depth": resolved.max_depth,
            "split_criterion": resolved.split_criterion,
            "min_samples_leaf": resolved.min_samples_leaf,
            "mtry": resolved.mtry,
            "feature_mask": list(resolved.feature_mask),
        },
        best_cv_fitness=best_f,
        optimizer_evaluations=n_evals,
        seeds=seeds,
        metadata=dict(_PROTOCOL_METADATA),
        wall_time_s=wall,
        trace=trace,
    )
    return report, model


@dataclass
class ComparisonReport:
    entries: dict[str, MethodReport]

    def grid(self) -> dict:
        return {
            "train": {m: r.train_accuracy for m, r in self.entries.items()},
            "test": {m: r.test_accuracy for m, r in self.entries.items()},
        }

    def text_table(self) -> str:
        methods = [m for m in METHODS if m in self.entries]
        headers = {"rf": "RF", "ssa-rf": "SSA-RF", "issa-rf": "ISSA-RF"}
        lines = ["      " + "".join(f"{headers[m]:>10}" for m in methods)]
        for split, attr in (("Train", "train_accuracy"), ("Test", "test_accuracy")):
            cells = "".join(
                f"{getattr(self.entries[m], attr) * 100:>9.1f}%" for m in methods
            )
            lines.append(f"{split:<6}" + cells)
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "accuracy_grid": self.grid(),
            "optimizer_evaluations": {
                m: r.optimizer_evaluations for m, r in self.entries.items()
            },
            "entries": {m: r.to_dict() for m, r in self.entries.items()},
        }


def compare(reports: Sequence[MethodReport]) -> ComparisonReport:
    """Merge per-method reports into the accuracy grid (no recomputation)."""
    if not reports:
        raise ConfigError("compare needs at least one report")
    entries = {}
    for r in reports:
        if r.method in entries:
            raise ConfigError(f"duplicate report for method {r.method!r}")
        entries[r.method] = r
    return ComparisonReport(entries)
