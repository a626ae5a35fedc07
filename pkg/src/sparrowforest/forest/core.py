"""From-scratch bagged CART random forest for the binary immersion label.

Trees store their nodes as parallel arrays (feature, threshold, left,
right, class counts); feature == -1 marks a leaf. Training is deterministic
for a fixed seed regardless of thread count: every tree draws from its own
SeedSequence substream.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import ConfigError, DataError, ModelFormatError
from . import backend

CRITERIA = {"gini": backend.GINI, "entropy": backend.ENTROPY}

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class HyperParams:
    """Forest configuration plus the feature-inclusion mask.

    `mtry` and `feature_mask` may be None and are resolved against the
    training matrix: mask defaults to all features, mtry to
    floor(sqrt(active feature count)).
    """

    n_trees: int = 100
    max_depth: int = 20
    split_criterion: str = "gini"
    min_samples_leaf: int = 1
    mtry: int | None = None
    feature_mask: tuple[bool, ...] | None = None

    def resolve(self, n_features: int) -> "HyperParams":
        mask = self.feature_mask
        if mask is None:
            mask = tuple([True] * n_features)
        mtry = self.mtry
        if mtry is None:
            mtry = max(1, int(math.sqrt(sum(mask))))
        resolved = replace(self, mtry=mtry, feature_mask=tuple(bool(b) for b in mask))
        resolved.validate(n_features)
        return resolved

    def validate(self, n_features: int) -> None:
        if self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if self.split_criterion not in CRITERIA:
            raise ConfigError(f"unknown split criterion {self.split_criterion!r}")
        if self.feature_mask is not None:
            if len(self.feature_mask) != n_features:
                raise ConfigError(
                    f"feature_mask has {len(self.feature_mask)} entries, data has {n_features}"
                )
            active = sum(self.feature_mask)
            if active < 1:
                raise ConfigError("feature_mask must keep at least one feature")
            if self.mtry is not None and self.mtry > active:
                raise ConfigError("mtry exceeds the number of active features")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigError("mtry must be >= 1")


@dataclass
class Tree:
    """One trained CART tree as parallel node arrays."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    n1: np.ndarray
    n2: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    def leaf_label(self, i: int) -> int:
        return 2 if self.n2[i] > self.n1[i] else 1

    def max_path_length(self) -> int:
        """Longest root-to-leaf path, in edges."""
        best = 0
        stack = [(0, 0)]
        while stack:
            node, depth = stack.pop()
            if self.is_leaf(node):
                best = max(best, depth)
            else:
                stack.append((self.left[node], depth + 1))
                stack.append((self.right[node], depth + 1))
        return best

    def leaf_sizes(self) -> list[int]:
        return [
            int(self.n1[i] + self.n2[i])
            for i in range(self.n_nodes)
            if self.is_leaf(i)
        ]

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def to_dict(self) -> dict:
        def node(i: int) -> dict:
            if self.is_leaf(i):
                return {
                    "counts": {"1": int(self.n1[i]), "2": int(self.n2[i])},
                    "label": self.leaf_label(i),
                }
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "left": node(int(self.left[i])),
                "right": node(int(self.right[i])),
            }

        return node(0)

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        feature, threshold, left, right, n1, n2 = [], [], [], [], [], []

        def build(nd: dict) -> int:
            slot = len(feature)
            if "label" in nd:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                n1.append(int(nd["counts"]["1"]))
                n2.append(int(nd["counts"]["2"]))
                return slot
            feature.append(int(nd["feature"]))
            threshold.append(float(nd["threshold"]))
            left.append(-1)
            right.append(-1)
            n1.append(0)
            n2.append(0)
            left[slot] = build(nd["left"])
            right[slot] = build(nd["right"])
            return slot

        try:
            build(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed tree node: {exc}") from exc
        return cls(
            feature=np.array(feature, dtype=np.int32),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int32),
            right=np.array(right, dtype=np.int32),
            n1=np.array(n1, dtype=np.int64),
            n2=np.array(n2, dtype=np.int64),
        )


@dataclass
class Forest:
    trees: list[Tree]
    params: HyperParams
    training_seed: int
    n_features: int


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 counts indexed [actual][predicted] over the labels {1, 2}."""

    counts: tuple[tuple[int, int], tuple[int, int]]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def to_lists(self) -> list[list[int]]:
        return [list(row) for row in self.counts]


def impurity(labels: Sequence[int], criterion: str = "gini") -> float:
    """Gini (1 - sum p^2) or entropy (-sum p log2 p) of a label multiset."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise DataError("impurity of an empty label multiset is undefined")
    if criterion not in CRITERIA:
        raise ConfigError(f"unknown split criterion {criterion!r}")
    m = labels.size
    c2 = int(np.count_nonzero(labels == 2))
    c1 = m - c2
    if criterion == "gini":
        return 1.0 - (c1 * c1 + c2 * c2) / (float(m) * float(m))
    e = 0.0
    for c in (c1, c2):
        if c > 0:
            p = c / m
            e -= p * math.log2(p)
    return e


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    candidate_features: Sequence[int],
    criterion: str = "gini",
    min_samples_leaf: int = 1,
):
    """Exhaustive midpoint scan; None when no split has positive gain.

    Ties resolve to the lowest feature index, then the lowest threshold.
    """
    if len(candidate_features) == 0:
        raise ConfigError("candidate_features must be non-empty")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y01 = _labels01(np.asarray(y))
    rows = np.arange(X.shape[0], dtype=np.int64)
    return backend.best_split(
        X, y01, rows, list(candidate_features), CRITERIA[criterion], min_samples_leaf
    )


def bootstrap_sample(n: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform draws with replacement from [0, n)."""
    if n < 1:
        raise ConfigError("bootstrap size must be >= 1")
    return rng.integers(0, n, size=n)


def _labels01(y: np.ndarray) -> np.ndarray:
    bad = set(np.unique(y)) - {1, 2}
    if bad:
        raise DataError(f"labels must be 1 or 2, got {sorted(bad)}")
    return (y == 2).astype(np.uint8)


def _grow_one(X, y01, active, params: HyperParams, seed_seq, bootstrap: bool) -> Tree:
    n = X.shape[0]
    rng = np.random.default_rng(seed_seq)
    rows = bootstrap_sample(n, rng) if bootstrap else np.arange(n, dtype=np.int64)
    feat_seed = int(rng.integers(0, 2**63, dtype=np.int64))
    arrays = backend.grow_tree(
        X,
        y01,
        rows,
        active,
        params.mtry,
        min(params.max_depth, n),
        params.min_samples_leaf,
        CRITERIA[params.split_criterion],
        feat_seed,
    )
    return Tree(*arrays)


def fit(
    X: np.ndarray,
    y: np.ndarray,
    params: HyperParams,
    seed: int,
    *,
    bootstrap: bool = True,
    threads: int = 1,
) -> Forest:
    """Train a bagged forest; bit-identical results for any thread count."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training matrix must be 2-D and non-empty")
    y = np.asarray(y)
    if y.shape[0] != X.shape[0]:
        raise DataError("feature matrix and labels disagree in length")
    resolved = params.resolve(X.shape[1])
    if X.shape[0] < resolved.min_samples_leaf:
        raise ConfigError("training set smaller than min_samples_leaf")
    y01 = _labels01(y)
    active = np.flatnonzero(np.asarray(resolved.feature_mask)).astype(np.int32)

    children = np.random.SeedSequence(seed).spawn(resolved.n_trees)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(
                pool.map(
                    lambda ss: _grow_one(X, y01, active, resolved, ss, bootstrap),
                    children,
                )
            )
    else:
        trees = [_grow_one(X, y01, active, resolved, ss, bootstrap) for ss in children]
    return Forest(trees=trees, params=resolved, training_seed=seed, n_features=X.shape[1])


def _votes2(forest: Forest, X: np.ndarray) -> np.ndarray:
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for t in forest.trees:
        votes += backend.predict_tree(X, t.feature, t.threshold, t.left, t.right, t.n1, t.n2)
    return votes


def predict(forest: Forest, X: np.ndarray) -> np.ndarray:
    """Majority vote over trees; exact ties go to the lower label 1."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise DataError(
            f"expected {forest.n_features} feature columns, got {X.shape[1] if X.ndim == 2 else 'non-matrix'}"
        )
    votes2 = _votes2(forest, X)
    return np.where(2 * votes2 > len(forest.trees), 2, 1).astype(np.int64)


def predict_row(forest: Forest, row: Sequence[float]) -> int:
    return int(predict(forest, np.asarray(row, dtype=np.float64).reshape(1, -1))[0])


def evaluate(forest: Forest, X: np.ndarray, y: np.ndarray) -> tuple[ConfusionMatrix, float]:
    """Confusion matrix (actual x predicted) and accuracy = trace / total."""
    y = np.asarray(y)
    if y.size == 0:
        raise DataError("cannot evaluate on an empty dataset")
    preds = predict(forest, X)
    flat = (y - 1) * 2 + (preds - 1)
    counts = np.bincount(flat, minlength=4).reshape(2, 2)
    cm = ConfusionMatrix(tuple(tuple(int(v) for v in row) for row in counts))
    accuracy = float(np.trace(counts) / counts.sum())
    return cm, accuracy


def forest_to_dict(forest: Forest) -> dict:
    p = forest.params
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "n_features": forest.n_features,
        "training_seed": forest.training_seed,
        "params": {
            "n_trees": p.n_trees,
            "max_depth": p.max_depth,
            "split_criterion": p.split_criterion,
            "min_samples_leaf": p.min_samples_leaf,
            "mtry": p.mtry,
            "feature_mask": list(p.feature_mask),
        },
        "trees": [t.to_dict() for t in forest.trees],
    }


def forest_from_dict(doc: dict) -> Forest:
    try:
        if doc["format_version"] != MODEL_FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format {doc['format_version']!r}")
        p = doc["params"]
        params = HyperParams(
            n_trees=int(p["n_trees"]),
            max_depth=int(p["max_depth"]),
            split_criterion=p["split_criterion"],
            min_samples_leaf=int(p["min_samples_leaf"]),
            mtry=int(p["mtry"]),
            feature_mask=tuple(bool(b) for b in p["feature_mask"]),
        )
        trees = [Tree.from_dict(t) for t in doc["trees"]]
        n_features = int(doc["n_features"])
        seed = int(doc["training_seed"])
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    if len(trees) != params.n_trees:
        raise ModelFormatError("tree count disagrees with n_trees")
    return Forest(trees=trees, params=params, training_seed=seed, n_features=n_features)


def save_forest(forest: Forest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(forest_to_dict(forest), fh)


def load_forest(path) -> Forest:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not valid JSON: {exc}") from exc
    return forest_from_dict(doc)
