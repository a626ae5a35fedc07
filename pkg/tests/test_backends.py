"""Cross-backend consistency: the compiled kernel and the pure-Python
fallback must grow byte-identical trees and predict identically."""

import numpy as np
import pytest

from sparrowforest.forest import backend
from sparrowforest.forest import _kernel_py as kpy

compiled = pytest.importorskip(
    "sparrowforest.forest._kernel", reason="compiled kernel not built"
)


def random_case(rng):
    n = int(rng.integers(8, 300))
    X = np.ascontiguousarray(rng.uniform(0, 10, (n, 5)))
    if rng.random() < 0.5:
        X[:, :2] = np.floor(X[:, :2])  # duplicate-heavy columns
    y01 = (rng.random(n) < rng.uniform(0.2, 0.8)).astype(np.uint8)
    rows = rng.integers(0, n, n) if rng.random() < 0.5 else np.arange(n)
    return X, y01, rows


class TestKernelTwins:
    def test_constants_agree(self):
        assert compiled.GAIN_EPS == kpy.GAIN_EPS
        assert (compiled.GINI, compiled.ENTROPY) == (kpy.GINI, kpy.ENTROPY)

    @pytest.mark.parametrize("criterion", [0, 1])
    def test_best_split_identical(self, criterion):
        rng = np.random.default_rng(criterion)
        for _ in range(150):
            X, y01, _ = random_case(rng)
            rows = np.arange(X.shape[0])
            feats = [0, 1, 2, 3, 4]
            ml = int(rng.integers(1, 4))
            assert compiled.best_split(X, y01, rows, feats, criterion, ml) == kpy.best_split(
                X, y01, rows, feats, criterion, ml
            )

    def test_grown_trees_identical(self):
        rng = np.random.default_rng(9)
        for _ in range(40):
            X, y01, rows = random_case(rng)
            mtry = int(rng.integers(1, 6))
            depth = int(rng.integers(1, 20))
            ml = int(rng.integers(1, 5))
            crit = int(rng.integers(0, 2))
            seed = int(rng.integers(0, 2**62))
            active = np.arange(5, dtype=np.int32)
            a = compiled.grow_tree(X, y01, rows, active, mtry, depth, ml, crit, seed)
            b = kpy.grow_tree(X, y01, rows, active, mtry, depth, ml, crit, seed)
            for arr_a, arr_b in zip(a, b):
                assert np.array_equal(arr_a, arr_b)
            pa = compiled.predict_tree(X, *a)
            pb = kpy.predict_tree(X, *b)
            assert np.array_equal(pa, pb)

    def test_selected_backend_reported(self):
        assert backend.BACKEND in ("compiled", "python")
