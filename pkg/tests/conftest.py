"""Shared fixtures, plus an always-on optimizer-trace validator.

Every call to ssa.optimize or issa.ils_optimize made anywhere in the test
run has its trace checked on the spot: best-so-far must be non-increasing,
the best position must lie inside the search box, and the evaluation count
must be positive. Violations fail the calling test immediately; the
acceptance suite additionally asserts that a healthy number of traces went
through the validator.
"""

import numpy as np
import pytest

from sparrowforest import issa as issa_mod
from sparrowforest import ssa as ssa_mod
from sparrowforest.dataset import make_synthetic_dataset

TRACE_REGISTRY = {"checked": 0, "violations": []}


def _validate_trace(space, best_pos, best_fit, trace):
    problems = []
    curve = trace.best_so_far
    if any(b > a for a, b in zip(curve, curve[1:])):
        problems.append("best_so_far increased")
    if not space.contains(np.asarray(best_pos)):
        problems.append("best position escaped the bounds")
    if trace.evaluations <= 0:
        problems.append("no evaluations recorded")
    if trace.rounds is not None and len(trace.rounds) != len(curve):
        problems.append("round markers out of sync with the curve")
    TRACE_REGISTRY["checked"] += 1
    if problems:
        TRACE_REGISTRY["violations"].append(problems)
        raise AssertionError(f"optimizer trace invariants violated: {problems}")


@pytest.fixture(autouse=True, scope="session")
def _trace_validator():
    real_optimize = ssa_mod.optimize
    real_ils = issa_mod.ils_optimize

    def checked_optimize(fitness_fn, space, config):
        pos, fit, trace = real_optimize(fitness_fn, space, config)
        _validate_trace(space, pos, fit, trace)
        return pos, fit, trace

    def checked_ils(fitness_fn, space, config):
        pos, fit, trace = real_ils(fitness_fn, space, config)
        _validate_trace(space, pos, fit, trace)
        return pos, fit, trace

    ssa_mod.optimize = checked_optimize
    issa_mod.ils_optimize = checked_ils
    yield
    ssa_mod.optimize = real_optimize
    issa_mod.ils_optimize = real_ils


@pytest.fixture(scope="session")
def synthetic_2000():
    return make_synthetic_dataset(2000, seed=7, label_noise=0.1)


@pytest.fixture(scope="session")
def synthetic_small():
    return make_synthetic_dataset(300, seed=3, label_noise=0.05)
