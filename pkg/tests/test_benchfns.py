import numpy as np
import pytest

from sparrowforest import benchfns as bf
from sparrowforest.errors import ConfigError


class TestObjectives:
    @pytest.mark.parametrize("make", bf.DEFAULT_OBJECTIVES)
    @pytest.mark.parametrize("dim", [2, 5, 10])
    def test_known_minimum_at_argmin(self, make, dim):
        obj = make(dim)
        assert obj.evaluate(obj.known_argmin) == pytest.approx(obj.known_minimum, abs=1e-12)

    def test_point_values(self):
        assert bf.sphere(np.zeros(4)) == 0.0
        assert bf.rastrigin(np.zeros(6)) == 0.0
        assert bf.rosenbrock(np.ones(3)) == 0.0
        assert bf.sphere(np.array([3.0, 4.0])) == 25.0

    def test_dimension_mismatch(self):
        obj = bf.make_sphere(4)
        with pytest.raises(ConfigError):
            obj.evaluate(np.zeros(3))

    def test_bounds_conventions(self):
        assert bf.make_sphere(2).space.lower[0] == -5.12
        assert bf.make_ackley(2).space.upper[0] == 32.768
        assert bf.make_rosenbrock(2).space.lower[0] == -5.0
        assert bf.make_rosenbrock(2).space.upper[0] == 10.0


class TestBudgetMatching:
    def test_planned_counts_match_actual(self):
        budget = 400
        obj = bf.make_sphere(3)
        for runner in (
            bf.make_ssa_runner(budget, 8),
            bf.make_issa_runner(budget, 8, restarts=2),
            bf.make_random_runner(budget),
        ):
            _, _, trace = runner(obj, seed=0)
            assert trace.evaluations == runner.planned_evaluations
            assert abs(trace.evaluations - budget) <= 0.01 * budget

    def test_budget_mismatch_is_config_error(self):
        class Bad(bf.Runner):
            def __init__(self):
                super().__init__("bad", 999999, lambda o, s: None)

        with pytest.raises(ConfigError):
            bf.run_suite([Bad()], [bf.make_sphere(2)], [0], budget=100)


class TestRunSuite:
    def test_single_cell(self, tmp_path):
        rows, summary = bf.run_suite(
            [bf.make_random_runner(50)], [bf.make_sphere(2)], [7], budget=50, trace_dir=tmp_path
        )
        assert len(rows) == 1
        r = rows[0]
        assert (r.optimizer, r.objective, r.seed, r.evaluations) == ("random", "sphere", 7, 50)
        assert summary[("random", "sphere")]["median"] == r.final_best
        assert (tmp_path / "trace_random_sphere_7.csv").exists()

    def test_deterministic_given_seeds(self):
        args = ([bf.make_ssa_runner(90, 6)], [bf.make_sphere(3)], [0, 1, 2], 90)
        rows_a, _ = bf.run_suite(*args)
        rows_b, _ = bf.run_suite(*args)
        assert [r.final_best for r in rows_a] == [r.final_best for r in rows_b]

    def test_metaheuristics_beat_random_search(self):
        budget = 6 * 26
        runners = [
            bf.make_ssa_runner(budget, 6),
            bf.make_issa_runner(budget, 6, restarts=2),
            bf.make_random_runner(budget),
        ]
        rows, summary = bf.run_suite(runners, [bf.make_sphere(5)], list(range(10)), budget)
        assert summary[("ssa", "sphere")]["median"] <= summary[("random", "sphere")]["median"]
        assert summary[("issa", "sphere")]["median"] <= summary[("random", "sphere")]["median"]

    def test_results_csv(self, tmp_path):
        rows, _ = bf.run_suite([bf.make_random_runner(30)], [bf.make_sphere(2)], [1], budget=30)
        path = tmp_path / "results.csv"
        bf.write_results_csv(rows, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "optimizer,objective,dimension,seed,final_best,evaluations"
        assert lines[1].startswith("random,sphere,2,1,")
