import numpy as np
import pytest

from conftest import raw_instance, synthetic_problem
from ltsmio.core import ProblemSpec
from ltsmio.heuristics import alt_opt, alt_opt_problem, lad, ls_l2
from ltsmio.problem import build_problem
from ltsmio.solver import enumerate_oracle, enumerate_problem


class TestLsL2:
    def test_scalar_normal_equation(self):
        inst = raw_instance(np.array([[1.0], [0.0], [-1.0]]), np.array([1.0, 0.0, -1.0]))
        sol = ls_l2(inst, 1.0)
        assert sol.x[0] == pytest.approx(2 / 3)
        np.testing.assert_array_equal(sol.z, 0)

    def test_exact_fit(self, rng):
        A = rng.normal(size=(20, 3))
        x = np.array([1.0, -2.0, 0.5])
        sol = ls_l2(raw_instance(A, A @ x), 1e-10)
        np.testing.assert_allclose(sol.x, x, atol=1e-8)

    def test_heavy_penalty(self, rng):
        A = rng.normal(size=(20, 3))
        sol = ls_l2(raw_instance(A, rng.normal(size=20)), 1e9)
        assert np.linalg.norm(sol.x) < 1e-7


class TestLad:
    def test_median(self, rng):
        y = rng.normal(size=7)
        sol, ok = lad(raw_instance(np.ones((7, 1)), y))
        assert ok
        assert sol.x[0] == pytest.approx(np.median(y), abs=1e-9)

    def test_residual_free(self, rng):
        A = rng.normal(size=(10, 2))
        sol, _ = lad(raw_instance(A, A @ np.array([0.3, 2.0])))
        assert sol.objective == pytest.approx(0.0, abs=1e-9)

    def test_grid_oracle(self):
        a = np.array([1.0, 2.0, -1.0, 0.5, 3.0])
        y = np.array([2.0, 3.5, -2.5, 0.0, 9.0])
        sol, _ = lad(raw_instance(a[:, None], y))
        grid = np.linspace(-5, 5, 1000001)
        oracle = np.min(np.abs(y[:, None] - a[:, None] * grid[None, :]).sum(axis=0))
        assert sol.objective == pytest.approx(oracle, abs=1e-4)

    def test_beats_ridge_l1(self, rng):
        A = rng.normal(size=(30, 3))
        y = rng.standard_t(2, size=30)
        inst = raw_instance(A, y)
        sol, _ = lad(inst)
        xr = ls_l2(inst, 0.0).x
        assert sol.objective <= np.abs(y - A @ xr).sum() + 1e-9

    def test_intercept(self, rng):
        A = rng.normal(size=(15, 2))
        sol, _ = lad(raw_instance(A, A @ np.array([1.0, 1.0]) + 4.0), intercept_mode="proxy")
        assert sol.intercept == pytest.approx(4.0, abs=1e-8)

    def test_needs_more_rows(self):
        with pytest.raises(ValueError):
            lad(raw_instance(np.eye(2), np.ones(2)))


class TestAltOpt:
    def test_budget_zero_is_ridge(self):
        P, inst, spec = synthetic_problem(2, 12, 0.0, 0, budget=0)
        sol = alt_opt(inst, spec)
        np.testing.assert_allclose(sol.x, ls_l2(inst, spec.lam).x)

    def test_six_points(self):
        a = np.array([-2.0, -1.0, 0.0, 1.0, 2.0, 0.5])
        y = a.copy()
        y[5] = 10.0
        inst = raw_instance(a[:, None], y)
        spec = ProblemSpec(lam=0.01, budget=1)
        sol, trace = alt_opt_problem(build_problem(inst, spec))
        assert len(trace) <= 2
        np.testing.assert_array_equal(sol.discarded, [5])


        assert sol.objective == pytest.approx(enumerate_oracle(inst, spec).objective)

    def test_trace_nonincreasing_and_upper_bound(self):
        for seed in range(100):
            P, _, _ = synthetic_problem(2, 10, 0.3, seed)
            sol, trace = alt_opt_problem(P)
            assert np.all(np.diff(trace) <= 1e-12)
            if seed < 20:
                assert sol.objective >= enumerate_problem(P).objective - 1e-12

    def test_never_flags_reliable(self):
        P, _, _ = synthetic_problem(2, 12, 0.3, 2)
        rel = np.zeros(12, bool)
        rel[list(np.argsort(-np.abs(P.y))[:2])] = True


        Q = build_problem(raw_instance(P.A, P.y, rel), ProblemSpec(lam=0.05, budget=3))
        sol, _ = alt_opt_problem(Q)
        assert not np.any(sol.z[rel])
