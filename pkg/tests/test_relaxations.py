from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from conftest import raw_instance, synthetic_problem
from ltsmio.core import ProblemSpec
from ltsmio.errors import InvalidWeightsError
from ltsmio.hulls import build_hull_term, hull_term_value
from ltsmio.problem import build_problem, iter_subsets
from ltsmio.relax.bigm import solve_bigM_relaxation
from ltsmio.relax.node import NodeState
from ltsmio.relax.perspective import objective_generic, solve_perspective_relaxation
from ltsmio.relax.weights import initial_weights

# reference values from an interior-point conic solver (Clarabel via cvxpy)
PERSPECTIVE_ROOT = 0.11121093381380
PERSPECTIVE_NODE = 0.20241128028654
BIGM_ROOT = {0.1: 0.69178346499616, 0.5: 0.21205814446716}


@pytest.fixture(scope="module")
def small():
    P, _, _ = synthetic_problem(2, 10, 0.2, 5, lam=0.1, budget=2)
    return P


def binary_completions(P, node=None):
    node = node or NodeState.root(P)
    base = node.status == 1
    for S in iter_subsets(node.free, node.remaining_budget):
        z = base.astype(float)
        z[list(S)] = 1.0
        yield P.ridge(z < 0.5)[1]


class TestObjectiveGeneric:
    def test_binary_identity(self, small, rng):
        d = initial_weights(small).d
        for _ in range(20):
            x = rng.normal(size=small.p)
            z = (rng.uniform(size=small.m) < 0.3).astype(float)
            w = np.where(z > 0, rng.normal(size=small.m), 0.0)
            expected = np.sum((small.y + w - small.A @ x) ** 2) + x @ small.R @ x
            assert objective_generic(d, x, z, w, small) == pytest.approx(expected, rel=1e-10)

    def test_matches_hull_terms(self, small, rng):
        d = initial_weights(small)
        share = small.Q_reg / small.m
        terms = [build_hull_term(share, small.A[i], small.y[i]) for i in range(small.m)]
        np.testing.assert_allclose([t.weight for t in terms], d.d, rtol=1e-12)
        for _ in range(20):
            x, w = rng.normal(size=small.p), rng.normal(size=small.m)
            z = rng.uniform(0.05, 1.0, size=small.m)
            total = sum(hull_term_value(t, x, w[i], z[i]) for i, t in enumerate(terms))
            assert objective_generic(d, x, z, w, small) == pytest.approx(total, rel=1e-8)

    def test_all_flagged(self, small):
        # every residual absorbed and 1/z - 1 = 0: the quadratic form cancels exactly
        d = initial_weights(small).d
        val = objective_generic(d, np.zeros(small.p), np.ones(small.m), -small.y, small)
        assert val == pytest.approx(0.0, abs=1e-14)

    def test_infinity_sentinel(self, small):
        d = initial_weights(small).d
        w = np.zeros(small.m)
        w[0] = 1.0
        assert objective_generic(d, np.zeros(small.p), np.zeros(small.m), w, small) == np.inf

    def test_binary_exactness_after_w(self, small, rng):
        # minimizing over w on flagged rows gives the trimmed objective
        d = initial_weights(small).d
        x = rng.normal(size=small.p)
        z = np.zeros(small.m)
        z[[1, 4]] = 1
        w = np.where(z > 0, -(small.y - small.A @ x), 0.0)
        assert objective_generic(d, x, z, w, small) == pytest.approx(small.objective(x, z), rel=1e-10)


class TestPerspectiveRelaxation:
    def test_reference_root(self, small):
        res = solve_perspective_relaxation(small, initial_weights(small))
        assert res.converged
        assert res.value == pytest.approx(PERSPECTIVE_ROOT, rel=1e-9)
        assert res.certified_lb <= res.value + 1e-10
        assert res.certified_lb == pytest.approx(PERSPECTIVE_ROOT, rel=1e-8)

    def test_reference_node(self, small):
        node = NodeState.root(small).fix(0, 0).fix(3, 1)
        res = solve_perspective_relaxation(small, initial_weights(small), node)
        assert res.value == pytest.approx(PERSPECTIVE_NODE, rel=1e-9)
        assert res.z[3] == 1.0 and res.z[0] == 0.0 and res.w[0] == 0.0
        assert res.z.sum() <= 2 + 1e-9

    def test_value_is_objective(self, small):
        d = initial_weights(small)
        res = solve_perspective_relaxation(small, d)
        assert objective_generic(d, res.x, res.z, res.w, small) == pytest.approx(res.value, rel=1e-9)

    def test_budget_zero_is_ridge(self, small):
        node = NodeState(np.zeros(small.m, dtype=np.int8), 0)
        res = solve_perspective_relaxation(small, initial_weights(small), node)
        assert res.value == pytest.approx(small.ridge(np.ones(small.m, bool))[1])
        np.testing.assert_array_equal(res.z, 0.0)

    def test_symmetric_pair(self):
        inst = raw_instance(np.array([[1.0], [1.0]]), np.array([1.0, -1.0]))
        P = build_problem(inst, ProblemSpec(lam=1.0, budget=1))
        res = solve_perspective_relaxation(P, np.full(2, 0.3))
        np.testing.assert_allclose(res.z, [0.5, 0.5], atol=1e-8)
        # 1-D grid oracle over z1 with z2 = 1 - z1 and x = 0 by symmetry
        zs = np.linspace(0, 1, 100001)
        rho = lambda z: 0.3 * (1 - z) / (0.3 + 0.7 * z)
        grid = np.min(rho(zs) + rho(1 - zs))
        assert res.value == pytest.approx(grid, abs=1e-9)

    @pytest.mark.parametrize("seed", range(6))
    def test_bound_below_completions(self, seed):
        P, _, _ = synthetic_problem(2, 9, 0.2, seed, lam=0.05, budget=3)
        res = solve_perspective_relaxation(P, initial_weights(P))
        assert res.certified_lb <= min(binary_completions(P)) + 1e-10

    def test_child_bounds_monotone(self, small):
        d = initial_weights(small)
        parent = NodeState.root(small)
        lb = solve_perspective_relaxation(small, d, parent).certified_lb
        for i in range(small.m):
            for v in (0, 1):
                child = solve_perspective_relaxation(small, d, parent.fix(i, v))
                assert child.certified_lb >= lb - 1e-8

    def test_rejects_zero_weight(self, small):
        d = initial_weights(small).d.copy()
        d[2] = 0.0
        with pytest.raises(InvalidWeightsError):
            solve_perspective_relaxation(small, d)

    def test_free_z_floor(self, small):
        res = solve_perspective_relaxation(small, initial_weights(small))
        assert np.all(res.z >= 0) and np.all(res.z <= 1)


class TestBigMRelaxation:
    @pytest.mark.parametrize("M", [0.1, 0.5])
    def test_reference(self, small, M):
        res = solve_bigM_relaxation(small, M)
        assert res.converged
        assert res.value == pytest.approx(BIGM_ROOT[M], rel=1e-9)
        assert res.certified_lb <= res.value + 1e-10
        assert np.all(np.abs(res.w) <= M * res.z + 1e-12)

    def test_root_is_trivial(self):
        P, _, _ = synthetic_problem(3, 30, 0.2, 0)
        res = solve_bigM_relaxation(P, 1000.0)
        assert res.value <= 1e-8
        assert res.certified_lb <= 1e-8
        # x = 0 with a uniform z at budget / m is also optimal
        z = np.full(P.m, P.budget / P.m)
        assert np.all(np.abs(P.y) <= 1000.0 * z)

    def test_all_kept_is_ridge(self, small):
        node = NodeState(np.full(small.m, -1, dtype=np.int8), 2)
        res = solve_bigM_relaxation(small, 1000.0, node)
        assert res.value == pytest.approx(small.ridge(np.ones(small.m, bool))[1], rel=1e-10)

    @pytest.mark.parametrize("seed", range(6))
    def test_bound_below_completions(self, seed):
        P, _, _ = synthetic_problem(2, 9, 0.2, seed, lam=0.05, budget=3, method="big-m")
        node = NodeState.root(P).fix(0, 0).fix(1, 1)
        res = solve_bigM_relaxation(P, 1.0, node)
        assert res.certified_lb <= min(binary_completions(P, node)) + 1e-10

    def test_rejects_bad_M(self, small):
        with pytest.raises(ValueError):
            solve_bigM_relaxation(small, 0.0)


class TestRelaxationProperties:
    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6), st.integers(1, 3), st.floats(0.02, 1.0))
    def test_certificates(self, seed, budget, lam):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(7, 2))
        y = A @ rng.normal(size=2) + rng.standard_t(2, size=7)
        P = build_problem(raw_instance(A, y), ProblemSpec(lam=lam, budget=budget))
        best = min(P.ridge(~np.isin(np.arange(7), S))[1] for S in iter_subsets(np.arange(7), budget))
        for rel in (solve_perspective_relaxation(P, initial_weights(P)), solve_bigM_relaxation(P)):
            assert rel.certified_lb <= rel.value + 1e-10
            assert rel.certified_lb <= best + 1e-10
            assert rel.z.sum() <= budget + 1e-9
            assert np.all((rel.z >= -1e-12) & (rel.z <= 1 + 1e-12))
