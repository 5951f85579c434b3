import numpy as np
import pytest

from conftest import synthetic_problem
from ltsmio.core import Tolerances
from ltsmio.problem import iter_subsets
from ltsmio.relax.node import NodeState, RelaxationResult
from ltsmio.relax.perspective import solve_perspective_relaxation
from ltsmio.relax.tuning import node_weight_system, round_heuristic, round_z, tune_conic_plus
from ltsmio.relax.weights import initial_weights, psd_margin


def fake_relaxation(z):
    z = np.asarray(z, float)
    return RelaxationResult(np.zeros(1), z, np.zeros_like(z), 0.0, 0.0, 0, True)


class TestRounding:
    def test_ties_to_lower_index(self):
        P, _, _ = synthetic_problem(1, 5, 0.2, 0, budget=2)
        z = round_z(np.array([0.5, 0.9, 0.5, 0.5, 0.1]), NodeState.root(P))
        np.testing.assert_array_equal(z, [1, 1, 0, 0, 0])

    def test_binary_input(self):
        P, _, _ = synthetic_problem(2, 8, 0.2, 1, budget=1)
        zb = np.zeros(8)
        zb[3] = 1
        sol = round_heuristic(fake_relaxation(zb), P)
        np.testing.assert_array_equal(sol.z, zb)
        assert sol.objective == pytest.approx(P.ridge(zb < 0.5)[1])

    def test_budget_zero(self):
        P, _, _ = synthetic_problem(2, 8, 0.0, 1, budget=0)
        sol = round_heuristic(fake_relaxation(np.full(8, 0.4)), P)
        assert sol.objective == pytest.approx(P.ridge(np.ones(8, bool))[1])

    def test_respects_fixings(self):
        P, _, _ = synthetic_problem(2, 8, 0.2, 1, budget=2)
        node = NodeState.root(P).fix(0, 1).fix(1, 0)
        z = round_z(np.array([0.0, 1.0, 0.2, 0.9, 0.1, 0.0, 0.0, 0.0]), node)
        np.testing.assert_array_equal(z, [1, 0, 0, 1, 0, 0, 0, 0])

    @pytest.mark.parametrize("seed", range(4))
    def test_upper_bound(self, seed):
        P, _, _ = synthetic_problem(2, 8, 0.25, seed, budget=2)
        rel = solve_perspective_relaxation(P, initial_weights(P))
        best = min(P.ridge(~np.isin(np.arange(8), S))[1] for S in iter_subsets(np.arange(8), 2))
        assert round_heuristic(rel, P).objective >= best - 1e-12


@pytest.fixture(scope="module")
def run():
    P, _, _ = synthetic_problem(2, 10, 0.2, 4, lam=0.05)
    return P, tune_conic_plus(P)


class TestTuneConicPlus:
    def test_traces_monotone(self, run):
        _, tr = run
        assert np.all(np.diff(tr.lb_trace) >= 0)
        assert np.all(np.diff(tr.ub_trace) <= 0)
        assert tr.lb_trace[-1] <= tr.ub_trace[-1] + 1e-10

    def test_stall_rule_fires(self, run):
        _, tr = run
        assert tr.stalled
        assert tr.iterations <= Tolerances().alg1_max_iter

    def test_improves_on_initial_weights(self, run):
        P, tr = run
        lb0 = solve_perspective_relaxation(P, initial_weights(P)).certified_lb
        assert tr.best_lb >= lb0 - 1e-8
        lb1 = solve_perspective_relaxation(P, tr.d).certified_lb
        assert max(lb1, tr.best_lb) >= lb0 - 1e-8

    def test_weights_valid(self, run):
        P, tr = run
        assert psd_margin(P, tr.d.d) >= -1e-8

    def test_iteration_cap(self):
        P, _, _ = synthetic_problem(2, 10, 0.2, 4, lam=0.05)
        tr = tune_conic_plus(P, max_iter=3)
        assert tr.iterations == 3 and not tr.stalled

    def test_leaf_returns_initial(self):
        P, _, _ = synthetic_problem(2, 10, 0.0, 4, budget=0)
        tr = tune_conic_plus(P)
        assert tr.iterations == 0

    def test_node_system(self):
        P, _, _ = synthetic_problem(2, 10, 0.2, 4)
        node = NodeState.root(P).fix(0, 0).fix(1, 1)
        rows, Q = node_weight_system(P, node)
        np.testing.assert_array_equal(rows, np.arange(2, 10))
        np.testing.assert_allclose(Q, P.R + np.outer(P.A[0], P.A[0]))
        tr = tune_conic_plus(P, node=node, max_iter=5)
        assert psd_margin(P, tr.d.d, rows, Q) >= -1e-8
