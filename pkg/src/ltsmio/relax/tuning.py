"""Primal-dual tuning of the perspective weights and the rounding heuristic."""

from dataclasses import dataclass, field
import time

import numpy as np

from ..core import Tolerances
from .node import NodeState
from .perspective import solve_perspective_relaxation
from .weights import WeightVector, initial_weights, solve_weight_sdp

__all__ = ["round_heuristic", "round_z", "tune_conic_plus", "TuningResult", "node_weight_system"]


def round_z(z_bar, node):
    """Binary ``z``: flag the ``remaining_budget`` largest free entries (ties to lower index)."""
    z = (node.status == 1).astype(float)
    free = node.free
    k = min(node.remaining_budget, free.size)
    if k > 0:
        order = np.argsort(-np.asarray(z_bar, float)[free], kind="stable")
        z[free[order[:k]]] = 1.0
    return z


def round_heuristic(relax, problem, node=None):
    """Round a relaxation point and refit; returns a feasible :class:`Solution`.

    The ``Solution`` is expressed in the problem's own coordinates (intercept
    included as the last coefficient is split off by ``Problem.to_solution``).
    """
    if node is None:
        node = NodeState.root(problem)
    return problem.solution_from_z(round_z(relax.z, node))


def node_weight_system(problem, node):
    """Rows and strengthened regularizer for weight tuning at ``node``.

    Rows fixed to zero act as reliable data: their Gram matrix joins the
    regularizer and only the free rows receive tunable weights.
    """
    Az = problem.A[node.fixed_zero]
    return node.free, problem.R + Az.T @ Az


@dataclass
class TuningResult:
    d: WeightVector
    lb_trace: list
    ub_trace: list
    iterations: int
    best_lb: float
    incumbent: object
    stalled: bool
    warnings: list = field(default_factory=list)


def tune_conic_plus(problem, tolerances=None, node=None, d_init=None, deadline=None,
                    max_iter=None, rows=None, Q=None):
    """Tune perspective weights by alternating relaxations and weight SDPs.

    Each iteration solves the relaxation at the current weights, rounds it
    for an upper bound, solves the weight SDP at the relaxation point and
    moves the weights by a ``1/k`` averaged step.  Best bounds are tracked
    across iterations; the loop stops after ``stall_count`` (not necessarily
    consecutive) iterations whose gap ``UB - LB`` shrinks by less than
    ``stall_eps``, or at the iteration cap or deadline.  On standardized data
    ``||y||^2 = 1`` bounds the objective, so the absolute gap is well scaled.

    Returns
    -------
    TuningResult
        ``lb_trace`` and ``ub_trace`` hold the best-so-far bounds per iteration.
    """
    tol = tolerances or Tolerances()
    if node is None:
        node = NodeState.root(problem)
    if rows is None or Q is None:
        r0, q0 = node_weight_system(problem, node)
        rows = r0 if rows is None else rows
        Q = q0 if Q is None else Q
    rows = np.asarray(rows, dtype=int)
    max_iter = tol.alg1_max_iter if max_iter is None else max_iter
    d = np.array(initial_weights(problem, rows, Q).d if d_init is None
                 else np.asarray(getattr(d_init, "d", d_init), float))
    out = TuningResult(WeightVector(d), [], [], 0, -np.inf, None, False)
    if node.is_leaf() or rows.size == 0:
        return out
    best_lb, best_ub = -np.inf, np.inf
    prev_gap = np.inf
    small = 0
    x0 = None
    for k in range(1, max_iter + 1):
        if deadline is not None and time.monotonic() > deadline:
            out.warnings.append("weight tuning stopped at the time limit")
            break
        rel = solve_perspective_relaxation(problem, d, node, tol=tol.relax_tol, x0=x0,
                                           deadline=deadline)
        x0 = rel.x
        sol = round_heuristic(rel, problem, node)
        if rel.certified_lb > best_lb:
            best_lb = rel.certified_lb
        if sol.objective < best_ub:
            best_ub = sol.objective
            out.incumbent = sol
        out.lb_trace.append(best_lb)
        out.ub_trace.append(best_ub)
        out.iterations = k
        gap = best_ub - best_lb
        if prev_gap - gap < tol.stall_eps:
            small += 1
        prev_gap = gap
        if small >= tol.stall_count:
            out.stalled = True
            break
        if gap <= 0:
            break
        wv, info = solve_weight_sdp(problem, rel.z, rel.w, rows=rows, Q=Q, u_floor=tol.u_floor,
                                    tol_psd=tol.psd_tol, coef_floor=tol.coef_floor,
                                    z_floor=tol.z_floor, deadline=deadline)
        for msg in info.warnings:
            if msg not in out.warnings:
                out.warnings.append(msg)
        d[rows] += (wv.d[rows] - d[rows]) / k
    out.d = WeightVector(d)
    out.best_lb = best_lb
    return out
