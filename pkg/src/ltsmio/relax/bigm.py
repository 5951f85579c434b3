"""Continuous relaxation of the big-M formulation.

For fixed ``x`` the constraints ``|w_i| <= M z_i`` let each free row absorb
up to ``M z_i`` of its residual, so the inner problem is

    min_z  sum_i max(0, |r_i| - M z_i)^2   s.t.  sum z <= budget, 0 <= z <= 1,

solved exactly by water-filling: every partially flagged row is trimmed to a
common residual level ``t >= 0``.  The resulting value function ``psi(x)`` is
convex and piecewise quadratic; it is minimized by damped Newton and
certified through its strong convexity.
"""

import time

import numpy as np

from .node import NodeState, RelaxationResult
from .waterfill import ramp_fill

__all__ = ["solve_bigM_relaxation"]


class _BigMWorkspace:
    def __init__(self, problem, M, node):
        self.problem = problem
        self.M = float(M)
        st = node.status
        self.F = np.flatnonzero(st == 0)
        self.O = np.flatnonzero(st == 1)
        self.Z = np.flatnonzero(st == -1)
        self.B = node.remaining_budget
        A = problem.A
        self.AZ = A[self.Z]
        H = problem.R + self.AZ.T @ self.AZ
        self.mu = 2.0 * max(float(np.linalg.eigvalsh(0.5 * (H + H.T))[0]), 0.0)

    def evaluate(self, x):
        """Value, per-row trimmed residuals ``e``, signs and free ``z`` at ``x``."""
        P = self.problem
        r = P.residuals(x)
        ar = np.abs(r)
        e = ar.copy()
        z = np.zeros(P.m)
        e[self.O] = np.maximum(ar[self.O] - self.M, 0.0)
        z[self.O] = 1.0
        t = np.inf
        if self.F.size:
            aF = ar[self.F]
            zF, s = ramp_fill(-aF, self.M - aF, self.B, s_max=0.0)
            z[self.F] = zF
            e[self.F] = np.maximum(aF - self.M * zF, 0.0)
            t = -s
        val = float(e @ e + x @ P.R @ x)
        return val, e, np.sign(r), z, t

    def gradient(self, x, e, sg):
        P = self.problem
        return -2.0 * P.A.T @ (sg * e) + 2.0 * P.R @ x

    def hessian(self, e, sg, z, t):
        P = self.problem
        A = P.A
        lin = np.zeros(P.m, dtype=bool)
        lin[self.Z] = True
        lin[self.O] = e[self.O] > 0
        inner = np.zeros(P.m, dtype=bool)
        if self.F.size:
            zF = z[self.F]
            eF = e[self.F]
            at_zero = zF <= 0
            at_one = (zF >= 1) & (eF > 0)
            lin[self.F[at_zero | at_one]] = True
            if np.isfinite(t) and t > 0:
                inner[self.F[(zF > 0) & (zF < 1)]] = True
        H = 2.0 * (A[lin].T @ A[lin]) + 2.0 * P.R
        k = int(inner.sum())
        if k:
            v = A[inner].T @ sg[inner]
            H += 2.0 * np.outer(v, v) / k
        return 0.5 * (H + H.T)


def solve_bigM_relaxation(problem, M=1000.0, node=None, tol=1e-9, max_iter=200,
                          x0=None, cutoff=np.inf, deadline=None):
    """Minimize the big-M relaxation at a node.

    Parameters
    ----------
    problem : Problem
    M : float
        Bound on the residual a flagged row may absorb.
    node : NodeState, optional
    tol : float
        Relative gap between value and certified bound at which to stop.

    Returns
    -------
    RelaxationResult
        ``certified_lb = psi(x) - ||grad psi(x)||^2 / (2 mu)`` with ``mu``
        twice the smallest eigenvalue of ``R + A_Z^T A_Z``.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    if node is None:
        node = NodeState.root(problem)
    if node.remaining_budget < 0:
        raise ValueError("node exceeds the outlier budget")
    ws = _BigMWorkspace(problem, M, node)
    x = np.zeros(problem.p) if x0 is None else np.asarray(x0, float).copy()
    val, e, sg, z, t = ws.evaluate(x)
    converged = False
    lb = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = ws.gradient(x, e, sg)
        gn = float(g @ g)
        if ws.mu > 0:
            lb = val - gn / (2.0 * ws.mu)
        if val - lb <= tol * max(abs(val), 1e-12) or lb >= cutoff or gn == 0.0:
            converged = val - lb <= tol * max(abs(val), 1e-12) or gn == 0.0
            if gn == 0.0:
                lb = val
            break
        if deadline is not None and time.monotonic() > deadline:
            break
        H = ws.hessian(e, sg, z, t)
        try:
            step = -np.linalg.solve(H + 1e-14 * np.trace(H) * np.eye(problem.p), g)
        except np.linalg.LinAlgError:
            step = -g
        slope = float(g @ step)
        if slope >= 0:
            step, slope = -g, -gn
        alpha = 1.0
        moved = False
        while alpha > 1e-12:
            xc = x + alpha * step
            vc, ec, sc, zc, tc = ws.evaluate(xc)
            if vc <= val + 1e-4 * alpha * slope:
                x, val, e, sg, z, t = xc, vc, ec, sc, zc, tc
                moved = True
                break
            alpha *= 0.5
        if not moved:
            break
    w = np.zeros(problem.m)
    r = problem.residuals(x)
    absorbed = np.minimum(np.abs(r), M * z)
    w[z > 0] = -(sg * absorbed)[z > 0]
    lb = min(lb, val)
    return RelaxationResult(x, z, w, val, lb, it, converged)
