"""Continuous relaxation of the perspective (conic) formulations.

For perspective weights ``d`` the relaxation objective is

    ||y||^2 - 2 y^T (A x - w) + [x; w]^T Sigma [x; w] + sum_i d_i w_i^2 / z_i
      = sum_i (y_i + w_i - a_i^T x)^2 + x^T R x + sum_i d_i w_i^2 (1/z_i - 1).

Minimizing over ``w`` in closed form leaves

    G(x, z) = sum_i rho_i(z_i) r_i(x)^2 + x^T R x,
    rho_i(z) = d_i (1 - z) / (d_i + z (1 - d_i)),

which is jointly convex.  For fixed ``x`` the budgeted minimization over
``z`` is an exact water-filling; the remaining function of ``x`` (dimension
``p <= 21``) is minimized by damped Newton.  Lower bounds are certified by
linearizing the convex value function ``phi(z) = min_x G(x, z)`` at the
current ``z`` and minimizing the linearization over the feasible z-set.
"""

import time

import numpy as np

from ..errors import InvalidWeightsError
from .node import NodeState, RelaxationResult
from .waterfill import ramp_fill

__all__ = [
    "objective_generic",
    "solve_perspective_relaxation",
    "rho",
    "lower_bound_at",
]


def objective_generic(d, x, z, w, problem):
    """Relaxation objective written with the assembled quadratic form.

    Returns ``inf`` when some ``z_i = 0`` carries ``w_i != 0`` with ``d_i > 0``.
    """
    from .weights import sigma_matrix

    d = np.asarray(getattr(d, "d", d), dtype=float)
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    w = np.asarray(w, float)
    y = problem.y
    xw = np.concatenate([x, w])
    val = float(y @ y - 2.0 * y @ (problem.A @ x - w) + xw @ sigma_matrix(problem, d) @ xw)
    for di, zi, wi in zip(d, z, w):
        if di == 0 or wi == 0:
            continue
        if zi <= 0:
            return np.inf
        val += di * wi * wi / zi
    return val


def rho(d, z):
    """Weight of a squared residual after minimizing out ``w``."""
    return d * (1.0 - z) / (d + z * (1.0 - d))


def _z_of_x(q, d, budget):
    """Exact budgeted minimizer of ``sum_i rho_i(z_i) q_i`` over ``z in [0,1]``.

    Interior optimality reads ``d q / (d + z (1 - d))^2 = mu``, i.e. ``z`` is a
    ramp in ``s = mu^{-1/2}`` from ``sqrt(d/q)`` to ``1/sqrt(d q)``.
    """
    with np.errstate(divide="ignore"):
        sq = np.sqrt(d * q)
        lo = np.where(q > 0, np.sqrt(d) / np.sqrt(np.where(q > 0, q, 1.0)), np.inf)
        hi = np.where(q > 0, 1.0 / np.where(sq > 0, sq, 1.0), np.inf)
    z, s = ramp_fill(lo, hi, budget)
    return z, s


class _Workspace:
    """Row partition and cached arrays for one node."""

    def __init__(self, problem, d, node):
        self.problem = problem
        st = node.status
        self.F = np.flatnonzero(st == 0)
        self.O = np.flatnonzero(st == 1)
        self.Z = np.flatnonzero(st == -1)
        self.B = node.remaining_budget
        self.d = np.asarray(d, dtype=float)
        self.dF = self.d[self.F]
        if self.F.size and np.any(self.dF <= 0):
            raise InvalidWeightsError("free rows need strictly positive weights")
        self.AF = problem.A[self.F]
        self.yF = problem.y[self.F]
        self.AZ = problem.A[self.Z]
        self.yZ = problem.y[self.Z]
        self.HZ = self.AZ.T @ self.AZ + problem.R
        self.bZ = self.AZ.T @ self.yZ

    def z_free(self, x):
        r = self.yF - self.AF @ x
        z, s = _z_of_x(r * r, self.dF, self.B)
        return z, s, r

    def psi(self, x):
        z, s, r = self.z_free(x)
        rZ = self.yZ - self.AZ @ x
        val = float(rho(self.dF, z) @ (r * r) + rZ @ rZ + x @ self.problem.R @ x)
        return val, z, s, r

    def solve_x(self, zF):
        """``argmin_x G(x, z)`` for fixed free ``z``; returns ``(x, phi)``."""
        rh = rho(self.dF, zF)
        H = self.HZ + (self.AF.T * rh) @ self.AF
        b = self.bZ + self.AF.T @ (rh * self.yF)
        x = _spd_solve(H, b)
        rF = self.yF - self.AF @ x
        rZ = self.yZ - self.AZ @ x
        phi = float(rh @ (rF * rF) + rZ @ rZ + x @ self.problem.R @ x)
        return x, phi, rF

    def certificate(self, zF):
        """Value, linearization bound and minimizer at fixed ``z``."""
        x, phi, rF = self.solve_x(zF)
        D = self.dF + zF * (1.0 - self.dF)
        g = -self.dF * rF * rF / (D * D)
        k = min(self.B, g.size)
        lin_min = float(np.sum(np.sort(g)[:k])) if k > 0 else 0.0
        lb = phi + lin_min - float(g @ zF)
        return x, phi, min(lb, phi), rF

    def newton_direction(self, x, z, s, r):
        p = x.size
        dF = self.dF
        rh = rho(dF, z)
        H = 2.0 * (self.HZ + (self.AF.T * rh) @ self.AF)
        grad = 2.0 * (self.HZ @ x - self.bZ) - 2.0 * self.AF.T @ (rh * r)
        if np.isfinite(s):
            inner = (z > 1e-14) & (z < 1 - 1e-14)
            if inner.any():
                Ai = self.AF[inner]
                di, zi, ri = dF[inner], z[inner], r[inner]
                Di = di + zi * (1.0 - di)
                # curvature lost to the moving z, then restored for the budget coupling
                H -= (Ai.T * (2.0 * di / (Di * (1.0 - di)))) @ Ai
                inv_h = Di**3 / (2.0 * di * (1.0 - di) * ri * ri)
                b = Ai.T @ (Di / ((1.0 - di) * ri))
                H += np.outer(b, b) / inv_h.sum()
        H = 0.5 * (H + H.T)
        try:
            L = np.linalg.cholesky(H + 1e-14 * np.trace(H) / p * np.eye(p))
            step = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
        except np.linalg.LinAlgError:
            step = None
        if step is None or grad @ step >= 0:
            Hr = 2.0 * (self.HZ + (self.AF.T * rh) @ self.AF)
            step = -np.linalg.solve(Hr, grad)
        return step, grad


def _spd_solve(H, b):
    H = 0.5 * (H + H.T)
    try:
        L = np.linalg.cholesky(H)
        return np.linalg.solve(L.T, np.linalg.solve(L, b))
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(H, b, rcond=None)[0]


def _assemble(problem, ws, x, zF, rF):
    m = problem.m
    z = np.zeros(m)
    w = np.zeros(m)
    z[ws.F] = zF
    z[ws.O] = 1.0
    D = ws.dF + zF * (1.0 - ws.dF)
    w[ws.F] = -rF * zF / D
    w[ws.O] = -(problem.y[ws.O] - problem.A[ws.O] @ x)
    return z, w


def _leaf(problem, node):
    z = node.leaf_z()
    x, val = problem.ridge(z < 0.5)
    r = problem.residuals(x)
    w = np.where(z > 0.5, -r, 0.0)
    return RelaxationResult(x, z, w, val, val, 0, True)


def lower_bound_at(problem, d, node, z):
    """Certified bound from an arbitrary feasible ``z`` (free coordinates)."""
    ws = _Workspace(problem, d, node)
    _, phi, lb, _ = ws.certificate(np.asarray(z, float)[ws.F])
    return lb, phi


def solve_perspective_relaxation(problem, d, node=None, tol=1e-9, max_iter=100,
                                 x0=None, cutoff=np.inf, deadline=None):
    """Minimize the perspective relaxation at a node.

    Parameters
    ----------
    problem : Problem
    d : WeightVector or ndarray
        Perspective weights (strictly positive on free rows).
    node : NodeState, optional
        Fixings; the root by default.
    tol : float
        Relative gap between the value and the certified bound at which to stop.
    x0 : ndarray, optional
        Warm start for the coefficients.
    cutoff : float
        Stop as soon as the certified bound reaches this value.
    """
    d = np.asarray(getattr(d, "d", d), dtype=float)
    if node is None:
        node = NodeState.root(problem)
    if node.remaining_budget < 0:
        raise ValueError("node exceeds the outlier budget")
    if node.is_leaf():
        return _leaf(problem, node)
    ws = _Workspace(problem, d, node)
    if x0 is None:
        x = _spd_solve(ws.HZ + ws.AF.T @ ws.AF, ws.bZ + ws.AF.T @ ws.yF)
    else:
        x = np.asarray(x0, float).copy()
    best = None
    it = 0
    converged = False
    psi, z, s, r = ws.psi(x)
    for it in range(1, max_iter + 1):
        xh, phi, lb, rF = ws.certificate(z)
        if best is None or lb > best[2] or (lb == best[2] and phi < best[1]):
            best_lb = lb if best is None else max(lb, best[2])
            best = (xh, phi, best_lb, rF, z)
        if phi - lb <= tol * max(abs(phi), 1e-12) or lb >= cutoff:
            best = (xh, phi, max(lb, best[2]), rF, z)
            converged = True
            break
        if deadline is not None and time.monotonic() > deadline:
            break
        # alternating step is free: take it if it helps
        psi_h, zh, sh, rh_ = ws.psi(xh)
        if psi_h < psi:
            x, psi, z, s, r = xh, psi_h, zh, sh, rh_
        step, grad = ws.newton_direction(x, z, s, r)
        slope = float(grad @ step)
        alpha = 1.0
        moved = False
        while alpha > 1e-10:
            xc = x + alpha * step
            pc, zc, sc, rc = ws.psi(xc)
            if pc <= psi + 1e-4 * alpha * slope:
                x, psi, z, s, r = xc, pc, zc, sc, rc
                moved = True
                break
            alpha *= 0.5
        if not moved:
            break
    xh, phi, lb, rF, zF = best
    zz, ww = _assemble(problem, ws, xh, zF, rF)
    return RelaxationResult(xh, zz, ww, phi, lb, it, converged)
