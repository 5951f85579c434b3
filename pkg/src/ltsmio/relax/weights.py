"""Perspective weights ``d`` and the weight-tuning semidefinite program.

Weights are valid when

    Sigma(d) = [[A^T A + R, -A^T], [-A, I - Diag(d)]]  is PSD,

which (for ``d < 1``) is equivalent to the ``p x p`` condition

    Q_reg - sum_{i eligible} (u_i - 1) a_i a_i^T  is PSD,   u_i = 1 / (1 - d_i).

Reliable rows carry ``d_i = 0``: their ``w_i`` is pinned to zero so the
weight is irrelevant, and their Gram contribution lives in ``Q_reg``.
"""

from dataclasses import dataclass, field
import logging
import time

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from ..errors import InvalidWeightsError
from ..linalg import min_eig_sym

__all__ = [
    "WeightVector",
    "sigma_matrix",
    "schur_matrix",
    "psd_margin",
    "initial_weights",
    "sdp_coefficients",
    "solve_weight_sdp",
    "WeightSdpInfo",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WeightVector:
    """Perspective weights ``d`` with ``u = 1 / (1 - d)``."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).copy()
        if np.any(d < 0) or np.any(d >= 1):
            raise InvalidWeightsError("weights must lie in [0, 1)")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def u(self):
        return 1.0 / (1.0 - self.d)


def sigma_matrix(problem, d):
    """Assemble the full ``(p + m) x (p + m)`` quadratic form."""
    A = problem.A
    m, p = A.shape
    S = np.empty((p + m, p + m))
    S[:p, :p] = problem.gram + problem.R
    S[:p, p:] = -A.T
    S[p:, :p] = -A
    S[p:, p:] = np.diag(1.0 - np.asarray(d, dtype=float))
    return S


def schur_matrix(problem, d, rows=None, Q=None):
    """``Q - sum_{i in rows} d_i / (1 - d_i) a_i a_i^T`` (Schur complement of Sigma)."""
    d = np.asarray(d, dtype=float)
    if rows is None:
        rows = problem.free_rows()
    if Q is None:
        Q = problem.Q_reg
    Ar = problem.A[rows]
    v = d[rows] / (1.0 - d[rows])
    return Q - (Ar.T * v) @ Ar


def psd_margin(problem, d, rows=None, Q=None):
    """Smallest eigenvalue of the Schur complement relative to ``||Q||``."""
    if Q is None:
        Q = problem.Q_reg
    lam, _ = min_eig_sym(schur_matrix(problem, d, rows, Q))
    return lam / max(np.linalg.norm(Q, 2), 1e-300)


def initial_weights(problem, rows=None, Q=None):
    """Weights of the simple conic formulation.

    The regularizer is split evenly over the eligible rows, ``Q_i = Q / k``,
    and each row gets the maximal perspective weight ``1 / (1 + a_i^T Q_i^{-1} a_i)``.
    """
    if rows is None:
        rows = problem.free_rows()
    if Q is None:
        Q = problem.Q_reg
    rows = np.asarray(rows, dtype=int)
    d = np.zeros(problem.m)
    if rows.size == 0:
        return WeightVector(d)
    Ar = problem.A[rows]
    cf = cho_factor(Q)
    s = rows.size * np.einsum("ij,ji->i", Ar, cho_solve(cf, Ar.T))
    d[rows] = 1.0 / (1.0 + s)
    return WeightVector(d)


def sdp_coefficients(z_bar, w_bar, z_floor=1e-9):
    """``c_i = w_i^2 (1 / z_i - 1)`` with ``z`` clamped away from zero."""
    z = np.maximum(np.asarray(z_bar, float), z_floor)
    w = np.asarray(w_bar, float)
    return np.maximum(w * w / z - w * w, 0.0)


@dataclass
class WeightSdpInfo:
    objective: float
    newton_steps: int
    floor_used: float
    warnings: list = field(default_factory=list)


def _max_uniform_step(Q, G):
    """Largest ``theta`` with ``Q - theta * G`` PSD (``G`` PSD, ``Q`` PD)."""
    top = eigh(G, Q, eigvals_only=True, subset_by_index=[G.shape[0] - 1, G.shape[0] - 1])[0]
    return np.inf if top <= 0 else 1.0 / top


def _max_feasible_step(cf, Ar, step, slack):
    """Largest ``alpha`` keeping both the slacks and ``S(v + alpha step)`` positive."""
    neg = step < 0
    a_box = np.min(-slack[neg] / step[neg]) if neg.any() else np.inf
    L = np.tril(cf[0]) if cf[1] else np.triu(cf[0]).T
    D = (Ar.T * step) @ Ar
    X = np.linalg.solve(L, np.linalg.solve(L, D).T)
    top = np.linalg.eigvalsh(0.5 * (X + X.T))[-1]
    a_psd = 1.0 / top if top > 0 else np.inf
    return min(a_box, a_psd)


def solve_weight_sdp(problem, z_bar, w_bar, rows=None, Q=None, u_floor=1.001,
                     tol_psd=1e-8, coef_floor=1e-12, z_floor=1e-9, eps=1e-6,
                     max_newton=400, deadline=None):
    """Best perspective weights for a fixed relaxation point.

    Solves

        min_u  sum_i c_i / u_i
        s.t.   Q - sum_i (u_i - 1) a_i a_i^T  PSD,   u_i >= u_floor,

    with ``c_i = w_i^2 (1/z_i - 1)`` by a log-barrier Newton method on the
    ``p x p`` determinant, then maps back via ``d_i = 1 - 1/u_i``.

    Returns
    -------
    WeightVector, WeightSdpInfo
    """
    if rows is None:
        rows = problem.free_rows()
    if Q is None:
        Q = problem.Q_reg
    rows = np.asarray(rows, dtype=int)
    info = WeightSdpInfo(0.0, 0, u_floor)
    d_out = np.zeros(problem.m)
    if rows.size == 0:
        return WeightVector(d_out), info
    Ar = problem.A[rows]
    if np.any(np.all(Ar == 0, axis=1)):
        raise ValueError("weight tuning requires A without zero rows")
    c = sdp_coefficients(np.asarray(z_bar)[rows], np.asarray(w_bar)[rows], z_floor)
    c = np.maximum(c, coef_floor)
    c_scale = c.max()
    c = c / c_scale
    k, p = Ar.shape

    G = Ar.T @ Ar
    theta = _max_uniform_step(Q, G)
    floor = u_floor - 1.0
    if not floor < theta * (1 - 1e-9):
        floor = 0.5 * theta
        info.warnings.append(f"u floor {u_floor} infeasible; lowered to {1 + floor:.6g}")
        log.debug(info.warnings[-1])
    info.floor_used = 1.0 + floor
    hi = min(theta, floor + 1e6)
    v = np.full(k, floor + 0.5 * (hi - floor))

    def S_of(v):
        return Q - (Ar.T * v) @ Ar

    def barrier(v, t):
        if np.any(v <= floor):
            return np.inf
        try:
            L = np.linalg.cholesky(S_of(v))
        except np.linalg.LinAlgError:
            return np.inf
        logdet = 2.0 * np.log(np.diag(L)).sum()
        return t * float(c @ (1.0 / (1.0 + v))) - logdet - np.log(v - floor).sum()

    nu = p + k
    t = max(1.0, nu / max(float(c @ (1.0 / (1.0 + v))), 1e-12)) * 1e-2
    steps = 0
    stalled = False
    while True:
        for _ in range(60):
            if deadline is not None and time.monotonic() > deadline:
                stalled = True
                break
            S = S_of(v)
            cf = cho_factor(S)
            SiA = cho_solve(cf, Ar.T)
            K = Ar @ SiA
            slack = v - floor
            g = -t * c / (1.0 + v) ** 2 + np.diag(K) + (-1.0 / slack)
            H = K * K
            H[np.diag_indices(k)] += 2.0 * t * c / (1.0 + v) ** 3 + 1.0 / slack**2
            try:
                step = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                stalled = True
                break
            dec = -float(g @ step)
            steps += 1
            if dec < 1e-10:
                break
            phi0 = barrier(v, t)
            alpha = min(1.0, 0.99 * _max_feasible_step(cf, Ar, step, v - floor))
            while alpha > 1e-12:
                cand = v + alpha * step
                if barrier(cand, t) <= phi0 - 0.25 * alpha * dec:
                    break
                alpha *= 0.5
            else:
                stalled = True
                break
            v = cand
            if steps >= max_newton:
                stalled = True
                break
        f = float(c @ (1.0 / (1.0 + v)))
        if stalled or nu / t <= eps * max(f, 1e-12):
            break
        t *= 20.0
    if stalled:
        info.warnings.append("weight SDP stalled; returning last feasible iterate")

    # feasibility restoration toward u = 1
    scale = max(np.linalg.norm(Q, 2), 1e-300)
    theta_b = 1.0
    for _ in range(60):
        lam_min, _ = min_eig_sym(S_of(theta_b * v))
        if lam_min >= -tol_psd * scale and lam_min > 0:
            break
        theta_b *= 0.5
    v = theta_b * v
    u = 1.0 + v
    d_out[rows] = v / (1.0 + v)
    info.objective = float(c_scale * (c @ (1.0 / u)))
    info.newton_steps = steps
    return WeightVector(d_out), info
