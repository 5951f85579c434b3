"""Closed-form convexification kernels for one trimmed-squares term.

For a single datapoint ``(a, c)`` and a share ``Q`` of the ridge penalty the
mixed-integer epigraph

    t >= x^T Q x + (c + w - a^T x)^2,   w (1 - z) = 0,  z in {0, 1}

has the closed convex hull

    t >= c^2 + 2c (w - a^T x) + ||L^{-1} (x - shift * w)||^2 + weight * w^2 / z

with ``L L^T = (Q + a a^T)^{-1}``, ``s = a^T Q^{-1} a``,
``shift = Q^{-1} a / (1 + s)`` and ``weight = 1 / (1 + s)``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDirectionError
from .linalg import SpdFactor, factor_spd, solve_spd

__all__ = [
    "HullTerm",
    "Regularizer",
    "build_hull_term",
    "hull_term_value",
    "envelope_homogeneous",
    "delta_max",
    "bordered_matrix",
    "reliable_regularizer",
    "trivial_hull_witness",
]


@dataclass(frozen=True)
class HullTerm:
    """Per-datapoint artifacts of the extended-space hull.

    ``L_inv`` is stored explicitly with ``L_inv.T @ L_inv == Q + a a^T``.
    """

    L_inv: np.ndarray
    shift: np.ndarray
    weight: float
    s: float
    c: float
    a: np.ndarray


@dataclass(frozen=True)
class Regularizer:
    Q_reg: np.ndarray
    factor: SpdFactor


def _as_matrix(Q):
    return np.atleast_2d(np.asarray(Q, dtype=float))


def _as_vector(a):
    return np.atleast_1d(np.asarray(a, dtype=float))


def build_hull_term(Q, a, c):
    Q = _as_matrix(Q)
    a = _as_vector(a)
    Qa = solve_spd(factor_spd(Q), a)
    s = float(a @ Qa)
    C = factor_spd(Q + np.outer(a, a))
    return HullTerm(C.L.T.copy(), Qa / (1.0 + s), 1.0 / (1.0 + s), s, float(c), a)


def hull_term_value(term, x, w, z):
    """Evaluate the hull inequality's right-hand side at ``(x, w, z)``.

    At ``z = 0`` the perspective closes to ``0`` when ``w = 0`` and to
    ``+inf`` otherwise.
    """
    x = _as_vector(x)
    c = term.c
    v = term.L_inv @ (x - term.shift * w)
    base = c * c + 2.0 * c * (w - term.a @ x) + float(v @ v)
    if z <= 0:
        if abs(w) > 1e-12:
            return np.inf
        return base
    return base + term.weight * w * w / z


def envelope_homogeneous(Q, a, x, z):
    """Convex envelope of ``x^T Q x + (1 - z)(a^T x)^2`` over ``z in [0, 1]``."""
    Q = _as_matrix(Q)
    a = _as_vector(a)
    x = _as_vector(x)
    s = float(a @ solve_spd(factor_spd(Q), a))
    ax = float(a @ x)
    return float(x @ Q @ x) + (1.0 - z) * ax * ax / (1.0 + z * s)


def bordered_matrix(Q, a):
    """``[[Q + a a^T, -a], [-a^T, 1]]``, the Hessian of ``x^T Q x + (w - a^T x)^2``."""
    Q = _as_matrix(Q)
    a = _as_vector(a)
    n = a.shape[0]
    Q1 = np.empty((n + 1, n + 1))
    Q1[:n, :n] = Q + np.outer(a, a)
    Q1[:n, n] = -a
    Q1[n, :n] = -a
    Q1[n, n] = 1.0
    return Q1


def delta_max(Q, a):
    """Largest ``delta`` keeping ``bordered_matrix(Q, a) - delta e e^T`` PSD."""
    Q = _as_matrix(Q)
    a = _as_vector(a)
    s = float(a @ solve_spd(factor_spd(Q), a))
    return 1.0 / (1.0 + s)


def reliable_regularizer(lam, T, inst):
    """``lam T^T T`` plus the Gram matrix of the instance's reliable rows."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    T = _as_matrix(T)
    Ar = inst.A[np.asarray(inst.reliable, dtype=bool)]
    Q = lam * (T.T @ T) + Ar.T @ Ar
    return Regularizer(Q, factor_spd(Q))


def trivial_hull_witness(a, c, point):
    """Split a fractional point into two members of the single-term set.

    For ``0 < z < 1`` returns ``(p1, p2, theta)`` with
    ``point == theta * p1 + (1 - theta) * p2``, ``p1`` at ``z = 1`` and ``p2``
    at ``z = 0``; each ``p = (x, z, t)`` satisfies
    ``t >= (c - a^T x)^2 (1 - z)``.
    """
    a = _as_vector(a)
    x, z, t = point
    x = _as_vector(x)
    na2 = float(a @ a)
    if na2 == 0:
        raise UnsupportedDirectionError("a must be nonzero")
    if not 0 < z < 1:
        raise ValueError("z must lie strictly between 0 and 1")
    if t < 0:
        raise ValueError("t must be nonnegative")
    anchor = c * a / na2
    p1 = (x / z - (1.0 - z) / z * anchor, 1.0, 0.0)
    p2 = (anchor, 0.0, t / (1.0 - z))
    return p1, p2, float(z)
