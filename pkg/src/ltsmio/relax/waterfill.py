"""Exact budgeted allocations for separable convex z-subproblems.

All three inner z-minimizations used by the relaxations have solutions of
the form ``z_i(s) = clip((s - lo_i) / (hi_i - lo_i), 0, 1)`` for a scalar
dual level ``s``.  ``sum_i z_i(s)`` is piecewise linear and nondecreasing in
``s``, so the budget-meeting level is found exactly by scanning sorted
breakpoints and interpolating on the bracketing segment.
"""

import numpy as np

__all__ = ["ramp_fill", "z_step"]


def _ramp(s, lo, width):
    with np.errstate(invalid="ignore"):
        z = (s - lo) / width
    z = np.where(np.isfinite(lo), z, 0.0)
    z = np.where(np.isinf(width), 0.0, z)
    return np.clip(np.nan_to_num(z, nan=0.0, posinf=1.0, neginf=0.0), 0.0, 1.0)


def ramp_fill(lo, hi, budget, s_max=np.inf):
    """Largest level ``s <= s_max`` with ``sum_i z_i(s) <= budget``.

    Parameters
    ----------
    lo, hi : (k,) ndarray
        Ramp start/end points; ``lo = +inf`` marks an entry that never
        activates, ``hi = +inf`` an entry with zero slope.
    budget : float
    s_max : float
        Upper cap on the level (a sign constraint on the multiplier).

    Returns
    -------
    z : (k,) ndarray
    s : float
        The level; ``inf`` when the budget does not bind.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.size == 0:
        return np.zeros(0), s_max
    with np.errstate(invalid="ignore"):
        width = hi - lo
    active = np.isfinite(lo) & np.isfinite(hi)
    if np.isinf(s_max):
        top = float(active.sum())
        if top <= budget + 1e-12:
            return np.where(active, 1.0, 0.0), np.inf
    else:
        z_cap = _ramp(s_max, lo, width)
        if z_cap.sum() <= budget + 1e-12:
            return z_cap, float(s_max)
    if budget <= 0:
        s = float(np.min(lo[active])) if active.any() else -np.inf
        return np.zeros_like(lo), s
    pts = np.concatenate([lo[active], hi[active]])
    if np.isfinite(s_max):
        pts = pts[pts < s_max]
        pts = np.append(pts, s_max)
    pts = np.unique(pts)
    lo_a = lo[active][:, None]
    w_a = width[active][:, None]
    sums = np.clip((pts[None, :] - lo_a) / w_a, 0.0, 1.0).sum(axis=0)
    k = int(np.searchsorted(sums, budget, side="left"))
    if k == 0:
        s = float(pts[0])
    else:
        s0, s1 = pts[k - 1], pts[k]
        f0, f1 = sums[k - 1], sums[k]
        s = float(s0 + (budget - f0) * (s1 - s0) / (f1 - f0)) if f1 > f0 else float(s1)
    z = _ramp(s, lo, width)
    # breakpoint interpolation is exact up to rounding; trim any excess
    excess = z.sum() - budget
    if excess > 0:
        inner = (z > 0) & (z < 1)
        if inner.any():
            z[inner] = np.maximum(z[inner] - excess / inner.sum(), 0.0)
    return z, s


def z_step(scores, budget):
    """Minimize ``sum_i scores_i / z_i`` over ``0 < z <= 1, sum z <= budget``.

    Returns ``(z, degenerate)``; with all scores zero the budget is spread
    uniformly and ``degenerate`` is True.
    """
    scores = np.asarray(scores, dtype=float)
    if np.any(scores < 0):
        raise ValueError("scores must be nonnegative")
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    k = scores.size
    if k == 0:
        return np.zeros(0), False
    if not np.any(scores > 0):
        return np.full(k, min(1.0, budget / k)), True
    with np.errstate(divide="ignore"):
        hi = np.where(scores > 0, 1.0 / np.sqrt(scores), np.inf)
    lo = np.where(scores > 0, 0.0, np.inf)
    z, _ = ramp_fill(lo, hi, budget)
    return z, False
