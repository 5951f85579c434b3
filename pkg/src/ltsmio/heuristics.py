"""Baseline estimators: ridge (ls+l2), least absolute deviations, alt-opt."""

import logging

import numpy as np
from scipy.optimize import linprog

from .core import InterceptMode, Method, ProblemSpec, Solution
from .problem import build_problem

__all__ = ["ls_l2", "lad", "alt_opt", "alt_opt_problem"]

log = logging.getLogger(__name__)


def ls_l2(inst, lam, T=None, intercept_mode=InterceptMode.ZERO):
    """Ridge regression on every row: ``(A^T A + lam T^T T) x = A^T y``.

    Raises
    ------
    NotPositiveDefiniteError
        When the normal matrix is singular (e.g. ``lam = 0`` with collinear columns).
    """
    spec = ProblemSpec(lam=lam, budget=0, T=T, intercept_mode=intercept_mode, method=Method.LS_L2)
    return build_problem(inst, spec).solution_from_z(np.zeros(inst.m))


def lad(inst, intercept_mode=InterceptMode.ZERO, tol=1e-9):
    """Least absolute deviations ``min_x sum_i |y_i - a_i^T x|``.

    Solved exactly as a linear program.  Any intercept mode other than
    ``zero`` fits an unpenalized intercept.

    Returns
    -------
    Solution, bool
        The fit (``z = 0``, objective is the l1 loss) and a convergence flag.
    """
    A, y = inst.A, inst.y
    m, n = A.shape
    if m <= n:
        raise ValueError("lad needs more rows than features")
    with_icpt = InterceptMode(intercept_mode) is not InterceptMode.ZERO
    X = np.hstack([A, np.ones((m, 1))]) if with_icpt else A
    p = X.shape[1]
    # variables: x (free), e_plus, e_minus >= 0 with X x + e_plus - e_minus = y
    c = np.concatenate([np.zeros(p), np.ones(2 * m)])
    A_eq = np.hstack([X, np.eye(m), -np.eye(m)])
    bounds = [(None, None)] * p + [(0, None)] * (2 * m)
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol})
    ok = bool(res.success)
    if not ok:
        log.warning("lad: %s", res.message)
        coef = np.zeros(p) if res.x is None else res.x[:p]
    else:
        coef = res.x[:p]
    obj = float(np.abs(y - X @ coef).sum())
    x = coef[:n].copy()
    icpt = float(coef[n]) if with_icpt else 0.0
    return Solution(x, icpt, np.zeros(m), np.zeros(m), obj), ok


def alt_opt_problem(problem, max_iters=500, x0=None):
    """C-steps on a standard-form problem.

    Returns
    -------
    Solution, list of float
        The final fit and the objective after every refit.
    """
    eligible = np.flatnonzero(~problem.reliable)
    k = min(problem.budget, eligible.size)
    if x0 is None:
        x, _ = problem.ridge(np.ones(problem.m, dtype=bool))
    else:
        x = np.asarray(x0, float)
    flagged = None
    trace = []
    z = np.zeros(problem.m)
    for _ in range(max_iters):
        r = np.abs(problem.residuals(x))[eligible]
        order = np.argsort(-r, kind="stable")
        new = frozenset(eligible[order[:k]].tolist())
        if new == flagged:
            break
        flagged = new
        z = np.zeros(problem.m)
        z[list(flagged)] = 1.0
        x, val = problem.ridge(z < 0.5)
        trace.append(val)
    return problem.solution_from_z(z), trace


def alt_opt(inst, spec, max_iters=500):
    """Alternating minimization started from the ridge fit."""
    sol, _ = alt_opt_problem(build_problem(inst, spec), max_iters)
    return sol
