"""Internal standard form shared by every solver.

Every intercept mode is folded into a plain trimmed ridge problem

    min_{x, z}  sum_i (y_i - a_i^T x)^2 (1 - z_i) + x^T R x
    s.t.        sum_i z_i <= budget,  z_i = 0 on reliable rows,

where ``R`` is positive semidefinite and ``R + sum_{reliable} a_i a_i^T``
is positive definite.  With an intercept the last column of ``A`` is all
ones; the proxy mode shifts ``y`` by the baseline so the penalty
``lam * (x0 - c0)^2`` becomes ``lam * x0'^2``.
"""

from dataclasses import dataclass
from functools import cached_property
import itertools
from math import comb

import numpy as np

from .core import InterceptMode, Solution
from .linalg import factor_spd, solve_spd

__all__ = ["Problem", "build_problem", "iter_subsets", "trimmed_objective"]


@dataclass(frozen=True, eq=False)
class Problem:
    A: np.ndarray
    y: np.ndarray
    R: np.ndarray
    reliable: np.ndarray
    budget: int
    lam: float
    has_intercept: bool = False
    intercept_offset: float = 0.0

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.A.shape[1]

    @cached_property
    def Q_reg(self):
        """Regularizer strengthened with the Gram matrix of reliable rows."""
        Ar = self.A[self.reliable]
        return self.R + Ar.T @ Ar

    @cached_property
    def gram(self):
        return self.A.T @ self.A

    @cached_property
    def Aty(self):
        return self.A.T @ self.y

    @cached_property
    def strong_convexity(self):
        """Smallest eigenvalue of ``R``."""
        return float(np.linalg.eigvalsh(self.R)[0])

    def residuals(self, x):
        return self.y - self.A @ x

    def objective(self, x, z):
        """Trimmed objective at binary ``z`` (rows with ``z_i = 1`` dropped)."""
        r = self.residuals(x)
        keep = np.asarray(z) < 0.5
        return float(r[keep] @ r[keep] + x @ self.R @ x)

    def ridge(self, keep):
        """Ridge fit on rows where ``keep`` is true. Returns ``(x, value)``."""
        keep = np.asarray(keep, dtype=bool)
        Ak = self.A[keep]
        H = Ak.T @ Ak + self.R
        f = factor_spd(0.5 * (H + H.T))
        x = solve_spd(f, Ak.T @ self.y[keep])
        r = self.y[keep] - Ak @ x
        return x, float(r @ r + x @ self.R @ x)

    def weighted_ridge(self, rho):
        """Minimize ``sum_i rho_i r_i(x)^2 + x^T R x`` for weights ``rho >= 0``."""
        H = (self.A.T * rho) @ self.A + self.R
        f = factor_spd(0.5 * (H + H.T))
        x = solve_spd(f, self.A.T @ (rho * self.y))
        r = self.y - self.A @ x
        return x, float(rho @ (r * r) + x @ self.R @ x)

    def solution_from_z(self, z):
        """Fix binary ``z``, refit, and package a :class:`Solution`."""
        z = (np.asarray(z) > 0.5).astype(float)
        x, val = self.ridge(z < 0.5)
        r = self.residuals(x)
        w = np.where(z > 0.5, -r, 0.0)
        return self.to_solution(x, z, w, val)

    def to_solution(self, x, z, w, value):
        x = np.asarray(x, dtype=float)
        if self.has_intercept:
            return Solution(x[:-1].copy(), float(x[-1] + self.intercept_offset), z, w, float(value))
        return Solution(x.copy(), 0.0, z, w, float(value))

    def coefficients(self, sol):
        """Inverse of :meth:`to_solution` for the coefficient block."""
        if self.has_intercept:
            return np.append(sol.x, sol.intercept - self.intercept_offset)
        return np.asarray(sol.x, dtype=float)

    def free_rows(self):
        return np.flatnonzero(~self.reliable)

    def n_subsets(self):
        k = min(self.budget, int((~self.reliable).sum()))
        return sum(comb(int((~self.reliable).sum()), j) for j in range(k + 1))


def _ls_intercept(inst, lam, T):
    """Intercept of ridge regression with an unpenalized intercept."""
    A, y = inst.A, inst.y
    abar, ybar = A.mean(axis=0), y.mean()
    Ac, yc = A - abar, y - ybar
    x = np.linalg.solve(Ac.T @ Ac + lam * T.T @ T, Ac.T @ yc)
    return float(ybar - abar @ x)


def build_problem(inst, spec):
    """Translate a standardized instance and a ProblemSpec into standard form."""
    spec.validate(inst)
    T = spec.regularization(inst.n)
    lam = float(spec.lam)
    R = lam * (T.T @ T)
    A, y = inst.A, inst.y
    mode = spec.intercept_mode
    if mode is InterceptMode.ZERO:
        return Problem(A.copy(), y.copy(), R, inst.reliable.copy(), int(spec.budget), lam)
    m = inst.m
    A1 = np.hstack([A, np.ones((m, 1))])
    R1 = np.zeros((inst.n + 1, inst.n + 1))
    R1[:-1, :-1] = R
    if mode is InterceptMode.PROXY:
        c0 = spec.intercept_proxy
        if c0 is None:
            c0 = _ls_intercept(inst, lam, T)
        R1[-1, -1] = lam
        return Problem(A1, y - c0, R1, inst.reliable.copy(), int(spec.budget), lam, True, float(c0))
    if not inst.reliable.any():
        raise ValueError("intercept mode 'reliable' needs at least one reliable row")
    prob = Problem(A1, y.copy(), R1, inst.reliable.copy(), int(spec.budget), lam, True, 0.0)
    if np.linalg.eigvalsh(prob.Q_reg)[0] <= 1e-12:
        raise ValueError("reliable rows do not determine the intercept")
    return prob


def iter_subsets(free, budget):
    """All subsets of ``free`` with at most ``budget`` elements."""
    for k in range(min(budget, len(free)) + 1):
        yield from itertools.combinations(free, k)


def trimmed_objective(problem, x):
    """LTS objective of fixed coefficients: drop the ``budget`` worst eligible rows."""
    r2 = problem.residuals(np.asarray(x, float)) ** 2
    eligible = np.flatnonzero(~problem.reliable)
    k = min(problem.budget, eligible.size)
    drop = eligible[np.argsort(-r2[eligible], kind="stable")[:k]]
    keep = np.ones(problem.m, dtype=bool)
    keep[drop] = False
    return float(r2[keep].sum() + x @ problem.R @ x)
