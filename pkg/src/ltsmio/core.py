"""Data model, standardization, synthetic instances and statistical metrics."""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from .errors import DegenerateDataError, UndefinedMetricError

__all__ = [
    "Dataset",
    "Transform",
    "StandardizedInstance",
    "InterceptMode",
    "Method",
    "Tolerances",
    "ProblemSpec",
    "Solution",
    "GroundTruth",
    "standardize",
    "generate_synthetic",
    "risk",
    "recall",
    "unstandardize_solution",
    "budget_from_fraction",
]


@dataclass(frozen=True)
class Dataset:
    """Raw regression data in original units.

    ``reliable[i]`` marks rows that may never be flagged as outliers.
    """

    features: np.ndarray
    response: np.ndarray
    reliable: np.ndarray = None
    column_names: tuple = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.features, dtype=float))
        if A.ndim != 2:
            raise DegenerateDataError("features must be a 2-D array")
        y = np.asarray(self.response, dtype=float).reshape(-1)
        m, n = A.shape
        if m < 1 or n < 1:
            raise DegenerateDataError(f"need m >= 1 and n >= 1, got {A.shape}")
        if y.shape[0] != m:
            raise DegenerateDataError(f"response has {y.shape[0]} rows, features {m}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
            raise DegenerateDataError("data contains non-finite entries")
        rel = np.zeros(m, dtype=bool) if self.reliable is None else np.asarray(self.reliable, dtype=bool)
        if rel.shape != (m,):
            raise DegenerateDataError("reliable mask has the wrong length")
        if rel.sum() >= m:
            raise DegenerateDataError("at least one row must be eligible as an outlier")
        names = self.column_names
        if names is None:
            names = tuple(f"x{j}" for j in range(n))
        if len(names) != n:
            raise DegenerateDataError("column_names length does not match features")
        object.__setattr__(self, "features", A)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "reliable", rel)
        object.__setattr__(self, "column_names", tuple(names))

    @property
    def m(self):
        return self.features.shape[0]

    @property
    def n(self):
        return self.features.shape[1]


@dataclass(frozen=True)
class Transform:
    """Per-column affine maps ``a_std = (a - shift) / scale``."""

    col_shift: np.ndarray
    col_scale: np.ndarray
    y_shift: float
    y_scale: float

    def apply(self, features, response):
        A = (np.asarray(features, float) - self.col_shift) / self.col_scale
        y = (np.asarray(response, float) - self.y_shift) / self.y_scale
        return A, y

    def invert(self, A, y):
        return A * self.col_scale + self.col_shift, y * self.y_scale + self.y_shift


@dataclass(frozen=True)
class StandardizedInstance:
    A: np.ndarray
    y: np.ndarray
    transform: Transform
    reliable: np.ndarray
    column_names: tuple = ()

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


class InterceptMode(str, Enum):
    ZERO = "zero"
    PROXY = "proxy"
    RELIABLE = "reliable"


class Method(str, Enum):
    BIGM = "big-m"
    CONIC = "conic"
    CONIC_PLUS = "conic-plus"
    ALT_OPT = "alt-opt"
    LAD = "lad"
    LS_L2 = "ls-l2"

    @property
    def is_mio(self):
        return self in (Method.BIGM, Method.CONIC, Method.CONIC_PLUS)


@dataclass(frozen=True)
class Tolerances:
    """Numerical settings shared by the relaxations and the search."""

    gap_tol: float = 1e-6
    integrality_tol: float = 1e-6
    relax_tol: float = 1e-9
    psd_tol: float = 1e-8
    u_floor: float = 1.001
    z_floor: float = 1e-9
    coef_floor: float = 1e-12
    stall_count: int = 20
    stall_eps: float = 1e-6
    alg1_max_iter: int = 200
    big_m: float = 1000.0


@dataclass(frozen=True)
class ProblemSpec:
    """What to solve: penalty, outlier budget, intercept handling, method.

    ``intercept_proxy`` is the baseline intercept for ``InterceptMode.PROXY``;
    ``None`` means "use the ls+l2 intercept".
    """

    lam: float
    budget: int
    T: np.ndarray = None
    intercept_mode: InterceptMode = InterceptMode.ZERO
    intercept_proxy: float = None
    method: Method = Method.CONIC_PLUS
    time_limit_s: float = 600.0
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        object.__setattr__(self, "intercept_mode", InterceptMode(self.intercept_mode))
        object.__setattr__(self, "method", Method(self.method))
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.method in (Method.CONIC, Method.CONIC_PLUS) and self.lam <= 0:
            raise ValueError("conic formulations need lambda > 0")
        if int(self.budget) != self.budget or self.budget < 0:
            raise ValueError("budget must be a nonnegative integer")
        if self.time_limit_s <= 0:
            raise ValueError("time limit must be positive")

    def regularization(self, n):
        """``T`` as an ``n x n`` array (identity by default)."""
        if self.T is None:
            return np.eye(n)
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        if T.shape[1] != n:
            raise ValueError(f"T has {T.shape[1]} columns, data has {n} features")
        return T

    def validate(self, inst):
        T = self.regularization(inst.n)
        if np.linalg.eigvalsh(T.T @ T)[0] <= 0:
            raise ValueError("T^T T must be positive definite")
        if self.budget + int(inst.reliable.sum()) > inst.m:
            raise ValueError("budget plus reliable rows exceeds m")
        if self.budget > inst.m - 1:
            raise ValueError("budget must be at most m - 1")


@dataclass
class Solution:
    """A feasible LTS point in standardized coordinates."""

    x: np.ndarray
    intercept: float
    z: np.ndarray
    w: np.ndarray
    objective: float

    @property
    def discarded(self):
        return np.flatnonzero(self.z > 0.5)


@dataclass(frozen=True)
class GroundTruth:
    x_star: np.ndarray
    outlier_set: tuple

    @property
    def n_outliers(self):
        return len(self.outlier_set)


def standardize(dataset):
    """Center and scale every column (and the response) to zero sum, unit square-sum.

    Raises
    ------
    DegenerateDataError
        When a column or the response is constant; ``column`` names it.
    """
    A = dataset.features
    y = dataset.response
    names = dataset.column_names
    shift = A.mean(axis=0)
    Ac = A - shift
    scale = np.sqrt((Ac**2).sum(axis=0))
    for j in range(A.shape[1]):
        if np.ptp(A[:, j]) == 0 or scale[j] <= 1e-300:
            raise DegenerateDataError(f"column {names[j]!r} is constant", column=names[j])
    y_shift = float(y.mean())
    yc = y - y_shift
    y_scale = float(np.sqrt((yc**2).sum()))
    if np.ptp(y) == 0 or y_scale <= 1e-300:
        raise DegenerateDataError("response is constant", column="response")
    tr = Transform(shift, scale, y_shift, y_scale)
    return StandardizedInstance(Ac / scale, yc / y_scale, tr, dataset.reliable.copy(), names)


def generate_synthetic(n, m, tau, seed):
    """Gaussian design with planted gross outliers.

    Entries of ``A`` have variance 100, noise has variance 10, the true
    coefficients are all ones and ``floor(tau * m)`` distinct responses are
    shifted up by 1000.
    """
    if not 0 <= tau < 1:
        raise ValueError("tau must lie in [0, 1)")
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    A = rng.normal(0.0, 10.0, size=(m, n))
    x_star = np.ones(n)
    eps = rng.normal(0.0, math.sqrt(10.0), size=m)
    y = A @ x_star + eps
    k = math.floor(tau * m)
    outliers = np.sort(rng.choice(m, size=k, replace=False)) if k else np.array([], dtype=int)
    y[outliers] += 1000.0
    ds = Dataset(A, y, column_names=tuple(f"x{j + 1}" for j in range(n)))
    return ds, GroundTruth(x_star, tuple(int(i) for i in outliers))


def budget_from_fraction(frac, m):
    return int(math.floor(frac * m + 1e-9))


def risk(x_hat, truth):
    """Relative coefficient error ``||x* - x_hat||^2 / ||x*||^2``."""
    x_hat = np.asarray(x_hat, dtype=float)
    xs = np.asarray(truth.x_star, dtype=float)
    if x_hat.shape != xs.shape:
        raise ValueError("dimension mismatch")
    return float(np.sum((xs - x_hat) ** 2) / np.sum(xs**2))


def recall(z_hat, truth):
    """Fraction of planted outliers that are flagged in ``z_hat``."""
    k = truth.n_outliers
    if k == 0:
        raise UndefinedMetricError("recall is undefined without planted outliers")
    z_hat = np.asarray(z_hat)
    hits = sum(1 for i in truth.outlier_set if z_hat[i] > 0.5)
    return hits / k


def unstandardize_solution(sol, inst):
    """Map standardized coefficients back to original units.

    Returns
    -------
    x : ndarray
        Coefficients on the raw features.
    intercept : float
        Raw-unit intercept, so that ``y ~ intercept + features @ x``.
    """
    tr = inst.transform
    x = tr.y_scale * np.asarray(sol.x, float) / tr.col_scale
    intercept = tr.y_shift + tr.y_scale * sol.intercept - float(tr.col_shift @ x)
    return x, float(intercept)
