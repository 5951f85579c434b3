import numpy as np
import pytest

from ltsmio.core import ProblemSpec, StandardizedInstance, Transform, generate_synthetic, standardize
from ltsmio.problem import build_problem


def raw_instance(A, y, reliable=None):
    """Wrap arrays as an instance with the identity transform."""
    A = np.atleast_2d(np.asarray(A, float))
    if A.shape[0] == 1 and np.asarray(y).size > 1:
        A = A.T
    y = np.asarray(y, float)
    m, n = A.shape
    rel = np.zeros(m, dtype=bool) if reliable is None else np.asarray(reliable, bool)
    tr = Transform(np.zeros(n), np.ones(n), 0.0, 1.0)
    return StandardizedInstance(A, y, tr, rel, tuple(f"x{j}" for j in range(n)))


def synthetic_problem(n, m, tau, seed, lam=0.05, budget=None, **kw):
    ds, truth = generate_synthetic(n, m, tau, seed)
    inst = standardize(ds)
    if budget is None:
        budget = int(np.floor(tau * m))
    spec = ProblemSpec(lam=lam, budget=budget, **kw)
    return build_problem(inst, spec), inst, spec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
