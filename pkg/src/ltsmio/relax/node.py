"""Branch-and-bound node fixings and relaxation results."""

from dataclasses import dataclass

import numpy as np

__all__ = ["NodeState", "RelaxationResult", "FREE", "ZERO", "ONE"]

FREE, ZERO, ONE = 0, -1, 1


@dataclass(frozen=True, eq=False)
class NodeState:
    """Partition of the rows into free, fixed-inlier and fixed-outlier sets.

    ``status[i]`` is ``FREE``, ``ZERO`` (kept, ``z_i = 0``) or ``ONE``
    (discarded, ``z_i = 1``).
    """

    status: np.ndarray
    budget: int

    @classmethod
    def root(cls, problem):
        status = np.where(problem.reliable, ZERO, FREE).astype(np.int8)
        return cls(status, int(problem.budget))

    @property
    def fixed_zero(self):
        return np.flatnonzero(self.status == ZERO)

    @property
    def fixed_one(self):
        return np.flatnonzero(self.status == ONE)

    @property
    def free(self):
        return np.flatnonzero(self.status == FREE)

    @property
    def remaining_budget(self):
        return self.budget - int(np.count_nonzero(self.status == ONE))

    def fix(self, i, value):
        if self.status[i] != FREE:
            raise ValueError(f"row {i} is already fixed")
        status = self.status.copy()
        status[i] = ONE if value else ZERO
        return NodeState(status, self.budget)

    def is_leaf(self):
        """True when the remaining choice is forced."""
        rb = self.remaining_budget
        nf = int(np.count_nonzero(self.status == FREE))
        return rb <= 0 or nf == 0 or rb >= nf

    def leaf_z(self):
        """Binary ``z`` for a leaf: flag every free row iff budget allows."""
        z = (self.status == ONE).astype(float)
        free = self.status == FREE
        if self.remaining_budget >= int(free.sum()):
            z[free] = 1.0
        return z


@dataclass
class RelaxationResult:
    x: np.ndarray
    z: np.ndarray
    w: np.ndarray
    value: float
    certified_lb: float
    iterations: int
    converged: bool
