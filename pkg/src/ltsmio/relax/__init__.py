"""Continuous relaxations used for bounding in the branch-and-bound search."""

from .node import FREE, ONE, ZERO, NodeState, RelaxationResult
from .perspective import objective_generic, solve_perspective_relaxation
from .waterfill import ramp_fill, z_step
from .weights import WeightVector, initial_weights, solve_weight_sdp

__all__ = [
    "FREE",
    "ONE",
    "ZERO",
    "NodeState",
    "RelaxationResult",
    "objective_generic",
    "solve_perspective_relaxation",
    "ramp_fill",
    "z_step",
    "WeightVector",
    "initial_weights",
    "solve_weight_sdp",
]
