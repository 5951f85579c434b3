"""Best-bound branch-and-bound over the outlier indicators and method dispatch."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import heapq
import itertools
import logging
import time

import numpy as np

from .core import InterceptMode, Method, ProblemSpec, Solution
from .errors import EnumerationGuardError
from .heuristics import alt_opt_problem, lad, ls_l2
from .problem import build_problem
from .relax.bigm import solve_bigM_relaxation
from .relax.node import NodeState
from .relax.perspective import solve_perspective_relaxation
from .relax.tuning import round_z, tune_conic_plus
from .relax.weights import initial_weights

__all__ = [
    "BnbParams",
    "SolveReport",
    "solve_mio",
    "solve_problem",
    "enumerate_oracle",
    "enumerate_problem",
    "solve",
    "ENUMERATION_LIMIT",
]

log = logging.getLogger(__name__)

ENUMERATION_LIMIT = 10**6


@dataclass(frozen=True)
class BnbParams:
    """Search settings.

    ``node_retune`` re-runs weight tuning at every node (fixed-zero rows
    treated as reliable) with at most ``retune_iters`` iterations.
    """

    time_limit_s: float = 600.0
    node_limit: int = 10**7
    gap_tol: float = 1e-6
    integrality_tol: float = 1e-6
    parallel: bool = False
    workers: int = 4
    node_retune: bool = False
    retune_iters: int = 10
    warm_start: bool = False
    big_m: float = 1000.0

    def __post_init__(self):
        if self.time_limit_s <= 0 or self.gap_tol <= 0 or self.integrality_tol <= 0:
            raise ValueError("time limit and tolerances must be positive")
        if self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class SolveReport:
    """Outcome of a solve; objective and bounds are in standardized units.

    ``bound_trace`` holds ``(global lower bound, incumbent)`` after every
    processed batch of nodes.
    """

    method: str
    incumbent: Solution
    lower_bound: float
    gap: float
    nodes: int
    time_s: float
    status: str
    alg1_iterations: int = 0
    d_weights: np.ndarray = None
    root_bound: float = None
    warnings: list = field(default_factory=list)
    bound_trace: list = field(default_factory=list)

    @property
    def objective(self):
        return self.incumbent.objective


def _gap(ub, lb):
    if not np.isfinite(ub):
        return np.inf
    return max(ub - lb, 0.0) / max(ub, 1e-12)


@dataclass
class _Open:
    lb: float
    node: NodeState
    x0: np.ndarray
    d: np.ndarray


class _Search:
    """Mutable search state; the relaxation callbacks themselves are pure."""

    def __init__(self, problem, method, params, tolerances, deadline):
        self.problem = problem
        self.method = method
        self.params = params
        self.tol = tolerances
        self.deadline = deadline
        self.best = None
        self.ub = np.inf
        self.heap = []
        self.counter = itertools.count()
        self.pruned_lb = np.inf
        self.nodes = 0
        self.warnings = []

    def offer(self, sol):
        if sol.objective < self.ub:
            self.ub = sol.objective
            self.best = sol

    def cut(self):
        if not np.isfinite(self.ub):
            return np.inf
        return self.ub - self.params.gap_tol * abs(self.ub)

    def push(self, item):
        heapq.heappush(self.heap, (item.lb, next(self.counter), item))

    def evaluate(self, item):
        """Relax one node; returns ``(lb, relaxation or None, rounded, d)``."""
        P, node = self.problem, item.node
        if node.is_leaf():
            sol = P.solution_from_z(node.leaf_z())
            return sol.objective, None, sol, item.d
        d = item.d
        extra_lb = -np.inf
        if self.method is Method.BIGM:
            rel = solve_bigM_relaxation(P, self.params.big_m, node, tol=self.tol.relax_tol,
                                        x0=item.x0, cutoff=self.cut(), deadline=self.deadline)
        else:
            if self.params.node_retune and self.method is Method.CONIC_PLUS and \
                    node.fixed_one.size + node.fixed_zero.size > int(P.reliable.sum()):
                tr = tune_conic_plus(P, self.tol, node=node, d_init=d, deadline=self.deadline,
                                     max_iter=self.params.retune_iters)
                d = np.asarray(tr.d.d)
                extra_lb = tr.best_lb
            rel = solve_perspective_relaxation(P, d, node, tol=self.tol.relax_tol, x0=item.x0,
                                               cutoff=self.cut(), deadline=self.deadline)
        sol = P.solution_from_z(round_z(rel.z, node))
        lb = max(rel.certified_lb, extra_lb, item.lb)
        return lb, rel, sol, d

    def branch(self, item, lb, rel, d):
        z = rel.z
        free = item.node.free
        frac = np.abs(z[free] - 0.5)
        i = int(free[int(np.argmin(frac))])
        for v in (0, 1):
            self.push(_Open(lb, item.node.fix(i, v), rel.x, d))

    def global_lb(self):
        open_lb = self.heap[0][0] if self.heap else np.inf
        return min(open_lb, self.pruned_lb, self.ub)


def _root_weights(problem, method, tol, deadline):
    if method is Method.CONIC:
        return np.asarray(initial_weights(problem).d), None
    tr = tune_conic_plus(problem, tol, deadline=deadline)
    return np.asarray(tr.d.d), tr


def solve_problem(problem, method, params=None, tolerances=None, start=None):
    """Branch-and-bound on a standard-form problem.

    Parameters
    ----------
    problem : Problem
    method : Method
        One of the three mixed-integer formulations.
    start : float, optional
        ``time.monotonic()`` value the time limit is measured from.
    """
    from .core import Tolerances

    method = Method(method)
    if not method.is_mio:
        raise ValueError(f"{method.value} is not a mixed-integer formulation")
    params = params or BnbParams()
    tol = tolerances or Tolerances()
    t0 = time.monotonic() if start is None else start
    deadline = t0 + params.time_limit_s
    S = _Search(problem, method, params, tol, deadline)
    root = NodeState.root(problem)
    d0 = np.zeros(problem.m)
    alg1_iter = 0
    tuning_lb = -np.inf
    if method is not Method.BIGM and not root.is_leaf():
        d0, tr = _root_weights(problem, method, tol, deadline)
        if tr is not None:
            alg1_iter = tr.iterations
            tuning_lb = tr.best_lb
            S.warnings.extend(tr.warnings)
            if tr.incumbent is not None:
                S.offer(tr.incumbent)
    if params.warm_start:
        sol, _ = alt_opt_problem(problem)
        S.offer(sol)
    S.push(_Open(tuning_lb, root, None, d0))
    root_bound = None
    status = None
    batch = params.workers if params.parallel else 1
    trace = []
    pool = ThreadPoolExecutor(max_workers=batch) if params.parallel else None
    try:
        while S.heap:
            if time.monotonic() > deadline:
                status = "time_limit"
                break
            if S.nodes >= params.node_limit:
                status = "node_limit"
                break
            items = []
            while S.heap and len(items) < min(batch, params.node_limit - S.nodes):
                lb, _, item = heapq.heappop(S.heap)
                if lb >= S.cut():
                    S.pruned_lb = min(S.pruned_lb, lb)
                    continue
                items.append(item)
            if not items:
                continue
            if pool is not None and len(items) > 1:
                results = list(pool.map(S.evaluate, items))
            else:
                results = [S.evaluate(it) for it in items]
            for item, (lb, rel, sol, d) in zip(items, results):
                S.nodes += 1
                if root_bound is None:
                    root_bound = lb
                S.offer(sol)
                if rel is None:
                    S.pruned_lb = min(S.pruned_lb, sol.objective)
                    continue
                if not rel.converged and lb < S.cut():
                    S.warnings.append("relaxation stopped before convergence")
                if lb >= S.cut():
                    S.pruned_lb = min(S.pruned_lb, lb)
                    continue
                S.branch(item, lb, rel, d)
            trace.append((S.global_lb(), S.ub))
    finally:
        if pool is not None:
            pool.shutdown()
    if status is None:
        status = "optimal"
    lower = S.global_lb()
    gap = _gap(S.ub, lower)
    if status == "optimal":
        lower = min(lower, S.ub)
        if any("stalled" in w for w in S.warnings):
            status = "warning_numerical"
    if root_bound is None:
        root_bound = tuning_lb
    return SolveReport(method.value, S.best, float(lower), float(gap), S.nodes,
                       time.monotonic() - t0, status, alg1_iter,
                       None if method is Method.BIGM else d0, root_bound,
                       sorted(set(S.warnings), key=S.warnings.index), trace)


def solve_mio(inst, spec, params=None):
    """Solve the trimmed ridge problem to optimality with the formulation named in ``spec.method``."""
    spec = spec if isinstance(spec, ProblemSpec) else ProblemSpec(**spec)
    start = time.monotonic()
    params = params or BnbParams(time_limit_s=spec.time_limit_s, big_m=spec.tolerances.big_m,
                                 gap_tol=spec.tolerances.gap_tol,
                                 integrality_tol=spec.tolerances.integrality_tol)
    problem = build_problem(inst, spec)
    return solve_problem(problem, spec.method, params, spec.tolerances, start)


def enumerate_problem(problem):
    """Exact optimum of a standard-form problem by enumerating flagged sets."""
    eligible = np.flatnonzero(~problem.reliable)
    B = min(problem.budget, eligible.size)
    from math import comb

    if comb(eligible.size, B) * (B + 1) > ENUMERATION_LIMIT:
        raise EnumerationGuardError(
            f"C({eligible.size},{B})*({B}+1) exceeds the enumeration limit {ENUMERATION_LIMIT}")
    best_val, best_z = np.inf, None
    A, y, R = problem.A, problem.y, problem.R
    G = problem.gram + R
    b = problem.Aty
    for k in range(B + 1):
        for S in itertools.combinations(eligible, k):
            idx = list(S)
            As = A[idx]
            H = G - As.T @ As
            x = np.linalg.solve(H, b - As.T @ y[idx])
            keep = np.ones(problem.m, dtype=bool)
            keep[idx] = False
            r = y[keep] - A[keep] @ x
            val = float(r @ r + x @ R @ x)
            if val < best_val:
                best_val, best_z = val, idx
    z = np.zeros(problem.m)
    z[best_z] = 1.0
    return problem.solution_from_z(z)


def enumerate_oracle(inst, spec):
    """Brute-force optimum over every flagged set of size at most the budget.

    Raises
    ------
    EnumerationGuardError
        When ``C(m, budget) * (budget + 1)`` exceeds ``ENUMERATION_LIMIT``.
    """
    return enumerate_problem(build_problem(inst, spec))


def solve(inst, spec, params=None):
    """Dispatch any method; heuristics come back as single-node reports."""
    spec = spec if isinstance(spec, ProblemSpec) else ProblemSpec(**spec)
    if spec.method.is_mio:
        return solve_mio(inst, spec, params)
    t0 = time.monotonic()
    status = "optimal"
    warnings = []
    if spec.method is Method.LS_L2:
        sol = ls_l2(inst, spec.lam, spec.T, spec.intercept_mode)
    elif spec.method is Method.LAD:
        sol, ok = lad(inst, spec.intercept_mode)
        if not ok:
            status = "warning_numerical"
            warnings.append("lad did not converge")
    else:
        problem = build_problem(inst, spec)
        sol, _ = alt_opt_problem(problem)
    return SolveReport(spec.method.value, sol, float("nan"), float("nan"), 0,
                       time.monotonic() - t0, status, warnings=warnings)
