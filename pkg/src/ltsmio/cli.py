"""Command-line interface: ``gen``, ``solve`` and ``bench``."""

import argparse
import csv
import itertools
import json
import logging
import math
from pathlib import Path
import sys

import numpy as np

from .core import (
    InterceptMode,
    Method,
    ProblemSpec,
    budget_from_fraction,
    generate_synthetic,
    recall,
    risk,
    standardize,
    unstandardize_solution,
)
from .errors import LTSError, UndefinedMetricError
from .io import read_csv, read_truth, write_csv, write_truth
from .problem import build_problem, trimmed_objective
from .solver import BnbParams, solve

__all__ = ["main", "build_parser", "run_one", "EXIT_OK", "EXIT_USAGE", "EXIT_DATA", "EXIT_NUMERICAL"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

BENCH_FIELDS = [
    "dataset", "method", "lambda", "budget", "status", "time_s", "nodes", "gap",
    "objective", "quality_gap", "risk", "recall",
]

log = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser():
    p = _Parser(prog="ltsmio", description="Least trimmed squares via mixed-integer optimization.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic instance")
    g.add_argument("-n", type=int, required=True, help="number of features")
    g.add_argument("-m", type=int, required=True, help="number of rows")
    g.add_argument("--tau", type=float, required=True, help="outlier fraction")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--out", required=True, help="output directory")

    s = sub.add_parser("solve", help="fit one dataset and print JSON")
    s.add_argument("--data", required=True)
    s.add_argument("--response", default="y")
    s.add_argument("--method", required=True, choices=[m.value for m in Method])
    s.add_argument("--lambda", dest="lam", type=float, default=0.05)
    b = s.add_mutually_exclusive_group(required=True)
    b.add_argument("--budget", type=int)
    b.add_argument("--budget-frac", type=float)
    s.add_argument("--time-limit", type=float, default=600.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--intercept", choices=["zero", "proxy"], default="proxy")
    s.add_argument("--M", dest="big_m", type=float, default=1000.0)
    s.add_argument("--parallel", action="store_true")
    s.add_argument("--warm-start", action="store_true")
    s.add_argument("--node-retune", action="store_true")
    s.add_argument("--truth", help="ground-truth JSON for risk and recall")

    h = sub.add_parser("bench", help="run a grid of solves and write CSV")
    src = h.add_mutually_exclusive_group(required=True)
    src.add_argument("--manifest", help="JSON manifest of datasets")
    src.add_argument("--synthetic", action="store_true", help="use the synthetic grid")
    h.add_argument("--methods", default="big-m,conic,conic-plus,alt-opt,lad,ls-l2")
    h.add_argument("--n", default="2,20")
    h.add_argument("--m", default="100,500")
    h.add_argument("--lambdas", default="0.01,0.1,0.2,0.3")
    h.add_argument("--taus", default="0.1,0.2,0.4")
    h.add_argument("--seeds", type=int, default=5)
    h.add_argument("--time-limit", type=float, default=600.0)
    h.add_argument("--intercept", choices=["zero", "proxy"], default="proxy")
    h.add_argument("-o", "--out", required=True, help="output CSV path")
    return p


def _finite(v):
    v = float(v)
    return v if math.isfinite(v) else None


def run_one(inst, spec, params, truth=None):
    """Solve and package the JSON-ready result dictionary."""
    rep = solve(inst, spec, params)
    sol = rep.incumbent
    x, icpt = unstandardize_solution(sol, inst)
    out = {
        "method": spec.method.value,
        "status": rep.status,
        "objective": _finite(sol.objective),
        "lower_bound": _finite(rep.lower_bound),
        "gap": _finite(rep.gap),
        "nodes": int(rep.nodes),
        "time_s": float(rep.time_s),
        "alg1_iterations": int(rep.alg1_iterations),
        "x": [float(v) for v in x],
        "intercept": float(icpt),
        "discarded_indices": [int(i) for i in sol.discarded],
    }
    if not spec.method.is_mio:
        del out["nodes"]
    if rep.d_weights is not None:
        out["d_weights"] = [float(v) for v in rep.d_weights]
    if spec.method.is_mio or spec.method is Method.ALT_OPT:
        out["lts_objective"] = out["objective"]
    else:
        problem = build_problem(inst, spec)
        out["lts_objective"] = trimmed_objective(problem, problem.coefficients(sol))
    if truth is not None:
        out["risk"] = risk(x, truth)
        try:
            out["recall"] = recall(sol.z, truth)
        except UndefinedMetricError:
            pass
    if rep.warnings:
        out["warnings"] = list(rep.warnings)
    return out


def _spec(args, m, lam, method):
    budget = args.budget if getattr(args, "budget", None) is not None else \
        budget_from_fraction(args.budget_frac, m)
    return ProblemSpec(lam=lam, budget=budget, intercept_mode=InterceptMode(args.intercept),
                       method=Method(method), time_limit_s=args.time_limit, seed=args.seed)


def cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds, truth = generate_synthetic(args.n, args.m, args.tau, args.seed)
    write_csv(out / "data.csv", ds)
    write_truth(out / "truth.json", truth)
    return EXIT_OK


def cmd_solve(args):
    ds = read_csv(args.data, args.response)
    inst = standardize(ds)
    spec = _spec(args, ds.m, args.lam, args.method)
    params = BnbParams(time_limit_s=args.time_limit, parallel=args.parallel,
                       warm_start=args.warm_start, node_retune=args.node_retune, big_m=args.big_m)
    truth = read_truth(args.truth) if args.truth else None
    result = run_one(inst, spec, params, truth)
    json.dump(result, sys.stdout)
    sys.stdout.write("\n")
    return EXIT_NUMERICAL if result["status"] == "warning_numerical" else EXIT_OK


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _bench_instances(args):
    """Yield ``(name, dataset, truth, lambdas, budgets)``."""
    if args.manifest:
        man = json.loads(Path(args.manifest).read_text())
        base = Path(args.manifest).parent
        lams = man.get("lambdas", [0.05, 0.1, 0.2])
        fracs = man.get("budget_fracs", [0.1, 0.2, 0.3, 0.4])
        for entry in man["datasets"]:
            ds = read_csv(base / entry["data"], entry.get("response", "y"))
            truth = read_truth(base / entry["truth"]) if entry.get("truth") else None
            budgets = sorted({budget_from_fraction(f, ds.m) for f in fracs})
            yield entry.get("name", entry["data"]), ds, truth, lams, budgets
        return
    for n, m, tau, seed in itertools.product(_ints(args.n), _ints(args.m), _floats(args.taus),
                                             range(args.seeds)):
        ds, truth = generate_synthetic(n, m, tau, seed)
        yield f"n{n}_m{m}_tau{tau}_s{seed}", ds, truth, _floats(args.lambdas), \
            [budget_from_fraction(tau, m)]


def bench_rows(args):
    """Run the grid; returns a list of CSV row dictionaries."""
    methods = [Method(m.strip()) for m in args.methods.split(",") if m.strip()]
    if args.manifest:
        man = json.loads(Path(args.manifest).read_text())
        methods = [Method(m) for m in man.get("methods", [m.value for m in methods])]
    rows = []
    for name, ds, truth, lams, budgets in _bench_instances(args):
        inst = standardize(ds)
        for lam, budget in itertools.product(lams, budgets):
            group = []
            for method in methods:
                row = {"dataset": name, "method": method.value, "lambda": lam, "budget": budget}
                try:
                    spec = ProblemSpec(lam=lam, budget=budget, intercept_mode=args.intercept,
                                       method=method, time_limit_s=args.time_limit)
                    res = run_one(inst, spec, BnbParams(time_limit_s=args.time_limit), truth)
                except (LTSError, ValueError, np.linalg.LinAlgError) as exc:
                    row.update(status=f"error: {exc}")
                    rows.append(row)
                    continue
                status = res["status"]
                t = args.time_limit if status == "time_limit" else res["time_s"]
                gap = 0.0 if status == "optimal" and method.is_mio else res["gap"]
                row.update(status=status, time_s=t, nodes=res.get("nodes", ""),
                           gap="" if gap is None else gap, objective=res["lts_objective"],
                           risk=res.get("risk", ""), recall=res.get("recall", ""))
                group.append(row)
                rows.append(row)
            if group:
                best = min(r["objective"] for r in group)
                for r in group:
                    r["quality_gap"] = (r["objective"] - best) / max(abs(best), 1e-12)
    return rows


def cmd_bench(args):
    rows = bench_rows(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=BENCH_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in BENCH_FIELDS})
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ltsmio: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench}
    try:
        return handlers[args.command](args)
    except KeyError as exc:
        print(f"ltsmio: error: {exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except (LTSError, OSError, ValueError) as exc:
        print(f"ltsmio: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
