"""Command-line entry points: ``smr gen``, ``smr solve`` and ``smr compare``."""
from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bench import GenSpec, generate, read_instance, write_instance
from .dual import SMROracle
from .energy import is_feasible
from .optimizers import METHODS, default_config, run
from .primal import COMPONENT_RANDOM, decode

PERCENTILES = (25, 50, 75)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def write_summary(path, record: dict) -> None:
    with open(path, "w") as fh:
        for k, v in record.items():
            fh.write(f"{k}={_fmt(v)}\n")


def read_summary(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.rstrip("\n").split("=", 1)
                out[k] = v
    return out


def solve(model, cfg) -> tuple:
    """Run one driver; returns ``(summary record, Trace)``."""
    t0 = time.perf_counter()
    point, trace = run(model, cfg)
    mode = "nsmr" if cfg.method == "nsmr" else "smr"
    ev = SMROracle(model, mode).evaluate(point)
    last = trace.rows[-1]
    best_primal = last.best_primal
    # final report also tries the seeded component rule
    dec = decode(model, ev, COMPONENT_RANDOM, seed=cfg.seed)
    if not model.has_constraints or is_feasible(model, dec.labeling):
        best_primal = min(best_primal, dec.energy)
    dual = max(last.best_dual, ev.value)
    # a strong certificate, or a primal meeting the bound (zero overall gap)
    certificate = bool(ev.strong_certificate) or (
        math.isfinite(best_primal) and best_primal - dual <= 1e-9 * model.scale)
    return dict(
        method=cfg.method,
        final_dual=float(dual),
        best_primal=float(best_primal),
        gap=float(best_primal - dual),
        certificate=certificate,
        stop_reason=trace.stop_reason,
        iterations=len(trace),
        oracle_calls=int(last.oracle_calls),
        wall_time=time.perf_counter() - t0,
    ), trace


def cmd_gen(args) -> int:
    spec = GenSpec(args.rows, args.cols, args.labels, signed=args.signed,
                   class_size_constraints=args.class_constraints, seed=args.seed)
    write_instance(generate(spec), args.out)
    return 0


def _config(args):
    overrides = dict(max_iter=args.max_iter, seed=args.seed)
    if args.gamma is not None:
        overrides["gamma"] = args.gamma
    if args.time_budget is not None:
        overrides["time_budget"] = args.time_budget
    return default_config(args.method, **overrides)


def cmd_solve(args) -> int:
    model = read_instance(args.instance)
    record, trace = solve(model, _config(args))
    if args.trace:
        trace.write_csv(args.trace)
    if args.summary:
        write_summary(args.summary, record)
    print(" ".join(f"{k}={_fmt(v)}" for k, v in record.items()))
    return 0


def compare_one(task):
    """Gaps of the non-submodular relaxation and of the subtraction trick on
    one signed instance; both are measured against the better primal."""
    seed, rows, cols, labels, max_iter = task
    model = generate(GenSpec(rows, cols, labels, signed=True, seed=seed))
    nsmr, _ = solve(model, default_config("nsmr", nsmr_driver="bundle", max_iter=max_iter, seed=seed))
    smr, _ = solve(model, default_config("bundle", max_iter=max_iter, seed=seed))
    primal = min(nsmr["best_primal"], smr["best_primal"])
    return seed, max(primal - nsmr["final_dual"], 0.0), max(primal - smr["final_dual"], 0.0)


def compare_table(results) -> list:
    nsmr = np.array([r[1] for r in results])
    sub = np.array([r[2] for r in results])
    return [(p, float(np.percentile(nsmr, p)), float(np.percentile(sub, p))) for p in PERCENTILES]


def cmd_compare(args) -> int:
    tasks = [(args.seed + k, args.rows, args.cols, args.labels, args.max_iter) for k in range(args.n)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(compare_one, tasks))
    else:
        results = [compare_one(t) for t in tasks]
    table = compare_table(results)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["percentile", "nsmr", "subtraction"])
        for p, a, b in table:
            w.writerow([p, repr(a), repr(b)])
    for p, a, b in table:
        print(f"{p:>3}%  nsmr={a:.6g}  subtraction={b:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random grid instance")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--labels", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--signed", action="store_true", help="Potts weights of either sign")
    g.add_argument("--class-constraints", action="store_true", help="add class-size equalities")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="maximize the dual of an instance")
    s.add_argument("--instance", required=True)
    s.add_argument("--method", choices=METHODS, default="subgradient")
    s.add_argument("--gamma", type=float, default=None)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--time-budget", type=float, default=None, help="seconds")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trace", help="trace CSV path")
    s.add_argument("--summary", help="key=value summary path")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="integrality gaps of the two pairwise relaxations")
    c.add_argument("--n", type=int, default=10)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--rows", type=int, default=10)
    c.add_argument("--cols", type=int, default=10)
    c.add_argument("--labels", type=int, default=5)
    c.add_argument("--max-iter", type=int, default=1000)
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # any failed run is reported with a nonzero exit
        print(f"smr {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
