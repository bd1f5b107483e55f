"""Command line entry point: ``fogopt gen | solve | bench | compare``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import oracle
from .model import load_instance, save_instance
from .runner import EXACT_METHODS, METHODS, CrossCheckError, emit, run_method, run_suite
from .scenarios import SCENARIO1, SCENARIO2, generate, random_small, scenario1, scenario2

log = logging.getLogger("fogopt")


def _spec(args):
    make = {SCENARIO1: scenario1, SCENARIO2: scenario2}[args.scenario]
    return make(seed=args.seed)


def _methods(values):
    out = []
    for v in values or []:
        out += [m.strip() for m in v.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad:
        raise SystemExit(f"unknown method(s): {', '.join(bad)}; choose from {', '.join(METHODS)}")
    return out


def cmd_gen(args) -> int:
    spec = _spec(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for idx in range(spec.n_experiments):
        for rep in range(args.reps):
            path = out / f"{spec.kind}_e{idx}_r{rep}.json"
            save_instance(generate(spec, idx, rep), path)
            print(path)
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    method = _methods(args.method or ["FFBD-F"])[0]
    run = run_method(method, inst)
    sol = run.solution
    doc = {
        "method": method,
        "status": sol.status,
        "total_energy": None if math.isnan(sol.total_energy) else sol.total_energy,
        "error_rate": None if math.isnan(run.error_rate) else run.error_rate,
        "wall_time_ms": 1000.0 * run.wall_time,
        "placements": None if not sol.feasible else
        [{"task": i, "kind": p.kind, "node": p.node} for i, p in enumerate(sol.placements(inst))],
        "delays": None if sol.per_task_delay is None else [float(d) for d in sol.per_task_delay],
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_bench(args) -> int:
    spec = _spec(args)
    methods = _methods(args.method or ["IBBA-LFC", "FFBD-F", "ROP", "WOP", "AOP"])
    try:
        rows = run_suite(spec, methods, args.reps, progress=log.info)
    except CrossCheckError as exc:
        print(f"cross-check failed: {exc}", file=sys.stderr)
        return 2
    if args.out:
        emit(rows, args.out, args.format)
    else:
        for r in rows:
            print(f"{r.method:11s} e{r.experiment} status={r.status} energy/task={r.mean_energy:.4f} "
                  f"offload={r.offload_fraction:.2f} cloud={r.cloud_fraction:.2f} error={r.error_rate:.2f}")
    return 0


def cmd_compare(args) -> int:
    methods = _methods(args.method) or [m for m in EXACT_METHODS if m != "ORACLE"]
    failures = 0
    for k in range(args.count):
        n, m = (2, 3, 4)[k % 3], (1, 2)[(k // 3) % 2]
        inst = random_small(args.seed + k, n, m)
        ref = oracle.enumerate_optimum(inst)
        for method in methods:
            sol = run_method(method, inst).solution
            same = sol.feasible == ref.feasible and (
                not ref.feasible or abs(sol.total_energy - ref.total_energy) <= 1e-6 * max(1.0, ref.total_energy))
            if not same:
                failures += 1
                print(f"MISMATCH seed={args.seed + k} N={n} M={m} {method}: "
                      f"{sol.total_energy} vs oracle {ref.total_energy}", file=sys.stderr)
    print(f"{args.count} instances, {len(methods)} methods, {failures} mismatches")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fogopt", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", choices=[SCENARIO1, SCENARIO2], default=SCENARIO1)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--reps", type=int, default=1)

    g = sub.add_parser("gen", help="write instance files of a scenario sweep")
    common(g)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance file with one method")
    s.add_argument("instance")
    s.add_argument("--method", action="append", help=", ".join(METHODS))
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a scenario sweep and emit a result table")
    common(b)
    b.add_argument("--method", action="append", help="repeatable or comma-separated")
    b.add_argument("--out")
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("compare", help="cross-check exact methods against brute force")
    common(c, scenario=False)
    c.add_argument("--count", type=int, default=30)
    c.add_argument("--method", action="append")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
