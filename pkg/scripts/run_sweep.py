"""Run one scenario sweep for a set of methods and write the averaged rows."""
import argparse
import logging
import sys

from fogopt.runner import METHODS, CrossCheckError, emit, run_suite
from fogopt.scenarios import scenario1, scenario2

DEFAULT_METHODS = ["IBBA-LFC", "IBBA-LCF", "FFBD-S", "FFBD-F", "ROP-FFBD-F", "ROP", "WOP", "AOP"]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("scenario", choices=["scenario1", "scenario2"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--methods", default=",".join(DEFAULT_METHODS), help=f"comma list from {','.join(METHODS)}")
    p.add_argument("--out", default=None, help="defaults to <scenario>.csv")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    spec = (scenario1 if args.scenario == "scenario1" else scenario2)(seed=args.seed)
    try:
        rows = run_suite(spec, args.methods.split(","), args.reps, progress=logging.info)
    except CrossCheckError as exc:
        logging.error("cross-check failed: %s", exc)
        return 2
    out = args.out or f"{args.scenario}.{args.format}"
    emit(rows, out, args.format)
    for r in rows:
        print(f"{r.method:11s} e{r.experiment}  offload={r.offload_fraction:.2f}  "
              f"energy={r.mean_energy:.3f} J  err={r.error_rate:.2f}  {r.wall_time_ms:.0f} ms")
    print(f"wrote {len(rows)} rows to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
