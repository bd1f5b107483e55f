"""Experiment orchestration: run methods over scenario sweeps and emit result tables."""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import baselines, ffbd, ibba, oracle
from .model import CLOUD, FOG, Solution, SystemInstance, validate_solution
from .scenarios import ScenarioSpec, generate

EXACT_METHODS = ("IBBA-LFC", "IBBA-LCF", "FFBD-S", "FFBD-F", "ROP-FFBD-S", "ROP-FFBD-F", "ORACLE")
BASELINE_METHODS = ("ROP", "WOP", "AOP")
METHODS = EXACT_METHODS + BASELINE_METHODS
ENERGY_RTOL = 1e-6


class CrossCheckError(RuntimeError):
    """Two exact methods disagree on an instance."""


@dataclass
class MethodRun:
    method: str
    solution: Solution
    error_rate: float
    wall_time: float
    intermediate_problems: int = 0
    mp_iterations: int = 0
    standard_solver_calls: int = 0
    fast_detection_fraction: float = 0.0


@dataclass
class ResultRow:
    method: str
    experiment: int
    offload_fraction: float
    fog_fraction: float
    cloud_fraction: float
    error_rate: float
    mean_energy: float  # J per task
    mean_delay: float  # s
    wall_time_ms: float
    intermediate_problem_count: float
    mp_iterations: float
    fast_detection_fraction: float
    standard_solver_calls: float = 0.0
    feasible_reps: int = 0
    status: str = "feasible"


COLUMNS = [f.name for f in fields(ResultRow)]


def placement_fractions(solution: Solution, instance: SystemInstance) -> tuple[float, float, float]:
    """(offloaded, fog-processed, cloud-processed) shares of the tasks.

    Work sent to the virtual node runs on the cloud server, so it counts as
    cloud-processed rather than fog-processed.
    """
    n = max(1, instance.n_tasks)
    fog = cloud = 0
    for p in solution.placements(instance):
        if p.kind == CLOUD or (p.kind == FOG and p.node == instance.virtual_node):
            cloud += 1
        elif p.kind == FOG:
            fog += 1
    return (fog + cloud) / n, fog / n, cloud / n


def cloud_count(solution: Solution, instance: SystemInstance) -> int:
    return round(placement_fractions(solution, instance)[2] * instance.n_tasks)


def _exact_error_rate(solution: Solution, instance: SystemInstance) -> float:
    if not solution.feasible:
        return math.nan
    return len(baselines.late_tasks(solution, instance)) / max(1, instance.n_tasks)


def _from_ffbd(name: str, res: ffbd.FfbdResult, instance: SystemInstance, t0: float) -> MethodRun:
    st = res.stats
    return MethodRun(name, res.solution, _exact_error_rate(res.solution, instance), time.perf_counter() - t0,
                     st.mp_iterations + st.subproblems, st.mp_iterations, st.standard_solver_calls,
                     st.fast_detection_fraction)


def run_method(method: str, instance: SystemInstance) -> MethodRun:
    t0 = time.perf_counter()
    if method in ("IBBA-LFC", "IBBA-LCF"):
        res = ibba.solve(instance, ibba.LFC if method == "IBBA-LFC" else ibba.LCF)
        return MethodRun(method, res.solution, _exact_error_rate(res.solution, instance),
                         time.perf_counter() - t0, res.stats.relaxed_solves)
    if method in ("FFBD-S", "FFBD-F"):
        return _from_ffbd(method, ffbd.run(instance, method[-1]), instance, t0)
    if method in ("ROP-FFBD-S", "ROP-FFBD-F"):
        seed = baselines.rop(instance)
        return _from_ffbd(method, ffbd.run(instance, method[-1], warm_start=seed.solution), instance, t0)
    if method == "ORACLE":
        sol = oracle.enumerate_optimum(instance)
        return MethodRun(method, sol, _exact_error_rate(sol, instance), time.perf_counter() - t0)
    fn: dict[str, Callable] = {"ROP": baselines.rop, "WOP": baselines.wop, "AOP": baselines.aop}
    if method not in fn:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    res = fn[method](instance)
    return MethodRun(method, res.solution, res.error_rate, time.perf_counter() - t0,
                     1 if method == "ROP" else 0)


def cross_check(runs: Sequence[MethodRun], instance: SystemInstance, label: str = "") -> None:
    """Exact methods must agree on feasibility and energy and return error-free solutions."""
    exact = [r for r in runs if r.method in EXACT_METHODS]
    for r in exact:
        if r.solution.feasible and validate_solution(r.solution, instance):
            raise CrossCheckError(f"{label} {r.method} returned a solution with violations")
    if len(exact) < 2:
        return
    ref = exact[0]
    for r in exact[1:]:
        if r.solution.feasible != ref.solution.feasible:
            raise CrossCheckError(f"{label} {r.method} and {ref.method} disagree on feasibility")
        if r.solution.feasible:
            a, b = r.solution.total_energy, ref.solution.total_energy
            if abs(a - b) > ENERGY_RTOL * max(1.0, abs(b)):
                raise CrossCheckError(f"{label} {r.method} energy {a} != {ref.method} energy {b}")


def _aggregate(method: str, experiment: int, runs: list[MethodRun], instances: list[SystemInstance]) -> ResultRow:
    ok = [(r, inst) for r, inst in zip(runs, instances) if r.solution.feasible]

    def mean(values) -> float:
        values = list(values)
        return float(np.mean(values)) if values else math.nan

    fr = [placement_fractions(r.solution, inst) for r, inst in ok]
    return ResultRow(
        method=method,
        experiment=experiment,
        offload_fraction=mean(f[0] for f in fr),
        fog_fraction=mean(f[1] for f in fr),
        cloud_fraction=mean(f[2] for f in fr),
        error_rate=mean(r.error_rate for r in runs if not math.isnan(r.error_rate)),
        mean_energy=mean(r.solution.total_energy / inst.n_tasks for r, inst in ok),
        mean_delay=mean(float(np.mean(r.solution.per_task_delay)) for r, _ in ok),
        wall_time_ms=mean(1000.0 * r.wall_time for r in runs),
        intermediate_problem_count=mean(r.intermediate_problems for r in runs),
        mp_iterations=mean(r.mp_iterations for r in runs),
        fast_detection_fraction=mean(r.fast_detection_fraction for r in runs),
        standard_solver_calls=mean(r.standard_solver_calls for r in runs),
        feasible_reps=len(ok),
        status="infeasible" if not ok else "feasible",
    )


def run_suite(spec: ScenarioSpec, methods: Iterable[str], repetitions: int = 1,
              experiments: Iterable[int] | None = None,
              progress: Callable[[str], None] | None = None) -> list[ResultRow]:
    """One averaged row per (method, experiment); raises :class:`CrossCheckError` on disagreement."""
    methods = list(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    rows = []
    for idx in (range(spec.n_experiments) if experiments is None else experiments):
        per_method: dict[str, list[MethodRun]] = {m: [] for m in methods}
        instances = []
        for rep in range(repetitions):
            inst = generate(spec, idx, rep)
            instances.append(inst)
            runs = [run_method(m, inst) for m in methods]
            cross_check(runs, inst, f"{spec.kind} experiment {idx} rep {rep}:")
            for r in runs:
                per_method[r.method].append(r)
            if progress:
                progress(f"{spec.kind} experiment {idx} rep {rep} done")
        rows += [_aggregate(m, idx, per_method[m], instances) for m in methods]
    return rows


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def emit(rows: Sequence[ResultRow], path: str | Path, fmt: str = "csv") -> None:
    path = Path(path)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=COLUMNS)
            w.writeheader()
            for r in rows:
                w.writerow(asdict(r))
    elif fmt == "json":
        path.write_text(json.dumps({"columns": COLUMNS, "rows": [asdict(r) for r in rows]}, indent=2))
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def _coerce(doc: dict) -> ResultRow:
    out = {}
    for f in fields(ResultRow):
        v = doc[f.name]
        if f.name in ("method", "status"):
            out[f.name] = str(v)
        elif f.name in ("experiment", "feasible_reps"):
            out[f.name] = int(v)
        else:
            out[f.name] = float(v)
    return ResultRow(**out)


def load_rows(path: str | Path, fmt: str | None = None) -> list[ResultRow]:
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".")
    if fmt == "csv":
        with path.open(newline="") as fh:
            return [_coerce(d) for d in csv.DictReader(fh)]
    if fmt == "json":
        return [_coerce(d) for d in json.loads(path.read_text())["rows"]]
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def rows_equal(a: Sequence[ResultRow], b: Sequence[ResultRow]) -> bool:
    """Row-wise equality that treats NaN as equal to NaN."""
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        for name in COLUMNS:
            u, v = getattr(x, name), getattr(y, name)
            if isinstance(u, float) and isinstance(v, float) and math.isnan(u) and math.isnan(v):
                continue
            if u != v:
                return False
    return True


__all__ = ["BASELINE_METHODS", "COLUMNS", "CrossCheckError", "EXACT_METHODS", "METHODS", "MethodRun", "ResultRow",
           "cloud_count", "cross_check", "emit", "load_rows", "placement_fractions", "rows_equal", "run_method",
           "run_suite"]
