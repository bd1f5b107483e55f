"""The nine acceptance criteria, each printing a single PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE
from independent import brute_force, instance_tuples
from fogopt import convex, ibba
from fogopt.model import MobileProfile, Task, offload_benefit_threshold, validate_solution
from fogopt.oracle import enumerate_optimum
from fogopt.relaxation import build_relaxation
from fogopt.runner import EXACT_METHODS, cloud_count, placement_fractions, run_method
from fogopt.scenarios import generate, random_small, scenario1, scenario2
from fogopt.subproblem import SP2_ZERO, fast_feasible, fast_infeasible, solve_sp2
from test_convex import jacobian_mismatches
from test_ibba import multi_optimum_instance
from test_subproblem import random_subproblem

SWEEP_METHODS = [m for m in EXACT_METHODS if m != "ORACLE"]


def report(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def sweeps():
    out = {}
    for spec in (scenario1(), scenario2()):
        t0 = time.perf_counter()
        runs = {}
        for idx in range(spec.n_experiments):
            inst = generate(spec, idx)
            runs[idx] = (inst, {m: run_method(m, inst) for m in SWEEP_METHODS})
        out[spec.kind] = (runs, time.perf_counter() - t0)
    return out


def test_criterion_1_threshold():
    task = Task(1, 5.5 * 8, 0.55 * 8, 1.0, 10.0)
    prof = MobileProfile(0.5, 1000.0 / 730.0, (0.142, 0.658), (0.142, 0.278))
    t0 = time.perf_counter()
    value = offload_benefit_threshold(task, prof)
    ms = 1000 * (time.perf_counter() - t0)
    report(1, abs(value - 0.911) <= 0.002 and ms < 1.0, f"alpha* = {value:.4f} Gc/MB in {ms:.3f} ms")


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    bad = []
    for k in range(30):
        n, m = (2, 3, 4)[k % 3], (1, 2)[(k // 3) % 2]
        inst = random_small(500 + k, n, m)
        ref = enumerate_optimum(inst)
        for method in ("IBBA-LFC", "IBBA-LCF", "FFBD-S", "FFBD-F"):
            sol = run_method(method, inst).solution
            same = sol.feasible == ref.feasible and (
                not ref.feasible or abs(sol.total_energy - ref.total_energy) <= 1e-6 * max(1.0, ref.total_energy))
            if not same:
                bad.append((k, method))
    dt = time.perf_counter() - t0
    report(2, not bad and dt < 60, f"30 instances x 4 methods, mismatches={bad}, {dt:.1f} s")


def test_criterion_3_zero_error(sweeps):
    problems, detail = [], []
    for kind, (runs, dt) in sweeps.items():
        detail.append(f"{kind} {dt:.1f} s")
        if dt >= 120:
            problems.append(f"{kind} took {dt:.1f} s")
        for idx, (inst, res) in runs.items():
            for method, run in res.items():
                if run.solution.feasible and validate_solution(run.solution, inst):
                    problems.append(f"{kind} e{idx} {method}")
    report(3, not problems, f"{len(SWEEP_METHODS)} exact methods, {', '.join(detail)}, violations={problems}")


def test_criterion_4_fast_test_soundness():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    wrong = hits = 0
    for _ in range(200):
        sub = random_subproblem(rng)
        value, _ = solve_sp2(sub)
        if fast_feasible(sub) is not None:
            hits += 1
            wrong += value > SP2_ZERO
        if fast_infeasible(sub) is not None:
            hits += 1
            wrong += value <= SP2_ZERO
    dt = time.perf_counter() - t0
    report(4, wrong == 0 and dt < 30, f"200 subproblems, {hits} fast verdicts, {wrong} unconfirmed, {dt:.1f} s")


def test_criterion_5_fast_path_efficiency(sweeps):
    runs, _ = sweeps["scenario1"]
    calls_ok = all(res["FFBD-F"].standard_solver_calls <= res["FFBD-S"].standard_solver_calls
                   for _, res in runs.values())
    positive = sum(res["FFBD-F"].fast_detection_fraction > 0 for _, res in runs.values())
    calls = [(res["FFBD-F"].standard_solver_calls, res["FFBD-S"].standard_solver_calls) for _, res in runs.values()]
    report(5, calls_ok and positive >= len(runs) / 2,
           f"(F, S) solver calls per experiment {calls}; fast fraction > 0 on {positive}/{len(runs)}")


def test_criterion_6_selection_policy():
    checked, bad = 0, []
    for seed in range(12):
        inst = multi_optimum_instance(seed)
        _, optima = brute_force(*instance_tuples(inst))
        if len(optima) < 2:
            continue
        checked += 1
        lfc, lcf = ibba.solve(inst, ibba.LFC).solution, ibba.solve(inst, ibba.LCF).solution
        if (abs(lfc.total_energy - lcf.total_energy) > 1e-6 * lfc.total_energy
                or cloud_count(lfc, inst) > cloud_count(lcf, inst)):
            bad.append(seed)
    report(6, checked >= 10 and not bad, f"{checked} multi-optimum instances, violations={bad}")


def _offload(runs, method):
    return [placement_fractions(res[method].solution, inst)[0] if res[method].solution.feasible else None
            for inst, res in runs.values()]


def test_criterion_7_trends(sweeps):
    s1, _ = sweeps["scenario1"]
    s2, _ = sweeps["scenario2"]
    problems = []
    for method in SWEEP_METHODS:
        a = _offload(s1, method)
        if None in a or any(y < x for x, y in zip(a, a[1:])) or a[-1] != 1.0:
            problems.append(f"scenario1 {method} {a}")
        b = [v for v in _offload(s2, method) if v is not None]
        if any(y > x for x, y in zip(b, b[1:])):
            problems.append(f"scenario2 {method} {b}")
        if s2[0][1][method].solution.feasible:
            problems.append(f"{method} feasible at t=2 s")
    ref1 = [round(v, 2) for v in _offload(s1, "FFBD-F")]
    ref2 = [None if v is None else round(v, 2) for v in _offload(s2, "FFBD-F")]
    report(7, not problems, f"scenario1 offload {ref1}; scenario2 offload {ref2}; problems={problems}")


def test_criterion_8_dominance(sweeps):
    problems, compared = [], 0
    for kind, (runs, _) in sweeps.items():
        for idx, (inst, res) in runs.items():
            exact = res["FFBD-F"].solution
            if not exact.feasible:
                continue
            aop = run_method("AOP", inst).solution
            if not aop.feasible:
                continue
            compared += 1
            if aop.total_energy < exact.total_energy * (1 - 1e-9):
                problems.append(f"{kind} e{idx} AOP below FFBD")
            elif aop.total_energy <= exact.total_energy * (1 + 1e-9) and \
                    placement_fractions(exact, inst)[0] < 1.0:
                problems.append(f"{kind} e{idx} equality without full offloading")
    report(8, compared > 0 and not problems, f"{compared} experiments compared, problems={problems}")


def test_criterion_9_solver_health():
    rng = np.random.default_rng(9)
    prog = build_relaxation(random_small(1, 3, 2)).program
    mismatched = jacobian_mismatches(prog, 1000, rng)
    non_monotone = 0
    for seed in range(20):
        relax = build_relaxation(random_small(seed, 3, 2))
        if relax.infeasible:
            continue
        objs = [h[1] for h in convex.solve(relax.program).history]
        non_monotone += any(b > a + 1e-9 * max(1.0, abs(a)) for a, b in zip(objs, objs[1:]))
    report(9, mismatched == 0 and non_monotone == 0 and not math.isnan(prog.n),
           f"1000 points on a {prog.n}-variable program, {mismatched} gradient mismatches; "
           f"{non_monotone} non-monotone barrier runs")
