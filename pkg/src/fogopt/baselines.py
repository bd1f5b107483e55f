"""Comparison policies: everything local (WOP), relax-and-round (ROP), and
delay-minimising full offloading (AOP)."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import convex
from .ibba import LFC, twin_nodes
from .model import FOG, Rates, Solution, SystemInstance, cloud_fixed_delay, decision_from_options, make_solution, \
    validate_solution
from .relaxation import build_relaxation
from .subproblem import NodeChecker, node_loads

ROUND_TIE = 1e-6


@dataclass
class BaselineResult:
    solution: Solution
    error_rate: float
    errors: list[int] = field(default_factory=list)  # tasks that miss their deadline
    mean_delay: float = math.nan
    wall_time: float = 0.0


def late_tasks(solution: Solution, instance: SystemInstance, tol: float = 1e-6) -> list[int]:
    """Tasks with a delay violation according to :func:`validate_solution`."""
    return sorted({v.task for v in validate_solution(solution, instance, tol) if v.constraint == "C1"})


def _report(instance: SystemInstance, solution: Solution, t0: float) -> BaselineResult:
    if not solution.feasible:
        return BaselineResult(solution, 1.0, list(range(instance.n_tasks)), math.nan, time.perf_counter() - t0)
    late = late_tasks(solution, instance)
    delays = solution.per_task_delay
    return BaselineResult(solution, len(late) / max(1, instance.n_tasks), late,
                          float(np.mean(delays)) if len(delays) else 0.0, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# WOP
# ---------------------------------------------------------------------------


def wop(instance: SystemInstance) -> BaselineResult:
    t0 = time.perf_counter()
    options = [0] * instance.n_tasks
    sol = make_solution(instance, decision_from_options(instance, options), {}, status="feasible")
    return _report(instance, sol, t0)


# ---------------------------------------------------------------------------
# ROP
# ---------------------------------------------------------------------------


def round_decision(x: dict[tuple[int, int], float], instance: SystemInstance) -> list[int]:
    """Largest component per task; near-ties go to the option earliest in LFC order."""
    order = LFC.processor_order(instance)
    out = []
    for i in range(instance.n_tasks):
        vals = {k: x.get((i, k), 0.0) for k in order}
        top = max(vals.values())
        out.append(next(k for k in order if vals[k] >= top - ROUND_TIE))
    return out


def proportional_allocation(instance: SystemInstance, node: int, fog, cloud) -> dict[int, Rates]:
    """Split each resource of a node in proportion to the raw demands (used when no feasible split exists)."""
    caps = instance.fog_nodes[node].caps
    tasks = list(fog) + list(cloud)
    dem = np.array([[instance.tasks[i].input_size, instance.tasks[i].output_size,
                     instance.tasks[i].cpu_cycles if i in fog else 0.0] for i in tasks])
    out = {}
    tot = dem.sum(axis=0)
    for pos, i in enumerate(tasks):
        share = [dem[pos, c] / tot[c] if tot[c] > 0 else 1.0 / len(tasks) for c in range(3)]
        cpu = caps.cpu * share[2] if i in fog else 0.0
        out[i] = Rates(caps.uplink * share[0], caps.downlink * share[1], cpu)
    return out


def rop(instance: SystemInstance) -> BaselineResult:
    """Solve the fully relaxed problem, round, then look for an allocation node by node.

    Nodes that cannot serve their rounded load get a proportional split, so
    their late tasks show up as errors.
    """
    t0 = time.perf_counter()
    relax = build_relaxation(instance, capacity_rows=False)
    res = None if relax.infeasible else convex.solve(relax.program)
    if res is None or not res.optimal:
        return _report(instance, Solution("infeasible"), t0)
    x = {key: float(res.point[v]) for key, v in relax.xmap.items()}
    options = round_decision(x, instance)
    checker = NodeChecker(instance)
    alloc = {}
    for j, (fog, cld) in enumerate(node_loads(instance, options)):
        if not fog and not cld:
            continue
        if cld and j == instance.virtual_node:
            raise AssertionError("rounding picked an excluded option")
        found = checker.check(j, fog, cld)
        if found is None:
            found = proportional_allocation(instance, j, fog, cld)
        alloc.update({(i, j): r for i, r in found.items()})
    sol = make_solution(instance, decision_from_options(instance, options), alloc, status="feasible")
    return _report(instance, sol, t0)


# ---------------------------------------------------------------------------
# AOP
# ---------------------------------------------------------------------------


class _NodeDelay:
    """Minimum total delay a node can give a set of tasks.

    Without deadlines the problem separates by resource and ``min sum a_i/r_i``
    subject to ``sum r_i <= R`` is ``(sum sqrt(a_i))^2 / R`` with ``r_i``
    proportional to ``sqrt(a_i)``. When that split misses a deadline the
    deadline-constrained program is solved with the convex module instead.
    """

    def __init__(self, instance: SystemInstance):
        self.inst = instance
        self.checker = NodeChecker(instance)
        self.cache: dict[tuple, tuple[float, dict[int, Rates]] | None] = {}
        self.k_cloud = [cloud_fixed_delay(t, instance.cloud) for t in instance.tasks]

    def relaxed(self, node: int, fog, cloud) -> float:
        """Closed-form value ignoring deadlines; a lower bound, supermodular in the task set."""
        caps = self.inst.fog_nodes[node].caps
        tasks = [self.inst.tasks[i] for i in (*fog, *cloud)]
        up = sum(math.sqrt(t.input_size) for t in tasks) ** 2 / caps.uplink
        down = sum(math.sqrt(t.output_size) for t in tasks) ** 2 / caps.downlink
        cpu = sum(math.sqrt(self.inst.tasks[i].cpu_cycles) for i in fog) ** 2 / caps.cpu
        return up + down + cpu + sum(self.k_cloud[i] for i in cloud)

    def exact(self, node: int, fog, cloud):
        key = (node, tuple(sorted(fog)), tuple(sorted(cloud)))
        if key not in self.cache:
            self.cache[key] = self._solve(node, key[1], key[2])
        return self.cache[key]

    def _solve(self, node, fog, cloud):
        if not fog and not cloud:
            return 0.0, {}
        if self.checker.check(node, fog, cloud) is None:
            return None
        inst = self.inst
        caps = inst.fog_nodes[node].caps
        demand = {i: (inst.tasks[i].input_size, inst.tasks[i].output_size,
                      inst.tasks[i].cpu_cycles if i in fog else 0.0) for i in (*fog, *cloud)}
        roots = np.sqrt(np.array(list(demand.values())))
        tot = roots.sum(axis=0)
        if np.all(roots[:, :2] > 0) and np.all(roots[: len(fog), 2] > 0):
            alloc, total, ok = {}, 0.0, True
            for pos, i in enumerate(demand):
                r = Rates(caps.uplink * roots[pos, 0] / tot[0], caps.downlink * roots[pos, 1] / tot[1],
                          caps.cpu * roots[pos, 2] / tot[2] if i in fog else 0.0)
                d = demand[i][0] / r.uplink + demand[i][1] / r.downlink
                d += demand[i][2] / r.cpu if i in fog else self.k_cloud[i]
                ok &= d <= inst.tasks[i].deadline
                alloc[i] = r
                total += d
            if ok:
                return total, alloc
        return self._solve_convex(node, fog, cloud, demand)

    def _solve_convex(self, node, fog, cloud, demand):
        inst = self.inst
        caps = inst.fog_nodes[node].caps
        pb = convex.ProgramBuilder()
        idx, obj, const = {}, {}, 0.0
        for i, (du, dd, c) in demand.items():
            ru = pb.rate_var(f"ru{i}", caps.uplink)
            rd = pb.rate_var(f"rd{i}", caps.downlink)
            rf = pb.rate_var(f"rf{i}", caps.cpu) if i in fog else None
            limit = inst.tasks[i].deadline - (0.0 if i in fog else self.k_cloud[i])
            t = pb.var(f"t{i}", 0.0, limit)
            ratios = [(du, None, ru), (dd, None, rd)] + ([(c, None, rf)] if rf is not None else [])
            pb.constraint({t: -1.0}, ratios=ratios, rhs=0.0)
            obj[t] = 1.0
            const += 0.0 if i in fog else self.k_cloud[i]
            idx[i] = (ru, rd, rf)
        for col, cap in enumerate(caps):
            lin = {v[col]: 1.0 for v in idx.values() if v[col] is not None}
            if lin:
                pb.constraint(lin, rhs=cap)
        pb.minimize(obj)
        res = convex.solve(pb.build())
        if not res.optimal:
            return None
        x = res.point
        alloc = {i: Rates(x[ru], x[rd], 0.0 if rf is None else x[rf]) for i, (ru, rd, rf) in idx.items()}
        return res.objective_value + const, alloc


def aop(instance: SystemInstance) -> BaselineResult:
    """Offload every task and minimise the mean delay, deadlines still enforced.

    Depth-first branch-and-bound over placements. A node's closed-form delay
    without deadlines is supermodular in its task set, so the current loads
    plus each free task's cheapest marginal increase bound every completion
    from below.
    """
    t0 = time.perf_counter()
    inst = instance
    nd = _NodeDelay(inst)
    m1 = len(inst.fog_nodes)
    offload = [k for k in LFC.processor_order(inst) if k != 0]
    twins = twin_nodes(inst)
    cand = {}
    for i in range(inst.n_tasks):
        opts = [k for k in offload if nd.checker.option_alone_ok(i, k)]
        if not opts:
            return _report(inst, Solution("infeasible"), t0)
        cand[i] = opts
    order = sorted(range(inst.n_tasks), key=lambda i: -inst.tasks[i].cpu_cycles)

    def add(loads, i, k):
        p = inst.placement(k)
        fog, cld = loads[p.node]
        new = list(loads)
        new[p.node] = (fog + (i,), cld) if p.kind == FOG else (fog, cld + (i,))
        return new, p.node

    best = [math.inf, None, None]

    def finish(loads, options):
        total, alloc = 0.0, {}
        for j, (fog, cld) in enumerate(loads):
            got = nd.exact(j, fog, cld)
            if got is None:
                return
            total += got[0]
            alloc.update({(i, j): r for i, r in got[1].items()})
        if total < best[0] - 1e-9 * max(1.0, total):
            best[:] = [total, list(options), alloc]

    def rec(depth, loads, relaxed, options):
        if depth == len(order):
            finish(loads, options)
            return
        bound = sum(relaxed)
        kids = []
        for pos in range(depth, len(order)):
            i = order[pos]
            inc = []
            for k in cand[i]:
                new, j = add(loads, i, k)
                if nd.checker.check(j, *new[j]) is None:
                    continue
                inc.append((nd.relaxed(j, *new[j]) - relaxed[j], k))
            if not inc:
                return
            bound += min(inc)[0]
            if pos == depth:
                kids = sorted(inc)
        if bound >= best[0] - 1e-9 * max(1.0, best[0]):
            return
        i = order[depth]
        used = {j for j in range(m1) if loads[j][0] or loads[j][1]}
        for _, k in kids:
            j = inst.placement(k).node
            if j not in used and any(jj < j and jj not in used for jj in twins[j]):
                continue
            new, j = add(loads, i, k)
            rel = list(relaxed)
            rel[j] = nd.relaxed(j, *new[j])
            options[i] = k
            rec(depth + 1, new, rel, options)
        options[i] = -1

    rec(0, [((), ()) for _ in range(m1)], [0.0] * m1, [-1] * inst.n_tasks)
    if best[1] is None:
        return _report(inst, Solution("infeasible"), t0)
    sol = make_solution(inst, decision_from_options(inst, best[1]), best[2])
    return _report(inst, sol, t0)


__all__ = ["BaselineResult", "aop", "late_tasks", "proportional_allocation", "rop", "round_decision", "wop"]
