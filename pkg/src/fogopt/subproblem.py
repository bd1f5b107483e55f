"""Per-node resource-allocation feasibility.

Once every task has a placement, the allocation problem separates by fog
node: node ``j`` must split its uplink, downlink and CPU among the tasks it
serves so that every one of them meets its deadline. In relative sizes
(demand divided by the usable deadline) the delay limit of a task reads
``beta_i = D'/r_u + Do'/r_d + C'/r_f <= 1``.

Three deciders are provided, from cheapest to most general: an aggregate
capacity test that proves infeasibility, a proportional allocation that
proves feasibility, and the slack program SP2 solved by the convex module.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import convex
from .model import CLOUD, FOG, CloudInfeasible, Rates, SystemInstance, relative_size

SP2_ZERO = 1e-6


class Outcome(str, enum.Enum):
    FEASIBLE_FAST = "feasible_fast"
    FEASIBLE_SOLVER = "feasible_solver"
    INFEASIBLE = "infeasible"


class SolverFailure(RuntimeError):
    """SP2 hit its iteration limit, so no verdict is available."""


@dataclass(frozen=True)
class Subproblem:
    node: int
    caps: Rates
    fog_tasks: tuple[int, ...]
    cloud_tasks: tuple[int, ...]
    sizes: tuple[tuple[float, float, float], ...]  # aligned with fog_tasks + cloud_tasks

    @property
    def tasks(self) -> tuple[int, ...]:
        return self.fog_tasks + self.cloud_tasks

    @property
    def empty(self) -> bool:
        return not self.fog_tasks and not self.cloud_tasks

    def kind(self, pos: int) -> str:
        return FOG if pos < len(self.fog_tasks) else CLOUD


@dataclass
class SubproblemOutcome:
    status: Outcome
    allocation: dict[int, Rates] | None  # task -> rates at this node
    solver_calls: int
    fast: bool
    reason: str | None = None  # violated dimension when a fast test decided infeasibility
    sp2_objective: float = math.nan
    cut: object = None  # filled in by the decomposition when the node is infeasible

    @property
    def feasible(self) -> bool:
        return self.status is not Outcome.INFEASIBLE


def make_subproblem(instance: SystemInstance, node: int, fog_tasks, cloud_tasks) -> Subproblem:
    fog_tasks, cloud_tasks = tuple(sorted(fog_tasks)), tuple(sorted(cloud_tasks))
    if cloud_tasks and node == instance.virtual_node:
        raise ValueError("the virtual node cannot forward tasks to the cloud")
    sizes = [relative_size(instance.tasks[i], FOG, instance.cloud) for i in fog_tasks]
    for i in cloud_tasks:
        try:
            sizes.append(relative_size(instance.tasks[i], CLOUD, instance.cloud))
        except CloudInfeasible:
            sizes.append((math.inf, math.inf, 0.0))
    return Subproblem(node, instance.fog_nodes[node].caps, fog_tasks, cloud_tasks, tuple(sizes))


def fast_infeasible(sub: Subproblem) -> str | None:
    """Aggregate capacity test: each task needs strictly more than its relative size."""
    if sub.empty:
        return None
    s = np.array(sub.sizes)
    if s[:, 0].sum() > sub.caps.uplink:
        return "Up"
    if s[:, 1].sum() > sub.caps.downlink:
        return "Down"
    if s[: len(sub.fog_tasks), 2].sum() > sub.caps.cpu:
        return "Cpu"
    return None


def balanced_ratio(sub: Subproblem) -> float:
    """beta under a split of every resource proportional to the demands."""
    if sub.empty:
        return 0.0
    s = np.array(sub.sizes)
    nf = len(sub.fog_tasks)
    return s[:, 0].sum() / sub.caps.uplink + s[:, 1].sum() / sub.caps.downlink + s[:nf, 2].sum() / sub.caps.cpu


def fast_feasible(sub: Subproblem) -> dict[int, Rates] | None:
    """Closed-form allocation that gives CPU first, then shares the links.

    Fog tasks get ``r_f = C'/beta_f``; their link demands are inflated by
    ``1/(1 - beta_f)`` to pay for the CPU time, and both links are then split
    in proportion. The result meets every deadline whenever the returned
    dict is not None.
    """
    if sub.empty:
        return {}
    s = np.array(sub.sizes, dtype=float)
    if not np.all(np.isfinite(s)):
        return None
    nf = len(sub.fog_tasks)
    beta_f = s[:nf, 2].sum() / sub.caps.cpu
    if beta_f >= 1:
        return None
    scaled = s[:, :2].copy()
    scaled[:nf] /= 1.0 - beta_f
    g_up = scaled[:, 0].sum() / sub.caps.uplink
    g_down = scaled[:, 1].sum() / sub.caps.downlink
    if g_up + g_down > 1:
        return None
    n = len(s)
    out = {}
    for pos, i in enumerate(sub.tasks):
        up = scaled[pos, 0] / g_up if g_up > 0 else sub.caps.uplink / n
        down = scaled[pos, 1] / g_down if g_down > 0 else sub.caps.downlink / n
        cpu = s[pos, 2] / beta_f if pos < nf else 0.0
        out[i] = Rates(up, down, cpu)
    return out


def build_sp2(sub: Subproblem) -> tuple[convex.ConvexProgram, list[tuple[int, int, int | None]]]:
    """Slack reformulation: every deadline kept, capacities softened by z >= 0.

    Rate boxes are wide enough (``R + 4 * demand``) that the program always has
    a strict interior, so its optimum ``z1 + z2 + z3`` is zero exactly when the
    node can serve its tasks.
    """
    pb = convex.ProgramBuilder()
    caps = sub.caps
    idx = []
    nf = len(sub.fog_tasks)
    for pos, i in enumerate(sub.tasks):
        du, dd, c = sub.sizes[pos]
        demand = du + dd + c
        ru = pb.rate_var(f"ru{i}", caps.uplink + 4 * demand)
        rd = pb.rate_var(f"rd{i}", caps.downlink + 4 * demand)
        rf = pb.rate_var(f"rf{i}", caps.cpu + 4 * demand) if pos < nf else None
        ratios = [(du, None, ru), (dd, None, rd)]
        if rf is not None:
            ratios.append((c, None, rf))
        pb.constraint(ratios=ratios, rhs=1.0)
        idx.append((ru, rd, rf))
    ub = np.array(pb.upper)
    z = []
    for k in range(3):
        # z_k never needs to exceed the largest possible total of its rates
        rows = [v[k] for v in idx if v[k] is not None]
        z.append(pb.var(f"z{k}", 0.0, float(ub[rows].sum()) + 1.0))
    for k, cap in enumerate((caps.uplink, caps.downlink, caps.cpu)):
        lin = {v[k]: 1.0 for v in idx if v[k] is not None}
        lin[z[k]] = -1.0
        pb.constraint(lin, rhs=cap)
    pb.minimize({v: 1.0 for v in z})
    return pb.build(), idx


def solve_sp2(sub: Subproblem, tol: float = 1e-8, x0=None) -> tuple[float, dict[int, Rates] | None]:
    """Return ``(z1 + z2 + z3, allocation)``; the allocation is None when infeasible."""
    if sub.empty:
        return 0.0, {}
    if not all(math.isfinite(v) for row in sub.sizes for v in row):
        return math.inf, None
    prog, idx = build_sp2(sub)
    res = convex.solve(prog, tol=tol, x0=x0)
    if res.status is not convex.Status.OPTIMAL:
        raise SolverFailure(f"SP2 at node {sub.node}: {res.status.value}")
    value = max(res.objective_value, 0.0)
    if value > SP2_ZERO:
        return value, None
    x = res.point
    alloc = {}
    for pos, i in enumerate(sub.tasks):
        ru, rd, rf = idx[pos]
        alloc[i] = Rates(x[ru], x[rd], 0.0 if rf is None else x[rf])
    return value, _fit_to_caps(alloc, sub.caps)


def _fit_to_caps(alloc: dict[int, Rates], caps: Rates) -> dict[int, Rates]:
    """Scale rates down onto the capacities (absorbs the tiny leftover slack)."""
    tot = np.sum([list(r) for r in alloc.values()], axis=0)
    cap = np.array(caps, dtype=float)
    scale = np.where(tot > cap, cap / np.maximum(tot, 1e-300), 1.0)
    return {i: Rates(*(np.array(r) * scale)) for i, r in alloc.items()}


def solve_subproblem_node(sub: Subproblem, mode: str = "F") -> SubproblemOutcome:
    """Decide one node. Mode ``F`` tries the closed-form tests before SP2; mode ``S`` always runs SP2."""
    if mode not in ("S", "F"):
        raise ValueError(f"mode must be 'S' or 'F', got {mode!r}")
    if sub.empty:
        return SubproblemOutcome(Outcome.FEASIBLE_FAST, {}, 0, True)
    if mode == "F":
        why = fast_infeasible(sub)
        if why is not None:
            return SubproblemOutcome(Outcome.INFEASIBLE, None, 0, True, why)
        alloc = fast_feasible(sub)
        if alloc is not None:
            return SubproblemOutcome(Outcome.FEASIBLE_FAST, alloc, 0, True)
    value, alloc = solve_sp2(sub)
    status = Outcome.FEASIBLE_SOLVER if alloc is not None else Outcome.INFEASIBLE
    return SubproblemOutcome(status, alloc, 1, False, sp2_objective=value)


def node_loads(instance: SystemInstance, options) -> list[tuple[list[int], list[int]]]:
    """Split a placement vector into per-node (fog tasks, cloud tasks)."""
    loads = [([], []) for _ in instance.fog_nodes]
    for i, k in enumerate(options):
        p = instance.placement(int(k))
        if p.kind == FOG:
            loads[p.node][0].append(i)
        elif p.kind == CLOUD:
            loads[p.node][1].append(i)
    return loads


class NodeChecker:
    """Memoised node feasibility for one instance (fast paths, then SP2)."""

    def __init__(self, instance: SystemInstance):
        self.instance = instance
        self.cache: dict[tuple, dict[int, Rates] | None] = {}
        self.solver_calls = 0

    def check(self, node: int, fog_tasks, cloud_tasks) -> dict[int, Rates] | None:
        key = (node, tuple(sorted(fog_tasks)), tuple(sorted(cloud_tasks)))
        if key in self.cache:
            return self.cache[key]
        sub = make_subproblem(self.instance, node, key[1], key[2])
        out = solve_subproblem_node(sub, "F")
        self.solver_calls += out.solver_calls
        self.cache[key] = out.allocation if out.feasible else None
        return self.cache[key]

    def allocate(self, options) -> dict[tuple[int, int], Rates] | None:
        """Allocation for a complete placement vector, or None if some node is overloaded."""
        out: dict[tuple[int, int], Rates] = {}
        for j, (fog, cld) in enumerate(node_loads(self.instance, options)):
            if not fog and not cld:
                continue
            alloc = self.check(j, fog, cld)
            if alloc is None:
                return None
            out.update({(i, j): r for i, r in alloc.items()})
        return out

    def option_alone_ok(self, i: int, option: int) -> bool:
        """Can task ``i`` meet its deadline with ``option`` if it had the resources to itself?"""
        inst = self.instance
        p = inst.placement(option)
        if p.kind == "L":
            return inst.tasks[i].cpu_cycles / inst.profiles[i].cpu_rate <= inst.tasks[i].deadline
        if p.kind == CLOUD and p.node == inst.virtual_node:
            return False
        fog, cld = ([i], []) if p.kind == FOG else ([], [i])
        return self.check(p.node, fog, cld) is not None


def allocate(instance: SystemInstance, options) -> dict[tuple[int, int], Rates] | None:
    return NodeChecker(instance).allocate(options)
