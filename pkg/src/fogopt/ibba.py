"""Improved branch-and-bound over whole-task placements.

The search tree branches one task per level into its 2(M+1)+1 placements and
is explored depth-first with an explicit stack. Children are pushed in
reverse processor order so they pop in processor order; together with
strict-improvement incumbent updates this makes the first optimum found the
one preferred by the order (LFC: local, then fog, then cloud).

Each node is bounded by the partly relaxed convex program of its fixed
placements. Two exact shortcuts avoid most convex solves:

* the sum of each free task's cheapest surviving option is a lower bound on
  the relaxation, so nodes whose lower bound cannot beat the incumbent are
  pruned at once;
* if giving every free task a cheapest option (first in processor order that
  keeps its node feasible) yields a feasible assignment, that assignment
  attains the lower bound, so it is the relaxation's optimum and integral.
"""
from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import convex
from .model import CLOUD, FOG, LOCAL, Rates, Solution, SystemInstance, decision_from_options, energy_matrix, \
    make_solution, validate_solution
from .relaxation import Relaxation, build_relaxation, relaxed_decision
from .subproblem import NodeChecker

INTEGRAL_TOL = 1e-6
PRUNE_RTOL = 1e-6  # bounds of degenerate relaxations can sit ~1e-7 below the true value


class Verdict(str, enum.Enum):
    PRUNE = "prune"
    DESCEND = "descend"
    NEW_INCUMBENT = "new_incumbent"


@dataclass(frozen=True)
class BranchOrder:
    name: str = "LFC"
    cloud_first: bool = False
    task_order: tuple[int, ...] | None = None

    def processor_order(self, instance: SystemInstance) -> list[int]:
        m1 = len(instance.fog_nodes)
        fog = list(range(1, m1 + 1))
        cloud = [k for k in range(m1 + 1, 2 * m1 + 1) if not instance.is_excluded(k)]
        return [0] + (cloud + fog if self.cloud_first else fog + cloud)

    def tasks(self, instance: SystemInstance) -> list[int]:
        return list(self.task_order) if self.task_order is not None else list(range(instance.n_tasks))


LFC = BranchOrder("LFC")
LCF = BranchOrder("LCF", cloud_first=True)


def by_demand(order: BranchOrder, instance: SystemInstance) -> BranchOrder:
    """Same processor order, but branch the most CPU-hungry tasks first."""
    perm = sorted(range(instance.n_tasks), key=lambda i: -instance.tasks[i].cpu_cycles)
    return BranchOrder(order.name + "-demand", order.cloud_first, tuple(perm))


@dataclass(frozen=True)
class SearchNode:
    fixed: tuple[tuple[int, int], ...] = ()  # (task, option) in branching order

    @property
    def active_from(self) -> int:
        return len(self.fixed)


@dataclass
class SearchStats:
    nodes: int = 0
    relaxed_solves: int = 0  # nodes bounded by a relaxation, either shortcut or convex
    convex_solves: int = 0
    prunes: int = 0
    max_stack_depth: int = 0
    node_checks: int = 0  # SP2 calls made while checking node loads
    wall_time: float = 0.0


@dataclass
class IbbaResult:
    solution: Solution
    stats: SearchStats


def tree_arity(instance: SystemInstance) -> int:
    """Nominal branching factor 2(M+1)+1 (one slot is structurally excluded)."""
    return instance.n_options


def worst_case_nodes(instance: SystemInstance) -> float:
    k = tree_arity(instance)
    return k ** (instance.n_tasks + 1) / (k - 1)


def branch(node: SearchNode, instance: SystemInstance, order: BranchOrder = LFC) -> list[SearchNode]:
    """Children of ``node`` in processor order; empty once every task is placed."""
    tasks = order.tasks(instance)
    if node.active_from >= len(tasks):
        return []
    i = tasks[node.active_from]
    return [SearchNode(node.fixed + ((i, k),)) for k in order.processor_order(instance)]


def simplify(instance: SystemInstance, node: SearchNode, live: dict[int, list[int]] | None = None,
             cliques=None) -> Relaxation:
    """Relaxed program of ``node`` with every variable fixed at zero removed."""
    fixed = dict(node.fixed)
    free_live = None
    if live is not None:
        free_live = {i: opts for i, opts in live.items() if i not in fixed}
    return build_relaxation(instance, fixed, free_live, cliques=cliques)


def bound_and_prune(relaxed_value: float | None, integral: bool, incumbent: float,
                    rtol: float = PRUNE_RTOL) -> Verdict:
    """Algorithm-1 decision for one node.

    ``None`` means the relaxation is infeasible. A node is kept only when it can
    strictly improve on the incumbent, so among equal-energy optima the first
    one found survives.
    """
    if relaxed_value is None:
        return Verdict.PRUNE
    eps = rtol * max(1.0, abs(incumbent)) if math.isfinite(incumbent) else 0.0
    if relaxed_value >= incumbent - eps:
        return Verdict.PRUNE
    return Verdict.NEW_INCUMBENT if integral else Verdict.DESCEND


class _Budget(Exception):
    pass


class _Search:
    def __init__(self, instance: SystemInstance, order: BranchOrder, tol: float):
        self.inst = instance
        self.order = order
        self.tol = tol
        self.proc = order.processor_order(instance)
        self.rank = {k: r for r, k in enumerate(self.proc)}
        self.energy = energy_matrix(instance)
        self.checker = NodeChecker(instance)
        # options that could not meet the deadline even with a whole node to themselves
        self.live = {i: [k for k in self.proc if self.checker.option_alone_ok(i, k)]
                     for i in range(instance.n_tasks)}
        self.twin = twin_nodes(instance)
        self.cliques = self.conflict_cliques()
        self.stats = SearchStats()

    def conflict_cliques(self) -> list[list[tuple[int, int]]]:
        """Greedy maximal sets of placements on one node that pairwise cannot share it."""
        inst = self.inst
        out = []
        for j in range(len(inst.fog_nodes)):
            items = [(i, k) for i in range(inst.n_tasks) for k in self.live[i]
                     if k != 0 and inst.placement(k).node == j]
            items.sort(key=lambda it: -inst.tasks[it[0]].cpu_cycles)

            def clash(a, b):
                if a[0] == b[0]:
                    return True
                loads = [([], []) for _ in inst.fog_nodes]
                self._place(loads, a[0], a[1])
                return not self._fits(loads, b[1], b[0])

            seen = set()
            for seed in items:
                clique = [seed]
                for it in items:
                    if it != seed and all(clash(it, c) for c in clique):
                        clique.append(it)
                key = frozenset(clique)
                if len({i for i, _ in clique}) > 1 and key not in seen:
                    seen.add(key)
                    out.append(sorted(clique))
        return out

    def symmetric_duplicate(self, node: SearchNode) -> bool:
        """Last placement uses an empty node whose identical twin earlier in the order is also empty.

        Swapping the two nodes maps every completion of this child onto a
        completion of the twin's child with the same energy, and the twin's
        child is explored first, so nothing is lost.
        """
        if not node.fixed:
            return False
        i, k = node.fixed[-1]
        p = self.inst.placement(k)
        if p.kind == LOCAL:
            return False
        used = {self.inst.placement(kk).node for _, kk in node.fixed[:-1]}
        if p.node in used:
            return False
        for j in self.twin[p.node]:
            if j not in used:
                twin_opt = self.inst.option(p._replace(node=j))
                if self.rank[twin_opt] < self.rank[k]:
                    return True
        return False

    def loads_of(self, fixed: dict[int, int]) -> list[tuple[list[int], list[int]]] | None:
        """Per-node (fog, cloud) loads of the fixed tasks, or None if some node is overloaded."""
        inst = self.inst
        loads = [([], []) for _ in inst.fog_nodes]
        for i, k in fixed.items():
            if k not in self.live[i]:
                return None
            p = inst.placement(k)
            if p.kind == FOG:
                loads[p.node][0].append(i)
            elif p.kind == CLOUD:
                loads[p.node][1].append(i)
        for j, (fog, cld) in enumerate(loads):
            if (fog or cld) and self.checker.check(j, fog, cld) is None:
                return None
        return loads

    def _fits(self, loads, option: int, i: int) -> bool:
        p = self.inst.placement(option)
        if p.kind == LOCAL:
            return True
        fog, cld = loads[p.node]
        fog2 = fog + [i] if p.kind == FOG else fog
        cld2 = cld + [i] if p.kind == CLOUD else cld
        return self.checker.check(p.node, fog2, cld2) is not None

    def node_live(self, fixed: dict[int, int], loads) -> dict[int, list[int]] | None:
        """Options of free tasks that still fit next to the fixed load of their node.

        Adding tasks to a node never makes it easier to serve, so an option that
        does not fit now cannot be part of any completion.
        """
        out = {}
        for i in range(self.inst.n_tasks):
            if i in fixed:
                continue
            opts = [k for k in self.live[i] if self._fits(loads, k, i)]
            if not opts:
                return None
            out[i] = opts
        return out

    def lower_bound(self, fixed: dict[int, int], live: dict[int, list[int]]) -> float:
        total = sum(self.energy[i, k] for i, k in fixed.items())
        return total + sum(min(self.energy[i, k] for k in opts) for i, opts in live.items())

    def _place(self, loads, i, k):
        p = self.inst.placement(k)
        if p.kind == FOG:
            loads[p.node][0].append(i)
        elif p.kind == CLOUD:
            loads[p.node][1].append(i)

    def greedy(self, fixed: dict[int, int], loads, live) -> list[int] | None:
        """Cheapest-option completion of ``fixed`` or None when it does not fit."""
        loads = [(list(f), list(c)) for f, c in loads]
        options = [fixed.get(i, -1) for i in range(self.inst.n_tasks)]
        for i in self.order.tasks(self.inst):
            if i in fixed:
                continue
            best = min(self.energy[i, k] for k in live[i])
            tie = 1e-12 * max(1.0, abs(best))
            for k in live[i]:  # already in processor order
                if self.energy[i, k] <= best + tie and self._fits(loads, k, i):
                    self._place(loads, i, k)
                    options[i] = k
                    break
            else:
                return None
        return options

    def first_fit(self, task_order) -> list[int] | None:
        """Feasible assignment taking each task's cheapest option that still fits."""
        loads = [([], []) for _ in self.inst.fog_nodes]
        options = [-1] * self.inst.n_tasks
        for i in task_order:
            for k in sorted(self.live[i], key=lambda k: (self.energy[i, k], self.rank[k])):
                if self._fits(loads, k, i):
                    self._place(loads, i, k)
                    options[i] = k
                    break
            else:
                return None
        return options

    def heuristic_bound(self):
        """Energy of the best first-fit assignment over a few task orders."""
        inst = self.inst
        orders = [self.order.tasks(inst),
                  sorted(range(inst.n_tasks), key=lambda i: -inst.tasks[i].cpu_cycles),
                  sorted(range(inst.n_tasks), key=lambda i: -(self.energy[i, 0] - self.energy[i, 1:].min()))]
        best = None
        for order in orders:
            opts = self.first_fit(order)
            if opts is None:
                continue
            value = float(sum(self.energy[i, k] for i, k in enumerate(opts)))
            if best is None or value < best[0]:
                best = (value, opts)
        return best

    def complete(self, fixed: dict[int, int], loads, live, budget: int = 4000):
        """Energy-agnostic search for any feasible completion of ``fixed``.

        Returns an option list, ``None`` when no completion exists, or
        ``Ellipsis`` when the step budget ran out. Tasks with the fewest
        surviving options and largest CPU demand go first, local execution is
        tried first (it uses no shared resource), and empty interchangeable
        nodes are tried only once.
        """
        inst = self.inst
        free = sorted(live, key=lambda i: (len(live[i]), -inst.tasks[i].cpu_cycles))
        loads = [(list(f), list(c)) for f, c in loads]
        used = {inst.placement(k).node for k in fixed.values() if k != 0}
        options = [fixed.get(i, -1) for i in range(inst.n_tasks)]
        steps = [0]

        def rec(pos):
            if pos == len(free):
                return True
            steps[0] += 1
            if steps[0] > budget:
                raise _Budget
            i = free[pos]
            tried_empty: set[int] = set()
            for k in live[i]:
                p = inst.placement(k)
                if p.kind != LOCAL and p.node not in used:
                    key = (p.kind, min([p.node] + [j for j in self.twin[p.node] if j not in used]))
                    if key in tried_empty:
                        continue
                    tried_empty.add(key)
                if not self._fits(loads, k, i):
                    continue
                self._place(loads, i, k)
                fresh = p.kind != LOCAL and p.node not in used
                if fresh:
                    used.add(p.node)
                options[i] = k
                if rec(pos + 1):
                    return True
                if p.kind == FOG:
                    loads[p.node][0].pop()
                elif p.kind == CLOUD:
                    loads[p.node][1].pop()
                if fresh:
                    used.discard(p.node)
            return False

        try:
            return list(options) if rec(0) else None
        except _Budget:
            return Ellipsis

    def offer_ub(self, options: list[int]) -> None:
        value = float(sum(self.energy[i, k] for i, k in enumerate(options)))
        if self.ub is None or value < self.ub[0]:
            self.ub = (value, options)

    def convex_bound(self, node: SearchNode, live):
        relax = simplify(self.inst, node, live, self.cliques)
        self.stats.convex_solves += 1
        if relax.infeasible:
            return None, None, None
        res = convex.solve(relax.program, tol=self.tol)
        if res.status is convex.Status.INFEASIBLE:
            return None, None, None
        if res.status is not convex.Status.OPTIMAL:
            raise RuntimeError(f"relaxation solve failed: {res.status.value}")
        value = relax.constant + res.objective_value
        x = relaxed_decision(relax, res.point, self.inst)
        fixed = dict(node.fixed)
        free = [i for i in range(self.inst.n_tasks) if i not in fixed]
        if any(np.max(np.abs(x[i] - np.round(x[i]))) > INTEGRAL_TOL for i in free):
            return value, None, None
        options = [fixed[i] if i in fixed else int(np.argmax(x[i])) for i in range(self.inst.n_tasks)]
        alloc = {}
        for (i, j), (ru, rd, rf) in relax.rmap.items():
            p = self.inst.placement(options[i])
            if p.kind != LOCAL and p.node == j:
                alloc[(i, j)] = Rates(res.point[ru], res.point[rd], 0.0 if p.kind == CLOUD else res.point[rf])
        sol = make_solution(self.inst, decision_from_options(self.inst, options), alloc)
        if validate_solution(sol, self.inst):
            alloc = self.checker.allocate(options)
            if alloc is None:
                return value, None, None  # numerically integral but not verifiably feasible: keep branching
        # on an integral point the relaxed objective is the true energy
        return float(np.sum(self.energy[np.arange(len(options)), options])), options, alloc

    def evaluate(self, node: SearchNode, incumbent: float):
        """(value or None, integral options or None, allocation or None) for one node."""
        if self.symmetric_duplicate(node):
            return None, None, None
        fixed = dict(node.fixed)
        loads = self.loads_of(fixed)
        if loads is None:
            return None, None, None
        live = self.node_live(fixed, loads)
        if live is None:
            return None, None, None
        lb = self.lower_bound(fixed, live)
        if self.above_ub(lb) or bound_and_prune(lb, False, incumbent) is Verdict.PRUNE:
            return lb, None, None
        self.stats.relaxed_solves += 1
        options = self.greedy(fixed, loads, live)
        if options is not None:
            return lb, options, self.checker.allocate(options)
        found = self.complete(fixed, loads, live)
        if found is None:
            self.stats.relaxed_solves -= 1
            return None, None, None
        if found is not Ellipsis:
            self.offer_ub(found)
        return self.convex_bound(node, live)

    def above_ub(self, value: float | None) -> bool:
        # the heuristic value only prunes strictly worse nodes, so the search
        # still reaches (and selects) the first optimum in processor order itself
        if value is None or self.ub is None:
            return False
        return value > self.ub[0] + PRUNE_RTOL * max(1.0, abs(self.ub[0]))

    def run(self) -> IbbaResult:
        t0 = time.perf_counter()
        inst = self.inst
        self.ub = self.heuristic_bound()
        incumbent, best = math.inf, None
        stack = [SearchNode()]
        while stack:
            self.stats.max_stack_depth = max(self.stats.max_stack_depth, len(stack))
            node = stack.pop()
            self.stats.nodes += 1
            value, options, alloc = self.evaluate(node, incumbent)
            verdict = bound_and_prune(value, options is not None, incumbent)
            if verdict is not Verdict.PRUNE and self.above_ub(value):
                verdict = Verdict.PRUNE
            if verdict is Verdict.PRUNE:
                self.stats.prunes += 1
            elif verdict is Verdict.NEW_INCUMBENT:
                incumbent, best = value, (options, alloc)
            else:
                stack.extend(reversed(branch(node, inst, self.order)))
        if best is None and self.ub is not None:  # defensive: the search reaches the heuristic leaf itself
            best = (self.ub[1], self.checker.allocate(self.ub[1]))
        self.stats.node_checks = self.checker.solver_calls
        self.stats.wall_time = time.perf_counter() - t0
        if best is None:
            return IbbaResult(Solution("infeasible"), self.stats)
        options, alloc = best
        return IbbaResult(make_solution(inst, decision_from_options(inst, options), alloc), self.stats)


def twin_nodes(instance: SystemInstance) -> list[list[int]]:
    """For each node, the other nodes that are interchangeable with it for every task."""
    def signature(j):
        node = instance.fog_nodes[j]
        return (node.caps, node.is_virtual_cloud,
                tuple((p.tx_energy[j], p.rx_energy[j]) for p in instance.profiles))
    sig = [signature(j) for j in range(len(instance.fog_nodes))]
    return [[jj for jj in range(len(sig)) if jj != j and sig[jj] == sig[j]] for j in range(len(sig))]


def solve(instance: SystemInstance, order: BranchOrder = LFC, tol: float = 1e-8) -> IbbaResult:
    """Minimum-energy placement and allocation by depth-first branch-and-bound."""
    return _Search(instance, order, tol).run()
