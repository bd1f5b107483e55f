"""Feasibility-finding Benders decomposition.

The master problem picks the cheapest placement vector that satisfies the
one-hot rows and every cut collected so far. Each fog node then checks
whether it can serve what the master sent it; an overloaded node returns a
cut that forbids exactly that set of tasks on it. Energy depends on the
placements only, so the first master solution every node accepts is optimal.

Cuts are linear rows ``sum coef * x[i, k] <= rhs`` over (task, option) pairs:

* resource cuts, one per node and resource, from the aggregate capacity test;
* prefixed cuts, decided per task before the first iteration (local execution
  that is both feasible and strictly cheapest, deadlines that rule out the
  local or cloud paths);
* subproblem cuts ``sum x <= t + s - 1`` over the t fog and s cloud tasks of
  an infeasible node.
"""
from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import convex
from .ibba import twin_nodes
from .model import CLOUD, FOG, LOCAL, CloudInfeasible, Placement, Solution, SystemInstance, cloud_fixed_delay, \
    decision_from_options, energy_matrix, local_delay, make_solution, relative_size, validate_solution
from .subproblem import Outcome, Subproblem, SubproblemOutcome, fast_feasible, fast_infeasible, make_subproblem, \
    node_loads, solve_subproblem_node

INTEGRAL_TOL = 1e-6
MASTER_RTOL = 1e-7
ROW_TOL = 1e-9


class CutKind(str, enum.Enum):
    RESOURCE_UP = "ResourceUp"
    RESOURCE_DOWN = "ResourceDown"
    RESOURCE_CPU = "ResourceCpu"
    SUBPROBLEM = "Subproblem"
    PREFIXED = "Prefixed"


RESOURCE_KINDS = (CutKind.RESOURCE_UP, CutKind.RESOURCE_DOWN, CutKind.RESOURCE_CPU)


@dataclass(frozen=True)
class Cut:
    kind: CutKind
    coeffs: tuple[tuple[tuple[int, int], float], ...]  # ((task, option), coefficient)
    rhs: float

    def lhs(self, options) -> float:
        return sum(c for (i, k), c in self.coeffs if options[i] == k)

    def violation(self, options) -> float:
        return self.lhs(options) - self.rhs


@dataclass
class FfbdStats:
    mp_iterations: int = 0
    standard_solver_calls: int = 0
    fast_detections: int = 0
    subproblems: int = 0
    cuts_by_kind: dict[str, int] = field(default_factory=lambda: {k.value: 0 for k in CutKind})
    master_objectives: list[float] = field(default_factory=list)
    master_nodes: int = 0
    lp_solves: int = 0
    wall_time: float = 0.0

    @property
    def fast_detection_fraction(self) -> float:
        return self.fast_detections / self.subproblems if self.subproblems else 0.0


@dataclass
class FfbdResult:
    solution: Solution
    stats: FfbdStats
    cuts: list[Cut]


# ---------------------------------------------------------------------------
# cuts
# ---------------------------------------------------------------------------


def _sizes(instance: SystemInstance, i: int, kind: str):
    try:
        return relative_size(instance.tasks[i], kind, instance.cloud)
    except CloudInfeasible:
        return None


def resource_cuts(instance: SystemInstance) -> list[Cut]:
    """``sum_i D'_i x_ij / R_j <= 1`` for every node and resource (3 per node)."""
    out = []
    for j, node in enumerate(instance.fog_nodes):
        f_opt = instance.option(Placement(FOG, j))
        c_opt = None if j == instance.virtual_node else instance.option(Placement(CLOUD, j))
        for col, (kind, cap) in enumerate(zip(RESOURCE_KINDS, node.caps)):
            coeffs = []
            for i in range(instance.n_tasks):
                fog = _sizes(instance, i, FOG)
                if fog[col] > 0:
                    coeffs.append(((i, f_opt), fog[col] / cap))
                cld = _sizes(instance, i, CLOUD) if c_opt is not None else None
                if cld is not None and cld[col] > 0:
                    coeffs.append(((i, c_opt), cld[col] / cap))
            out.append(Cut(kind, tuple(coeffs), 1.0))
    return out


def prefixed_cuts(instance: SystemInstance) -> list[Cut]:
    energy = energy_matrix(instance)
    offload = [k for k in instance.allowed_options() if k != 0]
    clouds = [instance.option(Placement(CLOUD, j)) for j in range(instance.n_fog)]
    out = []
    for i, task in enumerate(instance.tasks):
        t_local = local_delay(task, instance.profiles[i])
        if t_local > task.deadline:
            out.append(Cut(CutKind.PREFIXED, (((i, 0), 1.0),), 0.0))
        elif energy[i, 0] < energy[i, offload].min():
            # local is feasible and cheaper than any offload: -x_l <= -1
            out.append(Cut(CutKind.PREFIXED, (((i, 0), -1.0),), -1.0))
        if cloud_fixed_delay(task, instance.cloud) >= task.deadline:
            out.append(Cut(CutKind.PREFIXED, tuple(((i, k), 1.0) for k in clouds), 0.0))
    return out


def init_cuts(instance: SystemInstance) -> list[Cut]:
    return resource_cuts(instance) + prefixed_cuts(instance)


def subproblem_cut(instance: SystemInstance, sub: Subproblem) -> Cut:
    coeffs = [((i, instance.option(Placement(FOG, sub.node))), 1.0) for i in sub.fog_tasks]
    coeffs += [((i, instance.option(Placement(CLOUD, sub.node))), 1.0) for i in sub.cloud_tasks]
    return Cut(CutKind.SUBPROBLEM, tuple(coeffs), float(len(coeffs) - 1))


def lifted_cuts(instance: SystemInstance, cut: Cut, twins: list[list[int]]) -> list[Cut]:
    """Copies of a subproblem cut on every node interchangeable with the one that produced it."""
    nodes = {instance.placement(k).node for (_, k), _ in cut.coeffs}
    if len(nodes) != 1:
        return []
    j = nodes.pop()
    out = []
    for jj in twins[j]:
        coeffs = tuple(((i, instance.option(instance.placement(k)._replace(node=jj))), c)
                       for (i, k), c in cut.coeffs)
        out.append(Cut(cut.kind, coeffs, cut.rhs))
    return out


def solve_subproblem(instance: SystemInstance, sub: Subproblem, mode: str = "F") -> SubproblemOutcome:
    """Node verdict; an infeasible node carries the cut that forbids its task set."""
    out = solve_subproblem_node(sub, mode)
    if out.status is Outcome.INFEASIBLE:
        out = replace(out, cut=subproblem_cut(instance, sub))
    return out


# ---------------------------------------------------------------------------
# master problem
# ---------------------------------------------------------------------------


class Master:
    """Binary master: min e.x subject to one-hot rows and the cut set.

    Solved exactly by depth-first branch-and-bound over tasks. Each node first
    propagates the cuts (an option whose coefficient alone exceeds a row's
    remaining slack is dropped), bounds by the cheapest surviving option of
    every free task, and only when that cheapest completion breaks a cut
    solves the LP relaxation with the convex solver. LP bounds are computed in
    the top ``lp_depth`` levels of the tree only: deeper down they rarely prune
    more than the propagation does and each one costs a barrier solve.
    """

    def __init__(self, instance: SystemInstance, twins: list[list[int]] | None = None, lp_depth: int = 1):
        self.inst = instance
        self.lp_depth = lp_depth
        self.twins = twins or [[] for _ in instance.fog_nodes]
        self.node_of = np.array([-1] + [instance.placement(k).node for k in range(1, instance.n_options)])
        self.energy = energy_matrix(instance)
        self.n, self.k = self.energy.shape
        self.base = np.ones((self.n, self.k), dtype=bool)
        self.base[:, -1] = False  # cloud via the virtual node
        self.rank = {k: r for r, k in enumerate(instance.allowed_options())}
        self.rows = np.zeros((0, self.n, self.k))
        self.rhs = np.zeros(0)
        self.nodes = 0
        self.lp_solves = 0

    def add(self, cuts) -> None:
        cuts = list(cuts)
        if not cuts:
            return
        new = np.zeros((len(cuts), self.n, self.k))
        for r, cut in enumerate(cuts):
            for (i, k), c in cut.coeffs:
                new[r, i, k] += c
        self.rows = np.concatenate([self.rows, new])
        self.rhs = np.concatenate([self.rhs, [c.rhs for c in cuts]])

    def satisfied(self, options) -> bool:
        lhs = self.rows[:, np.arange(self.n), options].sum(axis=1)
        return bool(np.all(lhs <= self.rhs + ROW_TOL))

    def propagate(self, options: np.ndarray):
        """Surviving options of free tasks (``options < 0``), or None if a row cannot hold."""
        fixed = options >= 0
        idx = np.nonzero(fixed)[0]
        partial = self.rows[:, idx, options[idx]].sum(axis=1)
        free = np.nonzero(~fixed)[0]
        allowed = self.base[free].copy()
        sub = self.rows[:, free, :]
        while True:
            if not allowed.any(axis=1).all():
                return None
            masked = np.where(allowed[None], sub, np.inf)
            minc = masked.min(axis=2)
            slack = self.rhs - partial - minc.sum(axis=1)
            if np.any(slack < -ROW_TOL):
                return None
            ok = np.all(sub - minc[:, :, None] <= slack[:, None, None] + ROW_TOL, axis=0) & allowed
            if np.array_equal(ok, allowed):
                return free, allowed
            allowed = ok

    def duplicate(self, options, k) -> bool:
        """Option ``k`` opens an empty node whose lower-numbered twin is empty as well.

        Only valid while the cut set is invariant under swapping twins, which
        the lifted subproblem cuts guarantee.
        """
        j = self.node_of[k]
        if j < 0:
            return False
        used = set(self.node_of[options[options >= 0]].tolist())
        return j not in used and any(jj < j and jj not in used for jj in self.twins[j])

    def cheapest(self, free, allowed):
        e = np.where(allowed, self.energy[free], np.inf)
        best = e.min(axis=1)
        picks = []
        for row, b in zip(e, best):
            ties = [k for k in np.nonzero(row <= b)[0]]
            picks.append(min(ties, key=self.rank.__getitem__))
        return best.sum(), picks

    def lp_bound(self, options, free, allowed):
        """LP relaxation of the node: (value, fractional x) or None when infeasible."""
        pb = convex.ProgramBuilder()
        var = {}
        for t, i in enumerate(free):
            for k in np.nonzero(allowed[t])[0]:
                var[(i, int(k))] = pb.var(f"x[{i},{k}]", 0.0, 1.0)
            pb.equality({var[(i, int(k))]: 1.0 for k in np.nonzero(allowed[t])[0]}, 1.0)
        fixed = np.nonzero(options >= 0)[0]
        partial = self.rows[:, fixed, options[fixed]].sum(axis=1)
        for r in range(len(self.rhs)):
            lin = {v: self.rows[r, i, k] for (i, k), v in var.items() if self.rows[r, i, k] != 0}
            if not lin:
                continue
            top = partial[r] + sum(max(self.rows[r, i, k] for k in np.nonzero(allowed[t])[0])
                                   for t, i in enumerate(free))
            if top <= self.rhs[r] + ROW_TOL:
                continue  # cannot bind
            pb.constraint(lin, rhs=self.rhs[r] - partial[r])
        pb.minimize({v: self.energy[i, k] for (i, k), v in var.items()})
        self.lp_solves += 1
        res = convex.solve(pb.build())
        if res.status is convex.Status.INFEASIBLE:
            return None
        if not res.optimal:
            raise RuntimeError(f"master LP: {res.status.value}")
        return res.objective_value, {key: res.point[v] for key, v in var.items()}

    def solve(self, floor: float = -math.inf, ceiling: float = math.inf):
        """Optimal placement vector and its energy, or (None, inf) if the cuts exclude everything.

        ``floor`` is a known lower bound (the previous master optimum): a
        solution reaching it ends the search. ``ceiling`` is a known upper bound
        on the optimum, for instance the energy of a feasible warm start.
        """
        best, best_val = None, math.inf
        limit = ceiling + 3 * MASTER_RTOL * max(1.0, abs(ceiling)) if math.isfinite(ceiling) else math.inf
        stack = [(np.full(self.n, -1), 0)]

        def eps(v):
            return MASTER_RTOL * max(1.0, abs(v))

        while stack:
            options, depth = stack.pop()
            self.nodes += 1
            prop = self.propagate(options)
            while prop is not None and len(prop[0]) and (single := prop[1].sum(axis=1) == 1).any():
                # forced options are fixed outright; the LP would have no interior otherwise
                options = options.copy()
                options[prop[0][single]] = prop[1][single].argmax(axis=1)
                prop = self.propagate(options)
            if prop is None:
                continue
            free, allowed = prop
            if not len(free):
                value = float(self.energy[np.arange(self.n), options].sum())
                cap = min(best_val, limit)
                if not (value >= cap - eps(cap)) if math.isfinite(cap) else True:
                    best, best_val = options, value
                    if best_val <= floor + eps(floor):
                        break
                continue
            fixed_e = float(self.energy[np.arange(self.n), np.maximum(options, 0)][options >= 0].sum())
            lb, picks = self.cheapest(free, allowed)
            bound = fixed_e + lb
            cap = min(best_val, limit)
            if bound >= cap - eps(cap) if math.isfinite(cap) else False:
                continue
            full = options.copy()
            full[free] = picks
            candidate = None
            if self.satisfied(full):
                candidate = full
            elif depth < self.lp_depth:
                lp = self.lp_bound(options, free, allowed)
                if lp is None:
                    continue
                bound = fixed_e + lp[0]
                if math.isfinite(cap) and bound >= cap - eps(cap):
                    continue
                xs = lp[1]
                if all(abs(v - round(v)) <= INTEGRAL_TOL for v in xs.values()):
                    full = options.copy()
                    for (i, k), v in xs.items():
                        if v > 0.5:
                            full[i] = k
                    if self.satisfied(full):
                        candidate = full
                        bound = float(self.energy[np.arange(self.n), full].sum())
            if candidate is not None:
                best, best_val = candidate, bound
                if best_val <= floor + eps(floor):
                    break
                continue
            # branch on the first free task, cheapest options popped first
            i = free[0]
            kids = sorted((k for k in np.nonzero(allowed[0])[0] if not self.duplicate(options, k)),
                          key=lambda k: (self.energy[i, k], self.rank[int(k)]))
            for k in reversed(kids):
                child = options.copy()
                child[i] = int(k)
                stack.append((child, depth + 1))
        if best is None:
            return None, math.inf
        return [int(k) for k in best], float(self.energy[np.arange(self.n), best].sum())


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------


def run(instance: SystemInstance, mode: str = "F", warm_start: Solution | None = None,
        max_iterations: int = 100_000, parallel: bool = False, lift: bool = True,
        lp_depth: int = 1) -> FfbdResult:
    """Alternate master and node subproblems until every node accepts the master's placements.

    ``mode`` ``"F"`` lets the closed-form tests decide nodes where they can,
    ``"S"`` always runs the slack program. A feasible ``warm_start`` caps the
    master search with its energy; it never changes the returned optimum.
    With ``lift`` every subproblem cut is copied onto the interchangeable twins
    of its node, and the master skips placements that only permute twins.
    """
    if mode not in ("S", "F"):
        raise ValueError(f"mode must be 'S' or 'F', got {mode!r}")
    t0 = time.perf_counter()
    stats = FfbdStats()
    cuts = init_cuts(instance)
    for c in cuts:
        stats.cuts_by_kind[c.kind.value] += 1
    twins = twin_nodes(instance) if lift else [[] for _ in instance.fog_nodes]
    master = Master(instance, twins, lp_depth)
    master.add(cuts)
    seen = {(c.coeffs, c.rhs) for c in cuts}
    ceiling = math.inf
    if (warm_start is not None and warm_start.feasible
            and np.shape(warm_start.decision) == (instance.n_tasks, instance.n_options)
            and not validate_solution(warm_start, instance)):
        ceiling = warm_start.total_energy
    decided: dict[tuple, SubproblemOutcome] = {}
    pool = ThreadPoolExecutor() if parallel else None
    prev = -math.inf
    solution = Solution("infeasible")
    try:
        for _ in range(max_iterations):
            stats.mp_iterations += 1
            options, value = master.solve(floor=prev, ceiling=ceiling)
            if options is None:
                break
            stats.master_objectives.append(value)
            if value < prev - MASTER_RTOL * max(1.0, abs(prev)):
                raise RuntimeError(f"master objective decreased: {prev} -> {value}")
            prev = value
            subs = [make_subproblem(instance, j, fog, cld)
                    for j, (fog, cld) in enumerate(node_loads(instance, options)) if fog or cld]
            todo = [s for s in subs if (s.node, s.fog_tasks, s.cloud_tasks) not in decided]
            outcomes = pool.map(lambda s: solve_subproblem(instance, s, mode), todo) if pool else \
                (solve_subproblem(instance, s, mode) for s in todo)
            for s, out in zip(todo, outcomes):
                decided[(s.node, s.fog_tasks, s.cloud_tasks)] = out
                stats.subproblems += 1
                stats.standard_solver_calls += out.solver_calls
                stats.fast_detections += out.fast
            new = [decided[(s.node, s.fog_tasks, s.cloud_tasks)].cut for s in subs]
            new = [c for c in new if c is not None]
            if not new:
                alloc = {}
                for s in subs:
                    alloc.update({(i, s.node): r for i, r in decided[(s.node, s.fog_tasks, s.cloud_tasks)]
                                  .allocation.items()})
                solution = make_solution(instance, decision_from_options(instance, options), alloc)
                break
            new += [t for c in new for t in lifted_cuts(instance, c, twins)]
            new = [c for c in new if (c.coeffs, c.rhs) not in seen]
            seen.update((c.coeffs, c.rhs) for c in new)
            for c in new:
                stats.cuts_by_kind[c.kind.value] += 1
            cuts += new
            master.add(new)
        else:
            raise RuntimeError("FFBD did not converge within the iteration limit")
    finally:
        if pool:
            pool.shutdown()
    stats.master_nodes, stats.lp_solves = master.nodes, master.lp_solves
    stats.wall_time = time.perf_counter() - t0
    return FfbdResult(solution, stats, cuts)


__all__ = ["Cut", "CutKind", "FfbdResult", "FfbdStats", "Master", "fast_feasible", "fast_infeasible",
           "init_cuts", "prefixed_cuts", "resource_cuts", "run", "solve_subproblem", "subproblem_cut", "LOCAL"]
