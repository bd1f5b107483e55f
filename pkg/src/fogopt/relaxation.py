"""Continuous relaxation of the joint offloading/allocation problem.

Binary placements become ``x in [0, 1]`` with one row ``sum_o x_io = 1`` per
task. The delay of a relaxed task is

    x_l * T_l + sum_j [ x_f^2 (D/r_u + Do/r_d + C/r_f) + x_c^2 (D/r_u + Do/r_d) + x_c * K ]

where ``K`` is the cloud backhaul-plus-execution time. Every term is either
linear or of the convex form ``x^2/r``, and on 0/1 points it equals the true
delay. Tasks whose placement is already fixed keep only the rates of their
own node (with a constant numerator), and options fixed to zero vanish from
the program together with the rate variables nobody else uses.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import convex
from .model import CLOUD, FOG, LOCAL, CloudInfeasible, SystemInstance, cloud_fixed_delay, energy_matrix, \
    local_delay, relative_size


@dataclass
class Relaxation:
    program: convex.ConvexProgram | None
    xmap: dict[tuple[int, int], int] = field(default_factory=dict)
    rmap: dict[tuple[int, int], tuple[int, int, int | None]] = field(default_factory=dict)
    constant: float = 0.0
    infeasible: bool = False  # a fixed placement misses its deadline outright

    def options_of(self, i: int) -> list[int]:
        return [k for (t, k) in self.xmap if t == i]


def build_relaxation(instance: SystemInstance, fixed: dict[int, int] | None = None,
                     live: dict[int, list[int]] | None = None, capacity_rows: bool = True,
                     cliques: list[list[tuple[int, int]]] | None = None) -> Relaxation:
    """Partly relaxed energy-minimisation program.

    ``fixed`` maps tasks to a placement option; every other task is relaxed
    over ``live[i]`` (default: all allowed options). With ``capacity_rows`` the
    program also carries ``sum_i x_ij * D'_i <= R_j`` for every node and
    resource: every integral feasible point satisfies them (a task needs more
    rate than its relative size), and they stop fractional placements from
    using a node almost for free.

    ``cliques`` are sets of (task, option) placements on one node of which at
    most one can be chosen in a feasible solution; each becomes a row
    ``sum x <= 1`` (minus the fixed members).
    """
    fixed = fixed or {}
    energy = energy_matrix(instance)
    pb = convex.ProgramBuilder()
    xmap: dict[tuple[int, int], int] = {}
    rmap: dict[tuple[int, int], tuple[int, int, int | None]] = {}
    const = 0.0

    # which (task, node) pairs need rates, and whether the CPU rate is used
    need: dict[tuple[int, int], bool] = {}
    options: dict[int, list[int]] = {}
    for i in range(instance.n_tasks):
        if i in fixed:
            opts = [fixed[i]]
        else:
            opts = list(live[i]) if live is not None else instance.allowed_options()
        opts = [k for k in opts if not instance.is_excluded(k)]
        options[i] = opts
        for k in opts:
            p = instance.placement(k)
            if p.kind != LOCAL:
                need[(i, p.node)] = need.get((i, p.node), False) or p.kind == FOG
    for (i, j), with_cpu in sorted(need.items()):
        caps = instance.fog_nodes[j].caps
        ru = pb.rate_var(f"ru[{i},{j}]", caps.uplink)
        rd = pb.rate_var(f"rd[{i},{j}]", caps.downlink)
        rf = pb.rate_var(f"rf[{i},{j}]", caps.cpu) if with_cpu else None
        rmap[(i, j)] = (ru, rd, rf)

    for i, task in enumerate(instance.tasks):
        opts = options[i]
        if not opts:
            return Relaxation(None, infeasible=True)
        k_cloud = cloud_fixed_delay(task, instance.cloud)
        t_local = local_delay(task, instance.profiles[i])
        if i in fixed:
            k = opts[0]
            const += energy[i, k]
            p = instance.placement(k)
            if p.kind == LOCAL:
                if t_local > task.deadline:
                    return Relaxation(None, infeasible=True)
                continue
            ru, rd, rf = rmap[(i, p.node)]
            ratios = [(task.input_size, None, ru), (task.output_size, None, rd)]
            rhs = task.deadline
            if p.kind == FOG:
                ratios.append((task.cpu_cycles, None, rf))
            else:
                rhs -= k_cloud
                if rhs <= 0:
                    return Relaxation(None, infeasible=True)
            pb.constraint(ratios=ratios, rhs=rhs)
            continue
        lin: dict[int, float] = {}
        ratios = []
        for k in opts:
            x = pb.var(f"x[{i},{k}]", 0.0, 1.0)
            xmap[(i, k)] = x
            p = instance.placement(k)
            if p.kind == LOCAL:
                lin[x] = t_local
                continue
            ru, rd, rf = rmap[(i, p.node)]
            ratios += [(task.input_size, x, ru), (task.output_size, x, rd)]
            if p.kind == FOG:
                ratios.append((task.cpu_cycles, x, rf))
            else:
                lin[x] = k_cloud
        pb.constraint(lin, ratios=ratios, rhs=task.deadline)
        pb.equality({xmap[(i, k)]: 1.0 for k in opts}, 1.0)
        pb.minimize({xmap[(i, k)]: energy[i, k] for k in opts})

    for j, node in enumerate(instance.fog_nodes):
        for col, cap in enumerate(node.caps):
            vars_ = [v[col] for (i, jj), v in rmap.items() if jj == j and v[col] is not None]
            if vars_:
                pb.constraint({v: 1.0 for v in vars_}, rhs=cap)
    if capacity_rows:
        _add_capacity_rows(instance, pb, fixed, xmap)
    for clique in cliques or ():
        rhs = 1.0 - sum(1 for i, k in clique if fixed.get(i) == k)
        lin = {xmap[item]: 1.0 for item in clique if item in xmap}
        if rhs > 0 and len(lin) > 1:
            pb.constraint(lin, rhs=rhs)
    return Relaxation(pb.build(), xmap, rmap, const)


def _add_capacity_rows(instance: SystemInstance, pb: convex.ProgramBuilder, fixed: dict[int, int],
                       xmap: dict[tuple[int, int], int]) -> None:
    m1 = len(instance.fog_nodes)
    rows = [[{}, 0.0] for _ in range(3 * m1)]

    def sizes(i, p):
        try:
            return relative_size(instance.tasks[i], p.kind, instance.cloud)
        except CloudInfeasible:
            return None

    for i, k in fixed.items():
        p = instance.placement(k)
        if p.kind == LOCAL or (rel := sizes(i, p)) is None:
            continue
        for col in range(3):
            rows[3 * p.node + col][1] += rel[col]
    for (i, k), v in xmap.items():
        p = instance.placement(k)
        if p.kind == LOCAL or (rel := sizes(i, p)) is None:
            continue
        for col in range(3):
            if rel[col] > 0:
                rows[3 * p.node + col][0][v] = rel[col]
    for j, node in enumerate(instance.fog_nodes):
        for col, cap in enumerate(node.caps):
            lin, used = rows[3 * j + col]
            if lin:
                pb.constraint(lin, rhs=cap - used)


def relaxed_decision(relax: Relaxation, x: np.ndarray, instance: SystemInstance) -> np.ndarray:
    """Fractional (N, 2(M+1)+1) decision matrix for free tasks; fixed tasks are left at zero."""
    out = np.zeros((instance.n_tasks, instance.n_options))
    for (i, k), v in relax.xmap.items():
        out[i, k] = x[v]
    return out


def relaxation_size(instance: SystemInstance) -> int:
    """Number of real variables in the fully relaxed program."""
    return build_relaxation(instance).program.n


__all__ = ["Relaxation", "build_relaxation", "relaxed_decision", "relaxation_size", "CLOUD"]
