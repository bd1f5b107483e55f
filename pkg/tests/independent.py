"""Reference computations that share no code with the package solvers.

Node feasibility uses convex duality instead of an interior-point solve: a
node can serve its tasks iff

    max over lambda in the simplex of  sum_i (sum_k sqrt(lambda_k a_ik / R_k))^2  <= 1

where ``a_ik`` are the relative sizes (demand divided by the usable time).
The inner value is the cheapest lambda-weighted capacity usage that meets
task i's deadline, so the left side is concave in lambda and the maximum is
found by grid search with zooming.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def dual_value(demands: np.ndarray, caps) -> float:
    """Worst-case weighted capacity usage; <= 1 iff the node is feasible."""
    demands = np.asarray(demands, dtype=float).reshape(-1, 3)
    if len(demands) == 0:
        return 0.0
    c = demands / np.asarray(caps, dtype=float)[None, :]
    centre, width, best = np.array([1 / 3, 1 / 3]), 1.0, -math.inf
    for _ in range(6):
        g = np.linspace(-width, width, 81)
        a, b = np.meshgrid(centre[0] + g, centre[1] + g)
        a, b = a.ravel(), b.ravel()
        keep = (a >= 0) & (b >= 0) & (a + b <= 1)
        lam = np.stack([a[keep], b[keep], 1 - a[keep] - b[keep]], axis=1)
        val = (np.sqrt(lam[:, None, :] * c[None, :, :]).sum(axis=2) ** 2).sum(axis=1)
        k = int(np.argmax(val))
        best = max(best, float(val[k]))
        centre, width = lam[k, :2], width / 8
    return best


def relative_demands(task: tuple, kind: str, backhaul: float, cloud_cpu: float):
    """(D_in', D_out', C') with sizes in Mb and Gc; None when the cloud path cannot make the deadline."""
    d_in, d_out, cyc, dl = task
    if kind == "F":
        return d_in / dl, d_out / dl, cyc / dl
    residual = dl - (d_in + d_out) / backhaul - cyc / cloud_cpu
    if residual <= 0:
        return None
    return d_in / residual, d_out / residual, 0.0


def brute_force(tasks, nodes, profile, backhaul, cloud_cpu, tol=1e-9):
    """All minimum-energy placement vectors of a small instance.

    ``tasks`` are (D_in Mb, D_out Mb, C Gc, deadline s); ``nodes`` are
    (R_u, R_d, R_f), the last one being the direct cloud link; ``profile`` is
    (local rate, J/Gc, tx tuple, rx tuple). Options follow the package
    numbering: 0 local, 1..M+1 fog, M+2..2M+1 cloud through a real node.
    Returns (energy, [option vectors]) or (inf, []).
    """
    f_loc, v, tx, rx = profile
    m1 = len(nodes)
    options = [0] + list(range(1, m1 + 1)) + list(range(m1 + 1, 2 * m1))
    cache = {}

    def energy(i, k):
        d_in, d_out, cyc, _ = tasks[i]
        if k == 0:
            return v * cyc
        j = k - 1 if k <= m1 else k - m1 - 1
        return tx[j] * d_in + rx[j] * d_out

    def node_ok(j, fog, cld):
        key = (j, fog, cld)
        if key not in cache:
            rows = [relative_demands(tasks[i], "F", backhaul, cloud_cpu) for i in fog]
            rows += [relative_demands(tasks[i], "C", backhaul, cloud_cpu) for i in cld]
            cache[key] = all(r is not None for r in rows) and dual_value(np.array(rows), nodes[j]) <= 1 + 1e-9
        return cache[key]

    best, found = math.inf, []
    for vec in itertools.product(options, repeat=len(tasks)):
        if any(k == 0 and tasks[i][2] / f_loc > tasks[i][3] for i, k in enumerate(vec)):
            continue
        e = sum(energy(i, k) for i, k in enumerate(vec))
        if e > best + tol * max(1.0, best):
            continue
        ok = True
        for j in range(m1):
            fog = tuple(i for i, k in enumerate(vec) if k == j + 1)
            cld = tuple(i for i, k in enumerate(vec) if k == m1 + 1 + j)
            if (fog or cld) and not node_ok(j, fog, cld):
                ok = False
                break
        if not ok:
            continue
        if math.isinf(best) or e < best - tol * max(1.0, best):
            best, found = e, [vec]
        else:
            found.append(vec)
    return best, found


def instance_tuples(instance):
    """Plain-number view of a package instance for the functions above."""
    tasks = [(t.input_size, t.output_size, t.cpu_cycles, t.deadline) for t in instance.tasks]
    nodes = [(n.uplink_cap, n.downlink_cap, n.cpu_cap) for n in instance.fog_nodes]
    p = instance.profiles[0]
    return tasks, nodes, (p.cpu_rate, p.energy_per_cycle, p.tx_energy, p.rx_energy), \
        instance.cloud.backhaul_rate, instance.cloud.cpu_rate_per_task
