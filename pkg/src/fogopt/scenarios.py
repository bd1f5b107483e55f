"""Seeded instance generators for the two benchmark sweeps plus small random instances."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import MEGABITS_PER_MEGABYTE, CloudLink, FogNode, MobileProfile, SystemInstance, Task

SCENARIO1, SCENARIO2, CUSTOM = "scenario1", "scenario2", "custom"


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = SCENARIO1
    n_tasks: int = 10
    n_fog: int = 4
    input_mb: tuple[float, float] = (1.0, 10.0)
    output_mb: tuple[float, float] = (0.1, 1.0)
    alpha: tuple[float, float] = (0.1, 1.0)  # Gc per MB of input
    alpha_step: float = 0.1  # scenario 1 shift per experiment
    deadline: float = 10.0  # scenario 1 (fixed)
    deadline_start: float = 2.0  # scenario 2 sweep
    deadline_step: float = 1.0
    n_experiments: int = 10
    seed: int = 0
    # Table I
    local_cpu: float = 0.5
    energy_per_cycle: float = 1000.0 / 730.0
    fog_tx: float = 0.142
    fog_rx: float = 0.142
    direct_tx: float = 0.658
    direct_rx: float = 0.278
    uplink: float = 72.0
    downlink: float = 72.0
    fog_cpu: float = 10.0
    backhaul: float = 5.0
    cloud_cpu: float = 10.0

    def sweep_value(self, index: int) -> float:
        if self.kind == SCENARIO2:
            return self.deadline_start + self.deadline_step * index
        return self.alpha[0] + self.alpha_step * index


def scenario1(**kw) -> ScenarioSpec:
    return ScenarioSpec(kind=SCENARIO1, **kw)


def scenario2(**kw) -> ScenarioSpec:
    kw.setdefault("alpha", (0.1, 6.0))
    kw.setdefault("n_experiments", 9)
    return ScenarioSpec(kind=SCENARIO2, **kw)


def build_instance(spec: ScenarioSpec, input_mb, output_mb, cycles, deadlines) -> SystemInstance:
    m = spec.n_fog
    tx = (spec.fog_tx,) * m + (spec.direct_tx,)
    rx = (spec.fog_rx,) * m + (spec.direct_rx,)
    tasks = tuple(Task(i + 1, float(a) * MEGABITS_PER_MEGABYTE, float(b) * MEGABITS_PER_MEGABYTE, float(c), float(t))
                  for i, (a, b, c, t) in enumerate(zip(input_mb, output_mb, cycles, deadlines)))
    prof = MobileProfile(spec.local_cpu, spec.energy_per_cycle, tx, rx)
    nodes = tuple(FogNode(j + 1, spec.uplink, spec.downlink, spec.fog_cpu, j == m) for j in range(m + 1))
    inst = SystemInstance(tasks, (prof,) * len(tasks), nodes, CloudLink(spec.backhaul, spec.cloud_cpu))
    inst.validate()
    return inst


def generate(spec: ScenarioSpec, index: int, rep: int = 0) -> SystemInstance:
    """Instance ``index`` of the sweep; the draws depend only on (seed, rep).

    Every experiment of a sweep reuses the same random draws, so consecutive
    experiments differ only in the swept parameter.
    """
    rng = np.random.default_rng([spec.seed, rep])
    n = spec.n_tasks
    d_in = rng.uniform(*spec.input_mb, n)
    d_out = rng.uniform(*spec.output_mb, n)
    alpha = rng.uniform(*spec.alpha, n)
    if spec.kind == SCENARIO2:
        deadline = np.full(n, spec.sweep_value(index))
    else:
        alpha = alpha + spec.alpha_step * index
        deadline = np.full(n, spec.deadline)
    return build_instance(spec, d_in, d_out, alpha * d_in, deadline)


def random_small(seed: int, n_tasks: int, n_fog: int, tight: bool = True) -> SystemInstance:
    """Small instance for oracle comparisons.

    With ``tight`` the node capacities are shrunk so that resource conflicts,
    and therefore subproblem cuts, actually occur.
    """
    rng = np.random.default_rng(seed)
    spec = ScenarioSpec(kind=CUSTOM, n_tasks=n_tasks, n_fog=n_fog)
    if tight:
        spec = replace(spec, uplink=float(rng.uniform(8, 40)), downlink=float(rng.uniform(8, 40)),
                       fog_cpu=float(rng.uniform(0.8, 4)), backhaul=float(rng.uniform(3, 10)))
    d_in = rng.uniform(1, 10, n_tasks)
    d_out = rng.uniform(0.1, 1, n_tasks)
    alpha = rng.uniform(0.1, 3.0, n_tasks)
    deadline = rng.uniform(3, 15, n_tasks)
    return build_instance(spec, d_in, d_out, alpha * d_in, deadline)
