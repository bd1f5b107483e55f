"""Domain types and closed-form delay/energy formulas for the mobile/fog/cloud network.

Internal units are fixed throughout the package:

* data volume: megabits (Mb); link rates: Mbps
* computation: gigacycles (Gc); processing rates: Gc/s
* time: seconds; energy: joules

Instance files give data sizes in megabytes; :func:`load_instance` converts
them with :data:`MEGABITS_PER_MEGABYTE`.

Node positions are 0-based inside the package: nodes ``0..M-1`` are the real
fog nodes and node ``M`` is the virtual node standing for the device's direct
link to the cloud server. A placement option index ``k`` for a task runs over
``0`` (local), ``1..M+1`` (fog node ``k-1``) and ``M+2..2M+2`` (cloud through
fog node ``k-M-2``). The last option, cloud forwarding by the virtual node,
is never created.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

MEGABITS_PER_MEGABYTE = 8.0
SCHEMA_VERSION = 1

LOCAL, FOG, CLOUD = "L", "F", "C"


class CloudInfeasible(ValueError):
    """A cloud-forwarded task cannot meet its deadline whatever the rates."""


class Rates(NamedTuple):
    uplink: float
    downlink: float
    cpu: float = 0.0


class Placement(NamedTuple):
    kind: str  # LOCAL, FOG or CLOUD
    node: int = -1  # 0-based node position, -1 for local

    def label(self) -> str:
        return "L" if self.kind == LOCAL else f"{self.kind}{self.node + 1}"


@dataclass(frozen=True)
class Task:
    id: int
    input_size: float  # Mb
    output_size: float  # Mb
    cpu_cycles: float  # Gc
    deadline: float  # s

    def validate(self) -> None:
        if not self.input_size > 0:
            raise ValueError(f"task {self.id}: input_size must be > 0")
        if not self.output_size >= 0:
            raise ValueError(f"task {self.id}: output_size must be >= 0")
        if not self.cpu_cycles > 0:
            raise ValueError(f"task {self.id}: cpu_cycles must be > 0")
        if not self.deadline > 0:
            raise ValueError(f"task {self.id}: deadline must be > 0")


@dataclass(frozen=True)
class MobileProfile:
    cpu_rate: float  # Gc/s
    energy_per_cycle: float  # J/Gc
    tx_energy: tuple[float, ...]  # J/Mb per node position
    rx_energy: tuple[float, ...]

    def validate(self, n_nodes: int | None = None) -> None:
        if not (self.cpu_rate > 0 and self.energy_per_cycle > 0):
            raise ValueError("cpu_rate and energy_per_cycle must be > 0")
        if len(self.tx_energy) != len(self.rx_energy):
            raise ValueError("tx/rx energy vectors differ in length")
        if n_nodes is not None and len(self.tx_energy) != n_nodes:
            raise ValueError(f"energy vectors need {n_nodes} entries, got {len(self.tx_energy)}")
        if min(self.tx_energy + self.rx_energy) < 0:
            raise ValueError("transfer energies must be >= 0")


@dataclass(frozen=True)
class FogNode:
    id: int  # 1..M+1
    uplink_cap: float  # Mbps
    downlink_cap: float  # Mbps
    cpu_cap: float  # Gc/s
    is_virtual_cloud: bool = False

    def validate(self) -> None:
        if min(self.uplink_cap, self.downlink_cap, self.cpu_cap) <= 0:
            raise ValueError(f"fog node {self.id}: capacities must be > 0")

    @property
    def caps(self) -> Rates:
        return Rates(self.uplink_cap, self.downlink_cap, self.cpu_cap)


@dataclass(frozen=True)
class CloudLink:
    backhaul_rate: float  # Mbps between a fog node and the cloud
    cpu_rate_per_task: float  # Gc/s

    def validate(self) -> None:
        if not (self.backhaul_rate > 0 and self.cpu_rate_per_task > 0):
            raise ValueError("cloud rates must be > 0")


@dataclass(frozen=True)
class SystemInstance:
    tasks: tuple[Task, ...]
    profiles: tuple[MobileProfile, ...]
    fog_nodes: tuple[FogNode, ...]
    cloud: CloudLink

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def n_fog(self) -> int:
        """M, the number of real fog nodes."""
        return len(self.fog_nodes) - 1

    @property
    def n_options(self) -> int:
        """Nominal arity 2(M+1)+1 of a task's one-hot decision vector."""
        return 2 * len(self.fog_nodes) + 1

    @property
    def virtual_node(self) -> int:
        return len(self.fog_nodes) - 1

    def validate(self) -> None:
        if len(self.tasks) != len(self.profiles):
            raise ValueError("one mobile profile per task is required")
        if len(self.fog_nodes) < 1:
            raise ValueError("at least the virtual cloud node is required")
        for t in self.tasks:
            t.validate()
        for p in self.profiles:
            p.validate(len(self.fog_nodes))
        for n in self.fog_nodes:
            n.validate()
        flags = [n.is_virtual_cloud for n in self.fog_nodes]
        if sum(flags) != 1 or not flags[-1]:
            raise ValueError("exactly one virtual cloud node, placed last, is required")
        self.cloud.validate()

    # option index <-> placement -------------------------------------------------

    def placement(self, option: int) -> Placement:
        m1 = len(self.fog_nodes)
        if option == 0:
            return Placement(LOCAL)
        if 1 <= option <= m1:
            return Placement(FOG, option - 1)
        if m1 < option < 2 * m1 + 1:
            return Placement(CLOUD, option - m1 - 1)
        raise IndexError(option)

    def option(self, placement: Placement) -> int:
        m1 = len(self.fog_nodes)
        if placement.kind == LOCAL:
            return 0
        if placement.kind == FOG:
            return 1 + placement.node
        return 1 + m1 + placement.node

    def is_excluded(self, option: int) -> bool:
        """Cloud forwarding by the virtual node has no variable at all."""
        return option == 2 * len(self.fog_nodes)

    def allowed_options(self) -> list[int]:
        return [k for k in range(self.n_options) if not self.is_excluded(k)]


class Violation(NamedTuple):
    constraint: str  # "C1".."C5"
    task: int | None
    node: int | None
    amount: float


@dataclass
class Solution:
    """A decision/allocation pair together with its evaluated energy and delays.

    ``status`` is one of ``"optimal"``, ``"feasible"`` (a heuristic answer that
    may violate deadlines) or ``"infeasible"``.
    """

    status: str
    decision: np.ndarray | None = None  # (N, 2(M+1)+1) one-hot, int
    allocation: dict[tuple[int, int], Rates] = field(default_factory=dict)
    total_energy: float = math.nan
    per_task_delay: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible" and self.decision is not None

    def placements(self, instance: SystemInstance) -> list[Placement]:
        return [instance.placement(int(np.argmax(row))) for row in self.decision]


# ---------------------------------------------------------------------------
# closed-form delay and energy
# ---------------------------------------------------------------------------


def local_delay(task: Task, profile: MobileProfile) -> float:
    return task.cpu_cycles / profile.cpu_rate


def local_energy(task: Task, profile: MobileProfile) -> float:
    return profile.energy_per_cycle * task.cpu_cycles


def _check_rates(*rates: float) -> None:
    if min(rates) <= 0:
        raise ZeroDivisionError(f"allocated rates must be > 0, got {rates}")


def fog_delay(task: Task, rates: Rates) -> float:
    _check_rates(rates.uplink, rates.downlink, rates.cpu)
    return task.input_size / rates.uplink + task.output_size / rates.downlink + task.cpu_cycles / rates.cpu


def fog_energy(task: Task, profile: MobileProfile, node: int) -> float:
    return profile.tx_energy[node] * task.input_size + profile.rx_energy[node] * task.output_size


def cloud_fixed_delay(task: Task, cloud: CloudLink) -> float:
    """Backhaul plus cloud execution time; independent of any allocation."""
    return (task.input_size + task.output_size) / cloud.backhaul_rate + task.cpu_cycles / cloud.cpu_rate_per_task


def cloud_delay(task: Task, rates: Rates, cloud: CloudLink, virtual: bool = False) -> float:
    if virtual:
        return math.inf
    _check_rates(rates.uplink, rates.downlink)
    return task.input_size / rates.uplink + task.output_size / rates.downlink + cloud_fixed_delay(task, cloud)


def cloud_energy(task: Task, profile: MobileProfile, node: int) -> float:
    # forwarding costs the device exactly what talking to the fog node costs
    return fog_energy(task, profile, node)


def energy_matrix(instance: SystemInstance) -> np.ndarray:
    """Per-task energy of every option, shape (N, 2(M+1)+1)."""
    m1 = len(instance.fog_nodes)
    e = np.zeros((instance.n_tasks, instance.n_options))
    for i, (task, prof) in enumerate(zip(instance.tasks, instance.profiles)):
        e[i, 0] = local_energy(task, prof)
        for j in range(m1):
            e[i, 1 + j] = fog_energy(task, prof, j)
            e[i, 1 + m1 + j] = cloud_energy(task, prof, j)
    return e


def option_delay(instance: SystemInstance, i: int, option: int, rates: Rates | None) -> float:
    task, prof = instance.tasks[i], instance.profiles[i]
    p = instance.placement(option)
    if p.kind == LOCAL:
        return local_delay(task, prof)
    if p.kind == FOG:
        return fog_delay(task, rates)
    return cloud_delay(task, rates, instance.cloud, virtual=p.node == instance.virtual_node)


def task_delay(decision_i: np.ndarray, allocation: dict[tuple[int, int], Rates], instance: SystemInstance,
               i: int) -> float:
    """Delay of task ``i`` under its one-hot row (the h_i . y_i product)."""
    option = int(np.argmax(decision_i))
    p = instance.placement(option)
    rates = None if p.kind == LOCAL else allocation.get((i, p.node))
    if rates is None and p.kind != LOCAL:
        return math.inf
    try:
        return option_delay(instance, i, option, rates)
    except ZeroDivisionError:
        return math.inf


def total_energy(decision: np.ndarray, instance: SystemInstance) -> float:
    if len(decision) == 0:
        return 0.0
    return float(np.sum(energy_matrix(instance) * decision))


def per_task_delays(decision: np.ndarray, allocation: dict, instance: SystemInstance) -> np.ndarray:
    return np.array([task_delay(decision[i], allocation, instance, i) for i in range(instance.n_tasks)])


def make_solution(instance: SystemInstance, decision: np.ndarray, allocation: dict,
                  status: str = "optimal") -> Solution:
    decision = np.asarray(decision, dtype=int)
    return Solution(status=status, decision=decision, allocation=dict(allocation),
                    total_energy=total_energy(decision, instance),
                    per_task_delay=per_task_delays(decision, allocation, instance))


def decision_from_options(instance: SystemInstance, options: Sequence[int]) -> np.ndarray:
    x = np.zeros((instance.n_tasks, instance.n_options), dtype=int)
    for i, k in enumerate(options):
        x[i, k] = 1
    return x


def validate_solution(solution: Solution, instance: SystemInstance, tol: float = 1e-6) -> list[Violation]:
    """List every constraint violation; an empty list means the solution is feasible.

    Delays and resource sums are compared with a relative tolerance ``tol``.
    """
    out: list[Violation] = []
    x = np.asarray(solution.decision)
    for i in range(instance.n_tasks):
        row = x[i]
        if np.any((row != 0) & (row != 1)) or row.sum() != 1 or row[-1] != 0:
            out.append(Violation("C5", i, None, float(row.sum())))
    delays = per_task_delays(x, solution.allocation, instance) if not out else None
    if delays is not None:
        for i, task in enumerate(instance.tasks):
            if delays[i] > task.deadline * (1 + tol):
                out.append(Violation("C1", i, None, float(delays[i] - task.deadline)))
    sums = np.zeros((len(instance.fog_nodes), 3))
    for (i, j), r in solution.allocation.items():
        if min(r) < 0:
            out.append(Violation("R0", i, j, float(min(r))))
        sums[j] += (r.uplink, r.downlink, r.cpu)
    for j, node in enumerate(instance.fog_nodes):
        for col, (name, cap) in enumerate((("C3", node.uplink_cap), ("C4", node.downlink_cap),
                                           ("C2", node.cpu_cap))):
            if sums[j, col] > cap * (1 + tol):
                out.append(Violation(name, None, j, float(sums[j, col] - cap)))
    return out


def delay_violations(solution: Solution, instance: SystemInstance, tol: float = 1e-6) -> int:
    """Number of tasks whose realised delay exceeds the deadline."""
    return sum(1 for v in validate_solution(solution, instance, tol) if v.constraint == "C1")


# ---------------------------------------------------------------------------
# offloading analysis
# ---------------------------------------------------------------------------


def offload_benefit_threshold(task: Task, profile: MobileProfile, node: int = 0) -> float:
    """Complexity ratio (Gc per MB of input) above which offloading to ``node`` saves energy."""
    input_mb = task.input_size / MEGABITS_PER_MEGABYTE
    return fog_energy(task, profile, node) / (profile.energy_per_cycle * input_mb)


def relative_size(task: Task, placement: str, cloud: CloudLink) -> tuple[float, float, float]:
    """Demands normalised by the (residual) deadline so that the delay limit reads beta <= 1."""
    if placement == FOG:
        t = task.deadline
        return task.input_size / t, task.output_size / t, task.cpu_cycles / t
    if placement == CLOUD:
        residual = task.deadline - cloud_fixed_delay(task, cloud)
        if residual <= 0:
            raise CloudInfeasible(f"task {task.id}: residual deadline {residual:.4g} s <= 0")
        return task.input_size / residual, task.output_size / residual, 0.0
    raise ValueError(f"relative size undefined for placement {placement!r}")


def satisfaction_rate(rel: tuple[float, float, float], rates: Rates) -> float:
    d_in, d_out, c = rel
    beta = d_in / rates.uplink + d_out / rates.downlink
    if c > 0:
        beta += c / rates.cpu
    return beta


# ---------------------------------------------------------------------------
# instance files
# ---------------------------------------------------------------------------


def instance_to_dict(instance: SystemInstance) -> dict:
    tasks = []
    for t, p in zip(instance.tasks, instance.profiles):
        tasks.append({
            "id": t.id,
            "input_size_mb": t.input_size / MEGABITS_PER_MEGABYTE,
            "output_size_mb": t.output_size / MEGABITS_PER_MEGABYTE,
            "cpu_cycles": t.cpu_cycles,
            "deadline": t.deadline,
            "cpu_rate": p.cpu_rate,
            "energy_per_cycle": p.energy_per_cycle,
            "tx_energy": list(p.tx_energy),
            "rx_energy": list(p.rx_energy),
        })
    nodes = [{"id": n.id, "uplink": n.uplink_cap, "downlink": n.downlink_cap, "cpu": n.cpu_cap,
              "virtual_cloud": n.is_virtual_cloud} for n in instance.fog_nodes]
    p0 = instance.profiles[0] if instance.profiles else None
    energy = {} if p0 is None else {"energy_per_cycle": p0.energy_per_cycle,
                                    "tx_energy": list(p0.tx_energy), "rx_energy": list(p0.rx_energy)}
    return {
        "schema_version": SCHEMA_VERSION,
        "tasks": tasks,
        "fog_nodes": nodes,
        "cloud": {"backhaul_rate": instance.cloud.backhaul_rate,
                  "cpu_rate_per_task": instance.cloud.cpu_rate_per_task},
        "energy": energy,
    }


def instance_from_dict(doc: dict) -> SystemInstance:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported or missing schema_version: {doc.get('schema_version')!r}")
    defaults = doc.get("energy", {})
    tasks, profiles = [], []
    for k, t in enumerate(doc["tasks"]):
        tasks.append(Task(id=int(t.get("id", k + 1)),
                          input_size=float(t["input_size_mb"]) * MEGABITS_PER_MEGABYTE,
                          output_size=float(t["output_size_mb"]) * MEGABITS_PER_MEGABYTE,
                          cpu_cycles=float(t["cpu_cycles"]),
                          deadline=float(t["deadline"])))
        profiles.append(MobileProfile(
            cpu_rate=float(t.get("cpu_rate", defaults.get("cpu_rate", 0.5))),
            energy_per_cycle=float(t.get("energy_per_cycle", defaults.get("energy_per_cycle"))),
            tx_energy=tuple(float(v) for v in t.get("tx_energy", defaults.get("tx_energy"))),
            rx_energy=tuple(float(v) for v in t.get("rx_energy", defaults.get("rx_energy")))))
    nodes = tuple(FogNode(id=int(n["id"]), uplink_cap=float(n["uplink"]), downlink_cap=float(n["downlink"]),
                          cpu_cap=float(n["cpu"]), is_virtual_cloud=bool(n.get("virtual_cloud", False)))
                  for n in doc["fog_nodes"])
    cloud = CloudLink(float(doc["cloud"]["backhaul_rate"]), float(doc["cloud"]["cpu_rate_per_task"]))
    inst = SystemInstance(tuple(tasks), tuple(profiles), nodes, cloud)
    inst.validate()
    return inst


def save_instance(instance: SystemInstance, path: str | Path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=2))


def load_instance(path: str | Path) -> SystemInstance:
    return instance_from_dict(json.loads(Path(path).read_text()))
