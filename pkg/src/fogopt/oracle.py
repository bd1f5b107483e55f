"""Brute-force ground truth for desk-size instances."""
from __future__ import annotations

import itertools
import math

from .ibba import LFC
from .model import Solution, SystemInstance, decision_from_options, energy_matrix, local_delay, make_solution
from .subproblem import NodeChecker

MAX_CANDIDATES = 10**6


class InstanceTooLarge(ValueError):
    pass


def candidate_count(instance: SystemInstance) -> int:
    return instance.n_options ** instance.n_tasks


def enumerate_optimum(instance: SystemInstance, limit: int = MAX_CANDIDATES) -> Solution:
    """Cheapest placement vector every node can serve, scanning vectors in LFC order.

    Only strictly cheaper vectors replace the incumbent, so ties resolve to the
    first vector in the order. A vector that cannot beat the incumbent on
    energy is skipped before its nodes are checked.
    """
    if candidate_count(instance) > limit:
        raise InstanceTooLarge(f"{candidate_count(instance)} placement vectors exceed the limit of {limit}")
    energy = energy_matrix(instance)
    checker = NodeChecker(instance)
    order = LFC.processor_order(instance)
    per_task = []
    for i, task in enumerate(instance.tasks):
        ok_local = local_delay(task, instance.profiles[i]) <= task.deadline
        per_task.append([k for k in order if k != 0 or ok_local])
    best, best_e = None, math.inf
    for options in itertools.product(*per_task):
        e = float(energy[range(instance.n_tasks), options].sum())
        if e >= best_e - 1e-12 * max(1.0, abs(best_e)):
            continue
        alloc = checker.allocate(options)
        if alloc is not None:
            best, best_e = (options, alloc), e
    if best is None:
        return Solution("infeasible")
    return make_solution(instance, decision_from_options(instance, best[0]), best[1])
