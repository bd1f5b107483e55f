import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_instance
from independent import brute_force, instance_tuples
from fogopt import ibba
from fogopt.ibba import LCF, LFC, SearchNode, Verdict, bound_and_prune, branch, simplify, tree_arity
from fogopt.model import LOCAL, fog_energy, validate_solution
from fogopt.relaxation import build_relaxation, relaxation_size
from fogopt.runner import cloud_count
from fogopt.scenarios import generate, random_small, scenario1


def solve_both(inst):
    return ibba.solve(inst, LFC), ibba.solve(inst, LCF)


def test_single_task_below_threshold_stays_local():
    inst = make_instance([(44.0, 4.4, 0.5 * 5.5, 10.0)])
    best, optima = brute_force(*instance_tuples(inst))
    res = ibba.solve(inst).solution
    assert res.placements(inst)[0].kind == LOCAL
    assert res.total_energy == pytest.approx(best)
    assert optima == [(0,)]


def test_single_task_above_threshold_goes_to_fog():
    inst = make_instance([(44.0, 4.4, 1.5 * 5.5, 20.0)])
    best, optima = brute_force(*instance_tuples(inst))
    res = ibba.solve(inst).solution
    p = res.placements(inst)[0]
    assert p.kind == "F" and p.node == 0
    assert res.total_energy == pytest.approx(fog_energy(inst.tasks[0], inst.profiles[0], 0))
    assert res.total_energy == pytest.approx(best)


def test_two_tasks_sharing_a_small_cpu():
    # each task alone fits the node's CPU within its deadline, the pair does not
    inst = make_instance([(8.0, 0.8, 6.0, 4.0), (8.0, 0.8, 6.0, 4.0)], nodes=((72, 72, 2.0),),
                         direct=(72, 72, 1.0), cloud=(5.0, 10.0))
    best, optima = brute_force(*instance_tuples(inst))
    for res in solve_both(inst):
        sol = res.solution
        assert sol.total_energy == pytest.approx(best, rel=1e-6)
        assert tuple(int(np.argmax(r)) for r in sol.decision) in optima
        assert validate_solution(sol, inst) == []
        kinds = [p for p in sol.placements(inst)]
        assert sum(p.kind == "F" and p.node == 0 for p in kinds) <= 1


def test_branch_children_and_arity():
    inst = generate(scenario1(), 0)
    assert tree_arity(inst) == 11  # nominal 2(M+1)+1 for M=4
    kids = branch(SearchNode(), inst)
    assert len(kids) == 10  # cloud forwarding by the virtual node is never created
    assert [k.fixed[-1][1] for k in kids] == LFC.processor_order(inst)
    full = SearchNode(tuple((i, 0) for i in range(inst.n_tasks)))
    assert branch(full, inst) == []
    last = SearchNode(tuple((i, 0) for i in range(inst.n_tasks - 1)))
    assert all(c.active_from == inst.n_tasks for c in branch(last, inst))


def test_leftmost_path_is_all_local():
    inst = random_small(3, 4, 2)
    node = SearchNode()
    while True:
        kids = branch(node, inst, LFC)
        if not kids:
            break
        node = kids[0]
    assert [k for _, k in node.fixed] == [0] * inst.n_tasks


def test_processor_orders():
    inst = random_small(0, 2, 2)
    m1 = len(inst.fog_nodes)
    assert LFC.processor_order(inst) == [0, 1, 2, 3, 4, 5]
    assert LCF.processor_order(inst) == [0, 4, 5, 1, 2, 3]
    assert m1 == 3


def test_simplify_variable_counts():
    inst = generate(scenario1(), 2)
    n, m1 = inst.n_tasks, len(inst.fog_nodes)
    full = relaxation_size(inst)
    # the nominal count is N(5(M+1)+1); the excluded slot removes one binary per task
    assert full == n * (5 * m1 + 1) - n
    local = simplify(inst, SearchNode(((0, 0),))).program
    assert full - local.n == 2 * m1 + 3 * m1
    fog = simplify(inst, SearchNode(((0, 2),))).program
    assert full - fog.n == 2 * m1 + 3 * (m1 - 1)
    assert not any(name.startswith("x[0,") for name in fog.names)


@pytest.mark.parametrize("value,integral,incumbent,expected", [
    (12.0, False, 10.0, Verdict.PRUNE),
    (8.0, True, 10.0, Verdict.NEW_INCUMBENT),
    (7.0, False, 10.0, Verdict.DESCEND),
    (None, False, 10.0, Verdict.PRUNE),
    (10.0, True, 10.0, Verdict.PRUNE),
])
def test_bound_and_prune(value, integral, incumbent, expected):
    assert bound_and_prune(value, integral, incumbent) is expected


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 2), st.booleans())
def test_matches_brute_force(seed, n, m, tight):
    inst = random_small(seed, n, m, tight)
    best, optima = brute_force(*instance_tuples(inst))
    lfc, lcf = solve_both(inst)
    if not optima:
        assert not lfc.solution.feasible and not lcf.solution.feasible
        return
    for res in (lfc, lcf):
        assert res.solution.total_energy == pytest.approx(best, rel=1e-6)
        assert validate_solution(res.solution, inst) == []
        assert res.stats.relaxed_solves <= ibba.worst_case_nodes(inst)


def multi_optimum_instance(seed):
    """Loose deadlines and costly local work: fog j and cloud-via-j cost the same energy."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    tasks = [(float(rng.uniform(8, 40)), float(rng.uniform(0.8, 4)), float(rng.uniform(4, 9)), 60.0)
             for _ in range(n)]
    return make_instance(tasks, nodes=((72, 72, 10),) * int(rng.integers(1, 3)))


@pytest.mark.parametrize("seed", range(5))
def test_selection_policy_on_ties(seed):
    inst = multi_optimum_instance(seed)
    best, optima = brute_force(*instance_tuples(inst))
    assert len(optima) > 1
    lfc, lcf = solve_both(inst)
    assert lfc.solution.total_energy == pytest.approx(lcf.solution.total_energy, rel=1e-9)
    assert cloud_count(lfc.solution, inst) <= cloud_count(lcf.solution, inst)
    assert cloud_count(lcf.solution, inst) > 0
    local = sum(p.kind == LOCAL for p in lfc.solution.placements(inst))
    assert local == max(sum(k == 0 for k in vec) for vec in optima)


def test_infeasible_instance_reported():
    inst = make_instance([(44.0, 4.4, 5.0, 0.5)])
    assert ibba.solve(inst).solution.status == "infeasible"


def test_by_demand_order_same_energy():
    inst = random_small(11, 4, 2)
    a = ibba.solve(inst, LFC).solution
    b = ibba.solve(inst, ibba.by_demand(LFC, inst)).solution
    assert a.feasible == b.feasible
    if a.feasible:
        assert a.total_energy == pytest.approx(b.total_energy, rel=1e-6)


def test_relaxation_is_a_lower_bound():
    inst = random_small(5, 3, 2)
    relax = build_relaxation(inst)
    from fogopt import convex
    res = convex.solve(relax.program)
    sol = ibba.solve(inst).solution
    assert res.objective_value <= sol.total_energy * (1 + 1e-6)
