import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import V, make_instance
from fogopt.model import (CLOUD, FOG, CloudInfeasible, CloudLink, MobileProfile, Rates, Task, cloud_delay,
                          cloud_energy, decision_from_options, fog_delay, fog_energy, instance_from_dict,
                          instance_to_dict, load_instance, local_delay, local_energy, make_solution,
                          offload_benefit_threshold, relative_size, satisfaction_rate, save_instance,
                          task_delay, total_energy, validate_solution)

PROF = MobileProfile(0.5, V, (0.142, 0.658), (0.142, 0.278))
CLOUD_LINK = CloudLink(5.0, 10.0)
BIG = Task(1, 44.0, 4.4, 5.0, 10.0)
pos = st.floats(0.01, 100.0)


@pytest.mark.parametrize("cycles,rate,expected", [(5.0, 0.5, 10.0), (0.5, 0.5, 1.0), (5.0, 5.0, 1.0)])
def test_local_delay(cycles, rate, expected):
    prof = MobileProfile(rate, V, (0.1,), (0.1,))
    assert local_delay(Task(1, 1.0, 1.0, cycles, 10.0), prof) == pytest.approx(expected)


@pytest.mark.parametrize("cycles,expected", [(7.3, 10.0), (0.73, 1.0)])
def test_local_energy(cycles, expected):
    assert local_energy(Task(1, 1.0, 1.0, cycles, 10.0), PROF) == pytest.approx(expected)


def test_local_energy_zero_cycles():
    # the Task invariant forbids C=0, so evaluate the formula on an unvalidated object
    assert local_energy(Task(1, 1.0, 1.0, 0.0, 10.0), PROF) == 0.0


def test_fog_delay_examples():
    assert fog_delay(BIG, Rates(44, 4.4, 5)) == pytest.approx(3.0)
    assert fog_delay(BIG, Rates(22, 4.4, 5)) == pytest.approx(4.0)
    with pytest.raises(ZeroDivisionError):
        fog_delay(BIG, Rates(44, 4.4, 0.0))


def test_fog_and_cloud_energy_examples():
    assert fog_energy(BIG, PROF, 0) == pytest.approx(6.8728)
    assert fog_energy(BIG, PROF, 1) == pytest.approx(30.1752)
    zero = Task(1, 0.0, 0.0, 1.0, 1.0)
    assert fog_energy(zero, PROF, 0) == 0.0
    for node in (0, 1):
        assert cloud_energy(BIG, PROF, node) == fog_energy(BIG, PROF, node)
    assert cloud_energy(zero, PROF, 1) == 0.0


def test_cloud_delay_examples():
    assert cloud_delay(BIG, Rates(44, 4.4), CLOUD_LINK) == pytest.approx(12.18)
    assert cloud_delay(BIG, Rates(44, 4.4), CloudLink(1e15, 1e15)) == pytest.approx(2.0)
    assert cloud_delay(BIG, Rates(44, 4.4), CLOUD_LINK, virtual=True) == math.inf


def test_task_delay_dispatch():
    inst = make_instance([(44.0, 4.4, 5.0, 20.0)], nodes=((72, 72, 10), (72, 72, 10)))
    alloc = {(0, 0): Rates(44, 4.4, 5), (0, 1): Rates(44, 4.4, 5)}
    assert task_delay(decision_from_options(inst, [0])[0], alloc, inst, 0) == pytest.approx(10.0)
    assert task_delay(decision_from_options(inst, [2])[0], alloc, inst, 0) == pytest.approx(3.0)
    assert task_delay(decision_from_options(inst, [4])[0], alloc, inst, 0) == pytest.approx(12.18)


def test_total_energy_examples():
    inst = make_instance([(1.0, 1.0, 7.3, 20.0)])
    assert total_energy(decision_from_options(inst, [0]), inst) == pytest.approx(10.0)
    assert total_energy(np.zeros((0, 5)), inst) == 0.0
    two = make_instance([(1.0, 1.0, 7.3, 20.0), (44.0, 4.4, 5.0, 20.0)])
    assert total_energy(decision_from_options(two, [0, 1]), two) == pytest.approx(16.8728)


def test_validate_solution_examples():
    inst = make_instance([(44.0, 4.4, 5.0, 10.0)])
    good = make_solution(inst, decision_from_options(inst, [1]), {(0, 0): Rates(44, 4.4, 5)})
    assert validate_solution(good, inst) == []
    over = make_solution(inst, decision_from_options(inst, [1]), {(0, 0): Rates(73, 4.4, 5)})
    kinds = [(v.constraint, v.node) for v in validate_solution(over, inst)]
    assert ("C3", 0) in kinds
    dec = decision_from_options(inst, [1])
    dec[0, 0] = 1
    assert any(v.constraint == "C5" and v.task == 0 for v in validate_solution(good.__class__("feasible", dec), inst))


def test_threshold_reproduces_reported_value():
    task = Task(1, 5.5 * 8, 0.55 * 8, 1.0, 10.0)
    assert offload_benefit_threshold(task, PROF) == pytest.approx(0.911, abs=0.002)


def test_threshold_unit_factor_and_zero():
    task = Task(1, 8.0, 0.0, 1.0, 10.0)
    prof = MobileProfile(0.5, 0.2, (0.2,), (0.0,))
    assert offload_benefit_threshold(task, prof) == pytest.approx(8.0)
    assert offload_benefit_threshold(task, MobileProfile(0.5, 0.2, (0.0,), (0.0,))) == 0.0


def test_relative_size_examples():
    assert relative_size(BIG, FOG, CLOUD_LINK) == pytest.approx((4.4, 0.44, 0.5))
    with pytest.raises(CloudInfeasible):
        relative_size(BIG, CLOUD, CLOUD_LINK)
    small = Task(2, 4.4, 0.44, 5.0, 10.0)
    assert relative_size(small, CLOUD, CLOUD_LINK) == pytest.approx((4.4 / 8.532, 0.44 / 8.532, 0.0))


def test_satisfaction_rate_examples():
    fog = relative_size(BIG, FOG, CLOUD_LINK)
    assert satisfaction_rate(fog, Rates(*fog)) == pytest.approx(3.0)
    assert satisfaction_rate(fog, Rates(*(3 * np.array(fog)))) == pytest.approx(1.0)
    assert satisfaction_rate(fog, Rates(1.5 * fog[0], 3 * fog[1], 3 * fog[2])) == pytest.approx(4 / 3)
    cld = relative_size(Task(2, 4.4, 0.44, 5.0, 10.0), CLOUD, CLOUD_LINK)
    assert satisfaction_rate(cld, Rates(cld[0], cld[1], 0.0)) == pytest.approx(2.0)


@given(pos, pos, pos, st.floats(0.5, 50), pos, pos, pos, st.sampled_from([FOG, CLOUD]))
def test_satisfaction_matches_delay_constraint(d_in, d_out, c, dl, ru, rd, rf, kind):
    task = Task(1, d_in, d_out, c, dl)
    try:
        rel = relative_size(task, kind, CLOUD_LINK)
    except CloudInfeasible:
        return
    beta = satisfaction_rate(rel, Rates(ru, rd, rf))
    delay = fog_delay(task, Rates(ru, rd, rf)) if kind == FOG else cloud_delay(task, Rates(ru, rd), CLOUD_LINK)
    if abs(beta - 1) > 1e-9 and abs(delay - dl) > 1e-9 * dl:
        assert (beta <= 1) == (delay <= dl)


@given(st.floats(0.5, 10), st.floats(0.05, 1), st.floats(0.05, 3.0))
def test_threshold_separates_local_and_fog_energy(d_mb, do_mb, alpha):
    task = Task(1, d_mb * 8, do_mb * 8, alpha * d_mb, 10.0)
    star = offload_benefit_threshold(task, PROF)
    if abs(alpha - star) > 1e-9:
        assert (alpha > star) == (local_energy(task, PROF) > fog_energy(task, PROF, 0))


@given(st.lists(st.integers(0, 3), min_size=1, max_size=4), st.floats(1, 70), st.floats(1, 70))
def test_energy_independent_of_allocation(opts, u, d):
    inst = make_instance([(8.0, 1.0, 2.0, 30.0)] * len(opts))
    dec = decision_from_options(inst, opts)
    a = make_solution(inst, dec, {(i, 0): Rates(u, d, 1.0) for i in range(len(opts))})
    b = make_solution(inst, dec, {})
    assert a.total_energy == b.total_energy


def test_instance_file_round_trip(tmp_path):
    inst = make_instance([(44.0, 4.4, 5.0, 10.0), (8.0, 0.8, 1.0, 6.0)], nodes=((72, 72, 10), (50, 40, 8)))
    save_instance(inst, tmp_path / "i.json")
    back = load_instance(tmp_path / "i.json")
    for a, b in zip(back.tasks, inst.tasks):
        assert (a.input_size, a.output_size, a.cpu_cycles, a.deadline) == pytest.approx(
            (b.input_size, b.output_size, b.cpu_cycles, b.deadline), rel=1e-12)
    assert back.profiles == inst.profiles
    assert back.fog_nodes == inst.fog_nodes
    doc = instance_to_dict(inst)
    doc.pop("schema_version")
    with pytest.raises(ValueError):
        instance_from_dict(doc)


def test_invalid_objects_rejected():
    with pytest.raises(ValueError):
        Task(1, 0.0, 1.0, 1.0, 1.0).validate()
    with pytest.raises(ValueError):
        make_instance([(1.0, 1.0, -1.0, 1.0)])
