import numpy as np
import pytest

from fogopt.model import MEGABITS_PER_MEGABYTE
from fogopt.scenarios import generate, random_small, scenario1, scenario2


def alphas(inst):
    return np.array([t.cpu_cycles / (t.input_size / MEGABITS_PER_MEGABYTE) for t in inst.tasks])


def test_scenario1_alpha_ranges():
    spec = scenario1()
    a0, a9 = alphas(generate(spec, 0)), alphas(generate(spec, 9))
    assert np.all((a0 >= 0.1) & (a0 <= 1.0))
    assert np.all((a9 >= 1.0 - 1e-12) & (a9 <= 1.9 + 1e-12))
    assert a9 - a0 == pytest.approx(np.full(10, 0.9))


def test_scenario2_deadlines():
    spec = scenario2()
    assert {t.deadline for t in generate(spec, 0).tasks} == {2.0}
    assert {t.deadline for t in generate(spec, 8).tasks} == {10.0}
    assert np.all(alphas(generate(spec, 3)) <= 6.0)


def test_table_defaults():
    inst = generate(scenario1(), 0)
    assert inst.n_tasks == 10 and inst.n_fog == 4
    for node in inst.fog_nodes:
        assert node.caps == (72.0, 72.0, 10.0)
    assert inst.fog_nodes[-1].is_virtual_cloud
    assert (inst.cloud.backhaul_rate, inst.cloud.cpu_rate_per_task) == (5.0, 10.0)
    d_mb = np.array([t.input_size for t in inst.tasks]) / 8
    o_mb = np.array([t.output_size for t in inst.tasks]) / 8
    assert np.all((d_mb >= 1) & (d_mb <= 10)) and np.all((o_mb >= 0.1) & (o_mb <= 1))


def test_seeds_determine_instances():
    assert generate(scenario1(seed=3), 4) == generate(scenario1(seed=3), 4)
    assert generate(scenario1(seed=3), 4) != generate(scenario1(seed=4), 4)
    assert generate(scenario1(), 0, rep=1) != generate(scenario1(), 0, rep=0)
    assert random_small(5, 3, 2) == random_small(5, 3, 2)
