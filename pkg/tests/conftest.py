import os

from hypothesis import HealthCheck, settings

from fogopt.model import CloudLink, FogNode, MobileProfile, SystemInstance, Task

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", parent=settings.get_profile("default"), max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

V = 1000.0 / 730.0  # J per Gc


def make_instance(tasks, nodes=((72.0, 72.0, 10.0),), direct=(72.0, 72.0, 10.0), cloud=(5.0, 10.0),
                  tx=0.142, rx=0.142, direct_tx=0.658, direct_rx=0.278, local_cpu=0.5, v=V):
    """Instance from plain numbers: tasks are (D_in Mb, D_out Mb, C Gc, deadline s)."""
    m = len(nodes)
    prof = MobileProfile(local_cpu, v, (tx,) * m + (direct_tx,), (rx,) * m + (direct_rx,))
    fog = tuple(FogNode(j + 1, *caps) for j, caps in enumerate(nodes)) + (FogNode(m + 1, *direct, True),)
    inst = SystemInstance(tuple(Task(i + 1, *t) for i, t in enumerate(tasks)), (prof,) * len(tasks), fog,
                          CloudLink(*cloud))
    inst.validate()
    return inst


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
