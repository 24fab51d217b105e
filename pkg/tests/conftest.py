import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from roughdelay import lift_ito, sample_brownian
from roughdelay.noise import SamplePath

settings.register_profile(
    "roughdelay", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("roughdelay")

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


def linear_path(t_start, t_end, h_f, dim=1):
    """Deterministic path ``t -> t - t_start`` in every component."""
    n = int(round((t_end - t_start) / h_f))
    return SamplePath(t_start=t_start, h_f=h_f, increments=np.full((n, dim), h_f))


def brownian_lift(seed, dim=1, r=1.0, N=8, n_seg=4, R=8, t0=0.0, gamma=0.45):
    h = r / N
    path = sample_brownian(dim, t0 - r, t0 + n_seg * r, h / R, seed)
    return lift_ito(path, h, r, t0=t0, gamma=gamma)


@pytest.fixture
def rp_small():
    return brownian_lift(3, dim=2)
