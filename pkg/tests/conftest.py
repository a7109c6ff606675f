import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from nesstransport.model import build_system

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_spec(rng, n_s=None, M=None, tri=False, scale=0.5, equilibrium=False):
    """A random sample with random couplings and reservoirs."""
    n_s = n_s or int(rng.integers(1, 4))
    M = M or int(rng.integers(2, 4))
    A = rng.normal(size=(n_s, n_s))
    if not tri:
        A = A + 1j * rng.normal(size=(n_s, n_s))
    h = scale * (A + A.conj().T) / 2
    chis = []
    for _ in range(M):
        chi = rng.normal(size=n_s) * 0.4
        if not tri:
            chi = chi + 0.2j * rng.normal(size=n_s)
        chis.append(chi)
    if equilibrium:
        beta, mu = rng.uniform(0.5, 5.0), rng.uniform(-0.3, 0.3)
        res = [(beta, mu)] * M
    else:
        res = [(rng.uniform(0.5, 5.0), rng.uniform(-0.3, 0.3)) for _ in range(M)]
    return build_system(h, chis, res)


def dot(kappa_l=0.3, kappa_r=0.3, eps_d=0.0, left=(5.0, 0.1), right=(5.0, -0.1)):
    return build_system([[eps_d]], [[kappa_l], [kappa_r]], [left, right])


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


@pytest.fixture
def record_criterion():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
