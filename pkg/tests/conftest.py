import numpy as np
import pytest

from alelts.systems import Euler, IdealMHD


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def euler():
    return Euler(1.4)


@pytest.fixture
def mhd():
    return IdealMHD(5.0 / 3.0, 2.0)


def mhd_state(rho=1.0, u=0.1, v=-0.2, w=0.05, p=0.8, bx=1.5, by=-0.7, bz=0.3, psi=0.0):
    return IdealMHD(5.0 / 3.0, 2.0).to_conserved(np.array([rho, u, v, w, p, bx, by, bz, psi]))


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria")


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def _record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return _record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
