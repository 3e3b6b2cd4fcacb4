import importlib

import numpy as np
import pytest

from alelts import _kernels_py, kernels
from alelts.basis import build_tables
from alelts.systems import Euler, IdealMHD, LinearSystem

from conftest import mhd_state

compiled = pytest.importorskip("alelts._kernels")


def random_batch(system, q0, M, rng, nc=6):
    w = np.zeros((nc, M + 1, system.nvar))
    w[:, 0] = q0 * (1.0 + 0.05 * rng.random((nc, 1)))
    w[:, 1:] = 0.01 * rng.standard_normal((nc, M, system.nvar)) * np.abs(q0)
    return w, 0.02 * np.arange(nc), np.full(nc, 0.02), rng.uniform(0.002, 0.004, nc)


@pytest.mark.parametrize("M", [1, 2, 3, 4])
@pytest.mark.parametrize("which", ["euler", "mhd"])
def test_compiled_matches_numpy(M, which, rng):
    if which == "euler":
        system = Euler(1.4)
        q0 = system.to_conserved(np.array([1.0, 0.4, 1.5]))
    else:
        system = IdealMHD(5.0 / 3.0, 2.0)
        q0 = mhd_state()
    tables = build_tables(M)
    args = random_batch(system, q0, M, rng) + (system, tables, "fluid-u", 1e-12, 100)
    qa, xa, ia = _kernels_py.predictor(*args)
    qb, xb, ib = compiled.predictor(*args)
    assert ia == ib
    np.testing.assert_allclose(qb, qa, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(xb, xa, rtol=0, atol=1e-14)


def test_other_systems_are_delegated(rng):
    system = LinearSystem([[1.0]])
    tables = build_tables(2)
    args = random_batch(system, np.array([1.0]), 2, rng) + (system, tables, "zero", 1e-12, 100)
    qa = _kernels_py.predictor(*args)[0]
    np.testing.assert_array_equal(compiled.predictor(*args)[0], qa)


def test_backend_selection(monkeypatch):
    assert kernels.BACKEND in ("compiled", "python")
    monkeypatch.setenv("ALELTS_BACKEND", "python")
    try:
        reloaded = importlib.reload(kernels)
        assert reloaded.BACKEND == "python"
        assert reloaded.predictor is _kernels_py.predictor
    finally:
        monkeypatch.delenv("ALELTS_BACKEND")
        importlib.reload(kernels)
