import numpy as np
import pytest

from alelts.basis import build_tables, gauss_legendre
from alelts.errors import MeshTanglingError
from alelts.reconstruction import (
    ReconstructionPolynomial,
    VirtualData,
    nonlinear_weights,
    oscillation_indicators,
    positivity_limit,
    reconstruct_cells,
    reconstruct_stencil,
    stencil_layout,
    weno_combine,
)
from alelts.systems import Euler


def exact_means(poly, a, b):
    """Cell means of a numpy polynomial on [a, b] by Gauss quadrature."""
    x, w = gauss_legendre(8)
    return np.array([np.dot(w, poly(lo + (hi - lo) * x)) for lo, hi in zip(a, b)])


def random_window(rng, M, k=4):
    R = M
    widths = rng.uniform(0.5, 1.5, (k, 2 * R + 1))
    x = np.concatenate((np.zeros((k, 1)), np.cumsum(widths, axis=1)), axis=1) - 3.0
    return x


def test_stencil_layout():
    assert [(s.left, s.right) for s in stencil_layout(2)] == [(1, 1), (2, 0), (0, 2)]
    assert [(s.left, s.right) for s in stencil_layout(3)] == [(2, 1), (1, 2), (3, 0), (0, 3)]
    assert [s.weight for s in stencil_layout(4, central=7.0, sided=2.0)] == [7.0, 2.0, 2.0]


@pytest.mark.parametrize("M", [1, 2, 3, 4])
def test_weno_exact_on_degree_M_data(M, rng):
    """Every candidate is exact for degree-M data, so any convex blend is too."""
    tables = build_tables(M)
    x = random_window(rng, M)
    k = x.shape[0]
    poly = np.polynomial.Polynomial(rng.standard_normal(M + 1))
    q = np.stack([exact_means(poly, row[:-1], row[1:]) for row in x])[..., None]
    vdata = VirtualData(cells=np.arange(k), time=np.zeros(k), radius=M, x=x, q=q,
                        inside=np.ones(q.shape[:2], dtype=bool))
    w_hat, _, _ = reconstruct_cells(vdata, tables, stencil_layout(M))
    xi = np.linspace(0.0, 1.0, 9)
    for c in range(k):
        xl, dx = x[c, M], x[c, M + 1] - x[c, M]
        got = tables.modal_values(xi) @ w_hat[c, :, 0]
        ref = poly(xl + dx * xi)
        assert np.max(np.abs(got - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_stencil_reproduces_means(rng):
    tables = build_tables(3)
    edges = np.sort(rng.uniform(-3, 4, 5))
    bounds = np.stack((edges[:-1], edges[1:]), axis=-1)
    avg = rng.standard_normal((4, 2))
    coeffs = reconstruct_stencil(bounds, avg, tables)
    np.testing.assert_allclose(tables.modal_interval_means(bounds[:, 0], bounds[:, 1]) @ coeffs, avg,
                               rtol=1e-10, atol=1e-11)


def test_stencil_rejects_inverted_cell():
    tables = build_tables(1)
    with pytest.raises(MeshTanglingError):
        reconstruct_stencil([[0.0, 1.0], [1.0, 1.0]], np.ones((2, 1)), tables)


def test_nonlinear_weights_normalised_and_respect_zero_lambda(rng):
    sigma = rng.uniform(0, 1, (5, 3, 2))
    lam = np.array([1e5, 1.0, 0.0])
    w = nonlinear_weights(sigma, lam)
    np.testing.assert_allclose(w.sum(axis=-2), 1.0)
    assert np.all(w[:, 2] == 0.0)


def test_nonlinear_weights_equal_linear_on_smooth_data():
    w = nonlinear_weights(np.zeros((3, 1)), np.array([2.0, 1.0, 1.0]))
    np.testing.assert_allclose(w[:, 0], [0.5, 0.25, 0.25])


def test_weights_survive_huge_indicators():
    w = nonlinear_weights(np.array([[1e300], [1e-300], [1.0]]), np.ones(3))
    assert np.all(np.isfinite(w))
    assert w[1, 0] == pytest.approx(1.0)


def test_weno_avoids_the_oscillatory_stencil():
    tables = build_tables(2)
    smooth = np.array([1.0, 0.1, 0.0])
    jumpy = np.array([1.0, 5.0, 3.0])
    cand = np.stack((jumpy, smooth, jumpy))[None, :, :, None]
    out = weno_combine(cand, np.array([1e5, 1.0, 1.0]), tables)
    np.testing.assert_allclose(out[0, :, 0], smooth, atol=1e-6)
    assert np.all(oscillation_indicators(cand, tables) >= 0.0)


def test_reconstruction_polynomial_mean():
    tables = build_tables(2)
    p = ReconstructionPolynomial(np.array([[2.0], [0.5], [0.1]]), 0, 0.0, 1.0, 0.5, tables)
    assert p.mean()[0] == 2.0
    assert p.evaluate(1.25)[0] == pytest.approx(2.0 - 0.05)


def test_positivity_limit_keeps_mean_and_restores_floor():
    system = Euler(1.4)
    tables = build_tables(2)
    mean = system.to_conserved(np.array([1.0, 0.0, 1e-3]))
    w = np.zeros((2, 3, 3))
    w[:, 0] = mean
    w[0, 1] = [0.0, 0.0, 0.01]  # energy dips below zero near one face
    w[1, 1] = [0.01, 0.0, 0.0]
    out, theta = positivity_limit(w, tables, system)
    assert 0.0 < theta[0] < 1.0 and theta[1] == 1.0
    np.testing.assert_array_equal(out[:, 0], w[:, 0])
    np.testing.assert_array_equal(out[1], w[1])
    vals = tables.modal_values(np.concatenate(([0.0], tables.nodes, [1.0]))) @ out[0]
    assert np.all(system.admissible(vals))
