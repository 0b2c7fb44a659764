import numpy as np
import pytest
from hypothesis import given, strategies as st

from hbm.sphere import (
    build_basis,
    build_grid,
    harmonic_index,
    harmonic_jets_at,
    harmonics_at,
    integrate,
    sphere_area,
)


@pytest.mark.parametrize("dim,res", [(2, 16), (3, 8)])
def test_weights_sum_to_area(dim, res):
    g = build_grid(dim, res)
    assert g.weights.sum() == pytest.approx(sphere_area(dim), rel=1e-14)
    assert np.allclose(np.linalg.norm(g.nodes, axis=1), 1.0)


def test_monomial_moments_s2():
    # \int x^2 = 4 pi / 3, \int x^2 y^2 = 4 pi / 15, \int x^4 = 4 pi / 5
    g = build_grid(3, 8)
    x, y, z = g.nodes.T
    assert integrate(x**2, g) == pytest.approx(4 * np.pi / 3, rel=1e-13)
    assert integrate(x**2 * y**2, g) == pytest.approx(4 * np.pi / 15, rel=1e-13)
    assert integrate(z**4, g) == pytest.approx(4 * np.pi / 5, rel=1e-13)


def test_monomial_moments_s1():
    g = build_grid(2, 16)
    x, _ = g.nodes.T
    assert integrate(x**4, g) == pytest.approx(3 * np.pi / 4, rel=1e-13)


@pytest.mark.parametrize("dim,res,L", [(2, 32, 10), (3, 12, 6)])
def test_basis_orthonormal(dim, res, L):
    g = build_grid(dim, res)
    b = build_basis(g, L)
    G = (b.values * g.weights[:, None]).T @ b.values
    assert np.allclose(G, np.eye(b.size), atol=1e-12)


def test_frame_orthonormal_and_tangent():
    g = build_grid(3, 6)
    F = g.frame
    assert np.allclose(np.einsum("kin,kn->ki", F, g.nodes), 0.0, atol=1e-14)
    assert np.allclose(np.einsum("kin,kjn->kij", F, F), np.eye(2), atol=1e-14)


@pytest.mark.parametrize("dim,res,L", [(2, 32, 8), (3, 12, 5)])
def test_harmonics_are_laplacian_eigenfunctions(dim, res, L):
    g = build_grid(dim, res)
    b = build_basis(g, L)
    lap = np.trace(b.hess, axis1=-2, axis2=-1)
    assert np.allclose(lap, -b.values * b.eigenvalues, atol=1e-10)


def test_antipode_and_parity():
    g = build_grid(3, 8)
    assert np.allclose(g.nodes[g.antipode], -g.nodes)
    b = build_basis(g, 4)
    flipped = b.values[g.antipode]
    assert np.allclose(flipped, b.values * b.parity, atol=1e-12)


def test_even_subset_labels():
    g = build_grid(3, 8)
    b = build_basis(g, 4, parity="even")
    assert set(b.degrees.tolist()) == {0, 2, 4}
    assert b.size == 1 + 5 + 9
    assert harmonic_index(2, 2) == [(0, 0), (1, -1), (1, 1), (2, -2), (2, 2)]


def test_project_synthesize_round_trip(rng):
    g = build_grid(3, 10)
    b = build_basis(g, 4)
    c = rng.normal(size=b.size)
    assert np.allclose(b.project(b.synthesize(c).value), c, atol=1e-12)


def test_grid_errors():
    with pytest.raises(ValueError):
        build_grid(4, 8)
    with pytest.raises(ValueError):
        build_grid(2, 7)
    with pytest.raises(ValueError):
        build_basis(build_grid(3, 4), 6)


@given(st.floats(0.1, 3.0), st.floats(0.0, 6.28))
def test_jets_match_finite_differences_s2(theta, phi):
    # derivative of the basis along a frame direction by a great-circle step
    pt = np.array([[np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]])
    val, grad, hess, frame = harmonic_jets_at(pt, 3)
    e = frame[0, 0]
    t = 1e-5
    fwd = harmonics_at(np.cos(t) * pt + np.sin(t) * e, 3)
    bwd = harmonics_at(np.cos(t) * pt - np.sin(t) * e, 3)
    assert np.allclose((fwd - bwd) / (2 * t), grad[0, :, 0], atol=1e-7)
    assert np.allclose((fwd - 2 * val + bwd) / t**2, hess[0, :, 0, 0], atol=1e-3)


@pytest.mark.parametrize("dim,L", [(2, 12), (3, 8)])
def test_reflection_invariant_subset(dim, L, rng):
    X = rng.normal(size=(40, dim))
    X /= np.linalg.norm(X, axis=1)[:, None]
    Y = harmonics_at(X, L, "even", "reflections")
    for k in range(dim):
        R = np.ones(dim)
        R[k] = -1.0
        assert np.allclose(harmonics_at(X * R, L, "even", "reflections"), Y, atol=1e-12)
    # every other even harmonic changes sign under some reflection
    full = harmonics_at(X, L, "even")
    assert Y.shape[1] == (L // 2 + 1 if dim == 2 else sum(l // 2 + 1 for l in range(0, L + 1, 2)))
    assert full.shape[1] > Y.shape[1]


def test_symmetric_basis_matches_subset():
    g = build_grid(3, 12)
    a = build_basis(g, 6, "even", "reflections")
    b = build_basis(g, 6, "even").subset("even", "reflections")
    assert a.labels == b.labels
    assert np.array_equal(a.hess, b.hess)
    with pytest.raises(ValueError):
        build_basis(g, 6, "even", "rotations")
