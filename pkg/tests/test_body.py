import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbm.body import (
    ConvexityFailure,
    CoefficientBody,
    Discretization,
    InradiusViolation,
    apply_linear,
    ball_volume,
    body_from_json,
    default_discretization,
    geometric_distance,
    make_standard,
    measures,
    polar_volume,
    random_ellipsoid_matrix,
    shifted_support,
)
from hbm.sphere import harmonic_index


def test_ball_oracles(disc):
    n = disc.dim
    B = make_standard("ball", disc, r=2.0)
    assert B.volume == pytest.approx(ball_volume(n) * 2.0**n, rel=1e-12)
    assert polar_volume(B) == pytest.approx(ball_volume(n) / 2.0**n, rel=1e-12)
    assert geometric_distance(B) == pytest.approx(1.0, abs=1e-12)
    V = measures(make_standard("ball", disc), "V")
    assert np.allclose(V.density, 1.0 / n)
    for p in (-1.0, 0.0, 0.5):
        assert np.allclose(measures(make_standard("ball", disc), "Sp", p).density, 1.0)


@pytest.mark.parametrize("n", [2, 3])
def test_ellipsoid_oracles(n):
    disc = default_discretization(n)
    axes = [2.0, 0.5, 1.5][:n]
    E = make_standard("ellipsoid", disc, A=axes)
    assert E.volume == pytest.approx(ball_volume(n) * np.prod(axes), rel=1e-12)
    assert polar_volume(E) == pytest.approx(ball_volume(n) / np.prod(axes), rel=1e-10)
    # nodes need not hit the axes exactly; h attains its extrema on the axes
    assert geometric_distance(E) <= 4.0 + 1e-12
    assert geometric_distance(E) > 3.9


def test_exact_degree_two_representation(disc):
    E = make_standard("ellipsoid", disc, A=[2.0, 0.5, 1.2][: disc.dim])
    labels = harmonic_index(disc.dim, disc.degree)
    deg = np.array([l for l, _ in labels])
    assert np.allclose(E.coeffs[deg > 2], 0.0, atol=1e-12)
    assert np.all(E.coeffs[deg % 2 == 1] == 0.0)


@settings(max_examples=10)
@given(st.integers(0, 10_000))
def test_linear_image_volume(seed):
    disc = default_discretization(3)
    rng = np.random.default_rng(seed)
    K = make_standard("ellipsoid", disc, A=[1.3, 0.8, 1.0])
    T = random_ellipsoid_matrix(3, rng)
    TK = apply_linear(K, T)
    assert TK.volume == pytest.approx(abs(np.linalg.det(T)) * K.volume, rel=1e-8)
    back = apply_linear(TK, np.linalg.inv(T))
    assert np.linalg.norm(back.coeffs - K.coeffs) < 1e-9


def test_identity_map_is_identity(disc):
    K = make_standard("random_even", disc, seed=1)
    assert apply_linear(K, np.eye(disc.dim)) is K


def test_mahler_product_invariance(full3, rng):
    K = make_standard("random_even", full3, seed=4)
    T = random_ellipsoid_matrix(3, rng)
    T /= abs(np.linalg.det(T)) ** (1 / 3)
    TK = apply_linear(K, T)
    assert TK.volume * polar_volume(TK) == pytest.approx(K.volume * polar_volume(K), rel=1e-7)


def test_measure_totals(full2):
    K = make_standard("random_even", full2, seed=2)
    assert measures(K, "V").total == pytest.approx(K.volume, rel=1e-12)
    # S_0 K is n times the cone volume measure
    assert measures(K, "Sp", 0.0).total == pytest.approx(2 * K.volume, rel=1e-12)
    with pytest.raises(ValueError):
        measures(K, "Sp")


def test_random_even_is_even_and_unit_volume(disc):
    K = make_standard("random_even", disc, seed=7)
    assert K.volume == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(K.h[disc.grid.antipode], K.h)


def test_rounded_lq_is_convex_and_cube_like(full3):
    K = make_standard("rounded_lq", full3, q=6, eps=0.15)
    assert K.min_eigenvalue > 0
    X = full3.grid.nodes
    diag = np.argmax(np.abs(X).min(axis=1))
    axis = np.argmax(np.abs(X[:, 2]))
    assert K.h[diag] > K.h[axis]


def test_convexity_failure(disc):
    c = make_standard("ball", disc).even_coeffs.copy()
    c[disc.basis().degrees == 2] += 3.0 * c[0]
    with pytest.raises(ConvexityFailure):
        CoefficientBody(disc, c)


def test_json_round_trip(disc):
    K = make_standard("random_even", disc, seed=3)
    text = K.to_json()
    obj = json.loads(text)
    assert obj["meta"]["field"] == "h^2"
    K2 = body_from_json(text, disc)
    assert np.array_equal(K2.coeffs, np.array(obj["coeffs"]))
    assert K2.to_json() == text


def test_shifted_support(disc):
    B = make_standard("ball", disc)
    e1 = np.eye(disc.dim)[0]
    S = shifted_support(B, 1.0, 2, e1)
    assert np.allclose(S.h, 1.0 + disc.grid.nodes[:, 0] ** 2)
    assert S.min_eigenvalue >= -1e-9
    K = make_standard("random_even", disc, seed=5)
    R = 1.0 / K.h.min()
    S = shifted_support(K, R, 2, e1)
    assert S.min_eigenvalue >= -1e-9
    with pytest.raises(InradiusViolation):
        shifted_support(K, 0.5 * R, 2, e1)


def test_bad_kind(disc):
    with pytest.raises(ValueError):
        make_standard("cube", disc)
    with pytest.raises(ValueError):
        make_standard("ellipsoid", disc, A=np.zeros(disc.dim))


def test_reflection_symmetric_discretization(full3):
    sym = Discretization(3, full3.resolution, full3.degree, symmetry="reflections")
    assert sym.basis().size < full3.basis().size
    K, Ks = make_standard("rounded_lq", full3), make_standard("rounded_lq", sym)
    assert np.allclose(K.coeffs, Ks.coeffs, atol=1e-13)
    assert Ks.volume == pytest.approx(K.volume, rel=1e-13)
    assert sym.describe()["symmetry"] == "reflections"
    E = make_standard("ellipsoid", sym, A=[2.0, 1.0, 0.5])
    assert E.volume == pytest.approx(4 * np.pi / 3, rel=1e-10)
    with pytest.raises(ValueError):
        make_standard("ellipsoid", sym, A=[[1.0, 0.3, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ValueError):
        CoefficientBody(sym, make_standard("random_even", full3, seed=1).coeffs)
    with pytest.raises(ValueError):
        Discretization(3, 16, 4, symmetry="rotations")
