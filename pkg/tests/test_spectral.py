import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbm.body import apply_linear, make_standard, random_ellipsoid_matrix, shifted_support
from hbm.mixed_vol import vk, vk_mixed
from hbm.spectral import (
    DegenerateTestBody,
    DegenerateTestFunction,
    assemble,
    dirichlet_energy,
    dirichlet_form,
    lambda1,
    lambda1_even,
    laplacian,
    lin,
    minimize_quotient_C,
    quotient_C,
    rayleigh,
    spectrum,
)


def _random_even(disc, rng, decay=0.4):
    b = disc.basis()
    return b.jet().combine(rng.normal(size=b.size) * decay**b.degrees)


def test_ball_spectrum_is_round(disc):
    n = disc.dim
    B = make_standard("ball", disc)
    ev = spectrum(B, "even").eigenvalues
    ls = np.arange(0, disc.degree + 1, 2)
    mult = [1] + [(2 if n == 2 else 2 * l + 1) for l in ls[1:]]
    expected = np.repeat(ls * (ls + n - 2.0), mult)
    assert np.allclose(ev, expected, atol=1e-8)


def test_assembly_invariants(disc):
    K = make_standard("random_even", disc, seed=3)
    asm = assemble(K)
    A, M = asm.stiffness, asm.mass
    assert np.allclose(A, A.T, atol=1e-12)
    assert np.linalg.eigvalsh(M).min() > 0
    assert np.linalg.eigvalsh(A).min() > -1e-10
    assert np.allclose(A @ asm.constant_coefficients(), 0.0, atol=1e-9)


@pytest.mark.parametrize("n", [2, 3])
def test_hilbert_eigenvalue(n, full2, full3):
    disc = full2 if n == 2 else full3
    K = make_standard("rounded_lq", disc, q=6, eps=0.15)
    lam, mult, res = lambda1(K)
    assert lam == pytest.approx(n - 1, rel=1e-6)
    assert mult == n
    assert res.subspace == "odd"


@pytest.mark.parametrize("n", [2, 3])
def test_even_eigenvalue_affine_invariant(n, full2, full3, rng):
    disc = full2 if n == 2 else full3
    K = make_standard("random_even", disc, seed=2)
    T = random_ellipsoid_matrix(n, rng)
    a = lambda1_even(K)[0]
    b = lambda1_even(apply_linear(K, T))[0]
    assert abs(a - b) < 1e-3
    assert a < 2 * n - 0.05


def test_ellipsoid_even_eigenvalue(full2):
    E = make_standard("ellipsoid", full2, A=[2.0, 0.5])
    assert lambda1_even(E)[0] == pytest.approx(4.0, abs=1e-6)


def test_energy_of_powers_of_lin(disc, rng):
    n = disc.dim
    K = make_standard("random_even", disc, seed=6)
    xi = rng.normal(size=n)
    l = lin(K, xi / np.linalg.norm(xi))
    for p in (1, 2, 3):
        E = dirichlet_energy(K, l**p)
        I = vk_mixed(K, l.value ** (2 * p))
        assert E == pytest.approx((n - 1) * p * p / (2 * p - 1) * I, rel=1e-9)


def test_integration_by_parts_and_mixed_volume_link(disc, rng):
    n = disc.dim
    K = make_standard("random_even", disc, seed=8)
    z, w = _random_even(disc, rng), _random_even(disc, rng)
    lhs = vk_mixed(K, -laplacian(K, z) * w.value)
    assert lhs == pytest.approx(dirichlet_form(K, z, w), rel=1e-8)
    link = vk_mixed(K, laplacian(K, z) * w.value) / (n - 1)
    assert link == pytest.approx(vk(K, w, z) - vk_mixed(K, w.value * z.value), rel=1e-8)


def test_rayleigh_bounds(disc, rng):
    K = make_standard("random_even", disc, seed=9)
    lam = lambda1_even(K)[0]
    for _ in range(5):
        assert rayleigh(K, _random_even(disc, rng)) >= lam - 1e-6
    B = make_standard("ball", disc)
    Y2 = disc.basis().jet()[int(np.argmax(disc.basis().degrees == 2))]
    assert rayleigh(B, Y2) == pytest.approx(2 * disc.dim, rel=1e-10)
    one = disc.basis().jet()[0]
    with pytest.raises(DegenerateTestFunction):
        rayleigh(K, one)


def test_eigenvector_is_eigenfunction(disc):
    K = make_standard("random_even", disc, seed=10)
    lam, v, asm = lambda1_even(K)
    z = asm.trial.combine(v)
    assert rayleigh(K, z) == pytest.approx(lam, rel=1e-10)


def test_quotient_C(full2):
    K = make_standard("rounded_lq", full2, q=6, eps=0.15)
    lam = lambda1_even(K)[0]
    val, _, _ = minimize_quotient_C(K)
    assert val == pytest.approx(lam, rel=1e-8)
    R = 1.0 / K.h.min()
    xi = np.array([1.0, 0.0])
    q1 = quotient_C(K, shifted_support(K, R, 2, xi))
    q2 = quotient_C(K, shifted_support(K, R + 1.0, 2, xi))
    assert q1 == pytest.approx(q2, abs=1e-9)
    with pytest.raises(DegenerateTestBody):
        quotient_C(K, K.scaled(2.0))


@settings(max_examples=5)
@given(st.integers(0, 1000))
def test_hilbert_on_random_bodies(seed):
    from hbm.body import default_discretization

    disc = default_discretization(2)
    K = make_standard("random_even", disc, seed=seed)
    lam, mult, _ = lambda1(K)
    assert lam == pytest.approx(1.0, rel=1e-6) and mult == 2
    assert lambda1_even(K)[0] <= 4.0 + 1e-6
