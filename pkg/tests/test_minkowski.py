import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbm.body import Discretization, default_discretization, make_standard, perturbed
from hbm.minkowski import (
    PreconditionUnmet,
    TargetMeasure,
    critical_divergence_scan,
    el_residual,
    first_variation,
    functional,
    nonuniqueness_experiment,
    normalized_functional,
    rows_to_csv,
    second_variation,
    separation,
    solve,
    supercritical_diagnostic,
)
from hbm.spectral import variance


def _z(disc, rng, decay=0.4):
    b = disc.basis()
    c = rng.normal(size=b.size) * decay**b.degrees
    c[0] = 0.0
    z = b.jet().combine(c)
    return z * (0.5 / np.abs(z.value).max())


def test_target_measure_validation(disc2):
    g = disc2.grid
    with pytest.raises(ValueError):
        TargetMeasure(-np.ones(g.size), g)
    with pytest.raises(ValueError):
        TargetMeasure(1.0 + 0.5 * g.nodes[:, 0], g)  # odd part
    with pytest.raises(ValueError):
        TargetMeasure(np.ones(3), g)
    # mass only near +-e1 still sees every hemisphere
    TargetMeasure(np.exp(10 * g.nodes[:, 0] ** 2), g)
    assert TargetMeasure.uniform(g).is_uniform


def test_functional_is_zero_homogeneous(disc, rng):
    K = make_standard("random_even", disc, seed=1)
    mu = TargetMeasure.uniform(disc.grid)
    for p in (0.5, 0.0, -1.0):
        assert normalized_functional(K.scaled(3.0), mu, p) == pytest.approx(normalized_functional(K, mu, p), abs=1e-10)
        assert functional(K.scaled(3.0), mu, p) == pytest.approx(functional(K, mu, p), rel=1e-10)


@settings(max_examples=6)
@given(st.integers(0, 1000), st.sampled_from([0.5, 0.0, -1.0, -1.7]))
def test_first_variation_second_order(seed, p):
    disc = default_discretization(2)
    rng = np.random.default_rng(seed)
    K = make_standard("random_even", disc, seed=seed)
    mu = TargetMeasure(np.exp(0.3 * disc.grid.nodes[:, 0] ** 2), disc.grid)
    z = _z(disc, rng)
    g = first_variation(K, mu, p)
    exact = float(disc.grid.integrate(z.value * g))
    G = lambda e: normalized_functional(perturbed(K, z, e), mu, p)
    hs = np.array([4e-2, 2e-2, 1e-2, 5e-3])
    errs = np.array([abs((G(h) - G(-h)) / (2 * h) - exact) for h in hs])
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 2.0) < 0.1


@pytest.mark.parametrize("p", [0.5, 0.0, -1.0])
def test_second_variation_matches_finite_differences(full2, rng, p):
    K = make_standard("random_even", full2, seed=3)
    mu = TargetMeasure.from_body(K, p)
    z = _z(full2, rng)
    h = 1e-3
    G = lambda e: normalized_functional(perturbed(K, z, e), mu, p)
    fd = (G(h) - 2 * G(0) + G(-h)) / h**2
    assert second_variation(K, p, z) == pytest.approx(fd, rel=1e-4)


def test_second_variation_ball_oracle(full3):
    p = -1.0
    B = make_standard("ball", full3)
    b = full3.basis()
    z = b.jet()[int(np.argmax(b.degrees == 2))]
    n = 3
    expected = p * (n + p) / B.volume * variance(B, z)
    assert second_variation(B, p, z) == pytest.approx(expected, rel=1e-10)
    one = b.jet()[0]
    assert abs(second_variation(B, p, one)) < 1e-12


def test_el_residual_oracles(disc):
    K = make_standard("random_even", disc, seed=2)
    res, c = el_residual(K, TargetMeasure.from_body(K, -0.5), -0.5)
    assert res < 1e-12 and c == pytest.approx(1.0, rel=1e-12)
    B = make_standard("ball", disc)
    res, c = el_residual(B, TargetMeasure.uniform(disc.grid), 0.3)
    assert res < 1e-10 and c == pytest.approx(1.0, rel=1e-10)
    aniso = TargetMeasure(1 + 0.5 * disc.grid.nodes[:, 0] ** 2, disc.grid)
    assert el_residual(B, aniso, 0.3)[0] > 1e-3


@pytest.mark.parametrize("p", [0.5, -1.0])
def test_solver_recovers_ball(full2, p):
    mu = TargetMeasure.uniform(full2.grid)
    init = make_standard("ellipsoid", full2, A=[1.6, 0.7])
    rep = solve(mu, p, init)
    assert rep.status == "Converged"
    assert rep.dG < 1 + 1e-3 and rep.el_residual < 1e-5


def test_solver_matches_body_measure(full2):
    K = make_standard("random_even", full2, seed=4)
    p = 0.5
    rep = solve(TargetMeasure.from_body(K, p), p, make_standard("ball", full2))
    assert rep.status == "Converged"
    assert separation(K, rep.body) < 1 + 1e-4


def test_solver_rejects_bad_exponents(disc2):
    mu = TargetMeasure.uniform(disc2.grid)
    B = make_standard("ball", disc2)
    with pytest.raises(ValueError):
        solve(mu, 1.0, B)
    with pytest.raises(ValueError):
        solve(mu, -2.0, B)


def test_precondition_for_ellipsoids(disc2):
    E = make_standard("ellipsoid", disc2, A=[1.5, 0.5])
    for p in (-1.9, -1.0, 0.5):
        with pytest.raises(PreconditionUnmet):
            nonuniqueness_experiment(E, p, n_init=2)


def test_uniform_scan_stays_at_ball(disc2):
    rows = critical_divergence_scan(TargetMeasure.uniform(disc2.grid), [-0.5, -1.5], disc2)
    assert all(abs(r["dG"] - 1.0) < 1e-3 for r in rows)
    assert all(r["lambda_even"] >= 2 - r["p"] - 1e-2 for r in rows)
    text = rows_to_csv(rows, ["p", "dG"])
    assert text.startswith("p,dG\r\n")


def test_supercritical_rows():
    # h^{-n} peaks sharply on stretched ellipsoids; degree 2 represents them exactly
    disc = Discretization(3, 256, 2)
    fam = [make_standard("ellipsoid", disc, A=[t, 1 / t, 1.0]) for t in (2.0, 3.0)]
    mu = TargetMeasure.uniform(disc.grid)
    rows = supercritical_diagnostic(mu, -3.0, fam)
    assert rows[0]["F"] == pytest.approx(rows[1]["F"], abs=1e-8)
    with pytest.raises(ValueError):
        supercritical_diagnostic(mu, -2.0, fam)


def test_solver_on_symmetric_discretization():
    disc = Discretization(3, 32, 8, symmetry="reflections")
    mu = TargetMeasure.uniform(disc.grid)
    rep = solve(mu, -1.0, make_standard("ellipsoid", disc, A=[1.4, 0.8, 1.0]))
    assert rep.status == "Converged" and rep.dG < 1 + 1e-3
    # a non-invariant start is group-averaged, which keeps it convex
    init = make_standard("random_even", Discretization(3, 32, 8), seed=2)
    assert solve(mu, 0.5, init, disc).status == "Converged"
    from hbm.spectral import lambda1_even

    with pytest.raises(ValueError):
        lambda1_even(rep.body)
