import numpy as np
import pytest

from hbm.affine import ZeroVector, gamma_gauge, isotropize, isotropy_defect, moment_matrix
from hbm.body import apply_linear, geometric_distance, make_standard, measures, random_ellipsoid_matrix


def test_trace_is_total_mass(disc):
    K = make_standard("random_even", disc, seed=1)
    Q = moment_matrix(K)
    assert np.trace(Q) == pytest.approx(measures(K, "Sp", 2.0).total, rel=1e-12)


def test_ball_is_isotropic(disc):
    assert isotropy_defect(make_standard("ball", disc)).defect < 1e-13


@pytest.mark.parametrize("n", [2, 3])
def test_ellipsoid_goes_to_ball(n, full2, full3, rng):
    disc = full2 if n == 2 else full3
    E = apply_linear(make_standard("ball", disc), random_ellipsoid_matrix(n, rng))
    T, K, rep = isotropize(E)
    assert rep.defect < 1e-10
    assert abs(np.linalg.det(T)) == pytest.approx(1.0, rel=1e-12)
    assert geometric_distance(K) < 1 + 1e-6


def test_isotropic_position_makes_gauge_constant(full3):
    K = make_standard("random_even", full3, seed=3)
    K = apply_linear(K, np.diag([1.4, 0.9, 0.8]))
    _, Kiso, rep = isotropize(K)
    assert rep.iterations <= 50
    xs = np.random.default_rng(0).normal(size=(6, 3))
    xs /= np.linalg.norm(xs, axis=1)[:, None]
    vals = [gamma_gauge(Kiso, 2, x) for x in xs]
    assert np.ptp(vals) < 1e-8 * np.mean(vals)


def test_gauge_errors(disc):
    with pytest.raises(ZeroVector):
        gamma_gauge(make_standard("ball", disc), 2, np.zeros(disc.dim))
