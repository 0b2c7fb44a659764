import numpy as np
import pytest

from hbm.affine import isotropize
from hbm.body import apply_linear, make_standard, random_ellipsoid_matrix
from hbm.directions import (
    NotIsotropic,
    direction_gap,
    expectation_identity,
    find_good_direction,
    lin_moments,
    moment_tensors,
    sample_directions,
    scan_directions,
)


def test_ball_moments(full3):
    B = make_standard("ball", full3)
    m2, m4 = lin_moments(B, np.array([0.0, 0.0, 1.0]))
    # \int x^2 / 3 and \int x^4 / 3 over S^2
    assert m2 == pytest.approx(4 * np.pi / 9, rel=1e-12)
    assert m4 == pytest.approx(4 * np.pi / 15, rel=1e-12)


def test_ellipsoid_gaps_vanish(full3, rng):
    E = apply_linear(make_standard("ball", full3), random_ellipsoid_matrix(3, rng))
    for xi in sample_directions(3, 64):
        assert abs(direction_gap(E, xi)) < 1e-8


def test_tensors_match_direct_moments(full2, rng):
    K = make_standard("random_even", full2, seed=2)
    M2, M4 = moment_tensors(K)
    xi = rng.normal(size=2)
    m2, m4 = lin_moments(K, xi)
    assert xi @ M2 @ xi == pytest.approx(m2, rel=1e-12)
    assert np.einsum("ijkl,i,j,k,l->", M4, xi, xi, xi, xi) == pytest.approx(m4, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3])
def test_good_direction_exists(n, full2, full3):
    disc = full2 if n == 2 else full3
    K = apply_linear(make_standard("rounded_lq", disc, q=6, eps=0.15), np.diag([1.3, 0.8, 1.0][:n]))
    xi, gap = find_good_direction(K, 256)
    assert np.linalg.norm(xi) == pytest.approx(1.0)
    assert gap >= -1e-8 * K.volume


def test_expectation_identity(full3):
    K = make_standard("random_even", full3, seed=5)
    _, Kiso, _ = isotropize(K)
    rep = expectation_identity(Kiso)
    assert rep.residual < 1e-7
    assert rep.variance > 0
    with pytest.raises(NotIsotropic):
        expectation_identity(apply_linear(K, np.diag([2.0, 0.5, 1.0])))


def test_scan_csv_shape(full2):
    scan = scan_directions(make_standard("ball", full2), 16)
    lines = scan.to_csv().split("\r\n")
    assert lines[0] == "xi0,xi1,m2,m4,gap"
    assert len([l for l in lines if l]) == 17
    assert np.allclose(scan.gap, 0.0, atol=1e-12)
