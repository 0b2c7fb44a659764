"""Isotropic position and the good-direction inequality.

The S_2-isotropic position is reached by a fixed-point iteration on the
second-moment matrix of S_2K.  With m_k(xi) = \int lin_{K,xi}^k dV_K, the
direction gap is m_4 - 3n/(n+2) m_2^2 / V(K).  In isotropic position its
Gaussian average equals 3 Var(1/h^2), which is nonnegative, so some
direction has a nonnegative gap.  Ellipsoids have zero gap in every
direction.
"""
import numpy as np

from hbm import apply_linear, isotropize, make_standard
from hbm.body import geometric_distance
from hbm.directions import direction_gap, expectation_identity, sample_directions, scan_directions

K = apply_linear(make_standard("rounded_lq", dim=3, q=6, eps=0.15), np.diag([1.5, 1.0, 0.6]))
T, Kiso, rep = isotropize(K.normalized(1.0))
print("isotropize: defect history", ", ".join(f"{d:.1e}" for d in rep.history))
print("T =\n", np.array2string(T, precision=4))

scan = scan_directions(Kiso, 256)
print(f"\ngap over 256 directions: min {scan.gap.min():.3e}, max {scan.gap.max():.3e}")
print("best direction", np.round(scan.best_xi, 4), f"gap {scan.best_gap:.3e}")

exp = expectation_identity(Kiso)
print(f"\nGaussian average of the gap  {exp.expected_gap:.10f}")
print(f"3 Var(1/h^2)                 {3 * exp.variance:.10f}")
print(f"relative residual            {exp.residual:.1e}")

# zero gap in every direction, up to quadrature error on a 6:1 ellipsoid
E = apply_linear(make_standard("ball", dim=3), np.diag([3.0, 1.0, 0.5]))
gaps = [direction_gap(E, xi) for xi in sample_directions(3, 64)]
print(f"\nellipsoid: max |gap| over 64 directions {max(map(abs, gaps)):.1e}")
print(f"ellipsoid after isotropize: d_G - 1 = {geometric_distance(isotropize(E)[1]) - 1:.1e}")
