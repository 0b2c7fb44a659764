"""Approaching the critical exponent, and beyond it.

As p decreases toward -n, solutions of S_pK = mu for a non-uniform density
drift away from the ball (measured by the Banach-Mazur-type distance d_G);
for the uniform density they stay round.  Past the critical exponent the
functional is unbounded along stretched ellipsoids, while at p = -n it is
constant on them because V(K) V(K°) is a linear invariant.
"""
import numpy as np

from hbm.body import Discretization, make_standard
from hbm.minkowski import TargetMeasure, critical_divergence_scan, supercritical_diagnostic

# solutions concentrate as p -> -n; degree 256 keeps p = -1.9 converged
disc = Discretization(2, 1024, 256)
th = np.arctan2(disc.grid.nodes[:, 1], disc.grid.nodes[:, 0])
ps = [-0.5, -1.0, -1.5, -1.9]
for label, f in [("1 + 0.3 Y20", 1.0 + 0.3 * np.sqrt(2.0) * np.cos(2 * th)), ("1", np.ones_like(th))]:
    rows = critical_divergence_scan(TargetMeasure(f, disc.grid), ps, disc)
    print(f"f = {label}")
    for r in rows:
        print(f"  p = {r['p']:5.2f}   d_G = {r['dG']:.6f}   residual {r['el_residual']:.1e}   "
              f"lambda_1e = {r['lambda_even']:.4f}")

# degree 2 represents every ellipsoid exactly; the fine grid resolves h^{-n}
disc3 = Discretization(3, 768, 2)
ts = [2.0, 4.0, 6.0, 8.0]
fam = [make_standard("ellipsoid", disc3, A=[t, 1.0 / t, 1.0]) for t in ts]
mu = TargetMeasure.uniform(disc3.grid)
print("\nellipsoids diag(t, 1/t, 1), uniform density")
print(f"  {'t':>4s} {'F(p=-3)':>14s} {'-F(p=-3.5)':>14s} {'V V°':>10s}")
for t, a, b in zip(ts, supercritical_diagnostic(mu, -3.0, fam), supercritical_diagnostic(mu, -3.5, fam)):
    print(f"  {t:4.1f} {a['F']:14.8f} {b['minus_F']:14.6f} {a['mahler']:10.6f}")
