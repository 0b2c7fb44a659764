"""Two bodies with the same L^p surface area measure.

For a smoothed square K1 the first even eigenvalue is about 2.92 < 4, so at
p = n - lambda_1e(K1) - 1/2 the body K1 is a saddle of the normalized
functional rather than a minimizer.  Descending from K1 pushed along its
first even eigenfunction lands on a second, much more elongated body K2
with S_p K2 = S_p K1.
"""
import numpy as np

from hbm import lambda1_even, make_standard
from hbm.body import Discretization
from hbm.minkowski import TargetMeasure, el_residual, nonuniqueness_experiment

disc = Discretization(2, 512, 128)
K1 = make_standard("rounded_lq", disc, q=6, eps=0.15)
lam = lambda1_even(K1)[0]
p = 2 - lam - 0.5
print(f"lambda_1e(K1) = {lam:.6f},  p = {p:.6f},  n - p = {2 - p:.6f}")

out = nonuniqueness_experiment(K1, p, disc, n_init=3, lam=lam, stop_on_found=True)
for r in out["runs"]:
    print(f"  init {r['init']:10s} {r['status']:12s} residual {r['el_residual']:.1e}  separation {r['separation']:.3f}")
if out["found"]:
    K2 = out["K2"]
    mu = TargetMeasure.from_body(K1, p)
    print(f"\nK2 found from {out['init']}: separation {out['separation']:.3f}")
    print(f"residual of K2 against S_p K1: {el_residual(K2, mu, p)[0]:.1e}")
    r = K2.h / K1.h
    print(f"h_K2 / h_K1 ranges over [{r.min():.3f}, {r.max():.3f}]")
    print(f"lambda_1e(K2) = {lambda1_even(K2)[0]:.4f}")
else:
    print("no separated solution found")
