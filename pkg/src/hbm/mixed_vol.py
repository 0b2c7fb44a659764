"""Mixed volumes of (differences of) support functions.

For fields f_1..f_n on the sphere with D^2 f = Hess f + f I,

* n = 2:  V(f_1, f_2) = 1/2 \\int f_1 tr D^2 f_2
* n = 3:  V(f_1, f_2, f_3) = 1/3 \\int f_1 D(D^2 f_2, D^2 f_3)

where D(A, B) = (tr A tr B - tr AB) / 2 is the mixed discriminant of two
2x2 matrices.  The continuum formula is symmetric in all slots; the
discrete value is averaged over slot permutations and the spread is
returned as a diagnostic.
"""

from __future__ import annotations

import numpy as np

from .body import Body
from .jet import Jet, constant_jet

__all__ = [
    "DimensionMismatch",
    "mixed_discriminant",
    "mixed_volume",
    "vk",
    "vk_mixed",
    "vk_matrix",
    "minkowski2_gap",
]


class DimensionMismatch(ValueError):
    pass


def mixed_discriminant(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """D(A, B) for stacks of 2x2 matrices (broadcasting over leading axes)."""
    trA = A[..., 0, 0] + A[..., 1, 1]
    trB = B[..., 0, 0] + B[..., 1, 1]
    trAB = np.einsum("...ij,...ji->...", A, B)
    return 0.5 * (trA * trB - trAB)


def _as_jet(entry) -> Jet:
    if isinstance(entry, Body):
        return entry.h_jet
    if isinstance(entry, Jet):
        return entry
    raise TypeError("mixed volume entries must be Bodies or Jets")


def _slot(f: Jet, g: Jet, k: Jet | None, w: np.ndarray, dim: int) -> float:
    if dim == 2:
        return 0.5 * float(w @ (f.value * np.trace(g.D2, axis1=-2, axis2=-1)))
    return float(w @ (f.value * mixed_discriminant(g.D2, k.D2))) / 3.0


def mixed_volume(entries, grid, diagnostics: bool = False):
    """V(f_1, ..., f_n) by quadrature, symmetrized over slot permutations.

    Parameters
    ----------
    entries : sequence of Body or Jet
        Exactly n fields.
    grid : SphereGrid
    diagnostics : bool
        Also return the relative spread between slot orderings.
    """
    jets = [_as_jet(e) for e in entries]
    n = grid.dim
    if len(jets) != n:
        raise DimensionMismatch(f"need {n} entries for n={n}, got {len(jets)}")
    for j in jets:
        if j.value.shape != (grid.size,) or j.tangent_dim != n - 1:
            raise DimensionMismatch("entry does not live on the given grid")
    w = grid.weights
    if n == 2:
        vals = [_slot(jets[0], jets[1], None, w, 2), _slot(jets[1], jets[0], None, w, 2)]
    else:
        a, b, c = jets
        vals = [_slot(a, b, c, w, 3), _slot(b, a, c, w, 3), _slot(c, a, b, w, 3)]
    value = float(np.mean(vals))
    if not diagnostics:
        return value
    spread = (max(vals) - min(vals)) / max(abs(value), np.finfo(float).tiny)
    return value, spread


def vk(K: Body, f1: Jet, f2: Jet) -> float:
    """V_K(f_1, f_2) = V(f_1 h_K, f_2 h_K, K[n-2])."""
    h = K.h_jet
    fields = [f1 * h, f2 * h] + [h] * (K.dim - 2)
    return mixed_volume(fields, K.grid)


def vk_mixed(K: Body, f, m: int = 1) -> float:
    """V_K(f; m): m = 1 gives \\int f dV_K, m = 2 gives V(f h_K [2], K[n-2])."""
    if m == 1:
        values = f.value if isinstance(f, Jet) else np.asarray(f, dtype=float)
        return float(K.grid.integrate(values * K.cone_density))
    if m == 2:
        if not isinstance(f, Jet):
            raise TypeError("m = 2 needs the derivatives of f (pass a Jet)")
        return vk(K, f, f)
    raise ValueError("m must be 1 or 2")


def vk_matrix(K: Body, psi: Jet) -> np.ndarray:
    """Gram matrix V_K(psi_a, psi_b) for a batched jet of trial functions."""
    h = K.h_jet
    F = psi * h
    w = K.grid.weights
    if K.dim == 2:
        tr = F.D2[..., 0, 0]
        V = 0.5 * (F.value * w[:, None]).T @ tr
    else:
        D = mixed_discriminant(F.D2, h.D2[:, None])
        V = (F.value * w[:, None]).T @ D / 3.0
        # third slot ordering: h against D(D^2 F_a, D^2 F_b)
        D2F = F.D2
        tr = D2F[..., 0, 0] + D2F[..., 1, 1]
        wh = w * h.value
        B = D2F.shape[1]
        X = np.transpose(D2F * wh[:, None, None, None], (1, 0, 2, 3)).reshape(B, -1)
        Y = np.transpose(np.swapaxes(D2F, -1, -2), (1, 0, 2, 3)).reshape(B, -1)
        cross = X @ Y.T
        V3 = 0.5 * ((tr * wh[:, None]).T @ tr - cross) / 3.0
        V = (V + V.T + V3) / 3.0
        return V
    return 0.5 * (V + V.T)


def minkowski2_gap(K: Body, L: Body) -> float:
    """V(L[1], K[n-1])^2 - V(L[2], K[n-2]) V(K); nonnegative for convex L, K."""
    if K.dim != L.dim or K.grid is not L.grid:
        raise DimensionMismatch("bodies must share a discretization")
    n = K.dim
    v1 = mixed_volume([L] + [K] * (n - 1), K.grid)
    v2 = mixed_volume([L, L] + [K] * (n - 2), K.grid)
    return v1 * v1 - v2 * K.volume


def unit_jet(K: Body) -> Jet:
    return constant_jet(1.0, K.grid.size, K.dim - 1)
