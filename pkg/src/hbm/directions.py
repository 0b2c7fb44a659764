"""Moments of the functionals lin_{K,xi} and the good-direction inequality.

m2(xi) = \\int lin_{K,xi}^2 dV_K is a quadratic form and m4(xi) a quartic
form in xi, with coefficient tensors assembled once by quadrature.  The
gap m4 - (3n/(n+2)) m2^2 / V(K) is nonnegative for some xi; averaged over
Gaussian xi in isotropic position it equals 3 Var_{V_K}(1/h^2) when
V(K) = 1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .affine import isotropize, isotropy_defect
from .body import Body

__all__ = [
    "NotIsotropic",
    "DirectionScan",
    "ExpectationReport",
    "moment_tensors",
    "lin_moments",
    "direction_gap",
    "scan_directions",
    "find_good_direction",
    "expectation_identity",
    "sample_directions",
    "gap_constant",
]


class NotIsotropic(ValueError):
    pass


def gap_constant(dim: int) -> float:
    return 3.0 * dim / (dim + 2.0)


def moment_tensors(K: Body):
    """Coefficient tensors (M2, M4) with m2 = M2[xi,xi], m4 = M4[xi,xi,xi,xi]."""
    X = K.grid.nodes
    rho = K.grid.weights * K.cone_density
    w2 = rho / K.h**2
    w4 = w2 / K.h**2
    M2 = np.einsum("k,ki,kj->ij", w2, X, X)
    M4 = np.einsum("k,ki,kj,kl,km->ijlm", w4, X, X, X, X, optimize=True)
    return M2, M4


def lin_moments(K: Body, xi) -> tuple[float, float]:
    """(\\int lin^2 dV_K, \\int lin^4 dV_K) by direct quadrature."""
    xi = np.asarray(xi, dtype=float)
    l = K.grid.nodes @ xi / K.h
    rho = K.cone_density
    return float(K.grid.integrate(l**2 * rho)), float(K.grid.integrate(l**4 * rho))


def direction_gap(K: Body, xi) -> float:
    m2, m4 = lin_moments(K, xi)
    return m4 - gap_constant(K.dim) * m2 * m2 / K.volume


def sample_directions(dim: int, n_samples: int) -> np.ndarray:
    """Quasi-uniform unit vectors on a half-sphere (gaps are even in xi)."""
    if dim == 2:
        a = np.pi * (np.arange(n_samples) + 0.5) / n_samples
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    # Fibonacci lattice on the upper hemisphere
    k = np.arange(n_samples) + 0.5
    z = 1.0 - k / n_samples
    r = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + 5**0.5) * k
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


@dataclass(frozen=True, eq=False)
class DirectionScan:
    """Per-direction moments and gaps for one body."""

    xi_grid: np.ndarray
    m2: np.ndarray
    m4: np.ndarray
    gap: np.ndarray
    best_xi: np.ndarray
    best_gap: float
    volume: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        n = self.xi_grid.shape[1]
        w.writerow([f"xi{i}" for i in range(n)] + ["m2", "m4", "gap"])
        for x, a, b, g in zip(self.xi_grid, self.m2, self.m4, self.gap):
            w.writerow([repr(float(v)) for v in x] + [repr(float(a)), repr(float(b)), repr(float(g))])
        return buf.getvalue()


def _from_angles(dim, ang):
    if dim == 2:
        return np.array([np.cos(ang[0]), np.sin(ang[0])])
    t, p = ang
    return np.array([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])


def _to_angles(xi):
    if xi.size == 2:
        return np.array([np.arctan2(xi[1], xi[0])])
    return np.array([np.arccos(np.clip(xi[2], -1, 1)), np.arctan2(xi[1], xi[0])])


def scan_directions(K: Body, n_samples: int = 512, refine: bool = True) -> DirectionScan:
    """Evaluate the gap over sampled directions and refine the best one locally."""
    M2, M4 = moment_tensors(K)
    V = K.volume
    c = gap_constant(K.dim)
    xi = sample_directions(K.dim, n_samples)
    m2 = np.einsum("ki,ij,kj->k", xi, M2, xi)
    m4 = np.einsum("ijlm,ki,kj,kl,km->k", M4, xi, xi, xi, xi, optimize=True)
    gap = m4 - c * m2**2 / V
    i = int(np.argmax(gap))
    best, best_gap = xi[i], float(gap[i])
    if refine:

        def neg(ang):
            u = _from_angles(K.dim, ang)
            q2 = u @ M2 @ u
            q4 = np.einsum("ijlm,i,j,l,m->", M4, u, u, u, u)
            return -(q4 - c * q2 * q2 / V)

        res = minimize(neg, _to_angles(best), method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-16})
        if -res.fun > best_gap:
            best, best_gap = _from_angles(K.dim, res.x), float(-res.fun)
    return DirectionScan(xi, m2, m4, gap, best, best_gap, V)


def find_good_direction(K: Body, n_samples: int = 512, tol: float = 1e-10):
    """A direction xi with nonnegative gap for K.

    K is moved to S_2-isotropic position by T, the best direction xi' of
    T(K) is found by scanning, and xi = T^{-1} xi' / |T^{-1} xi'| is returned
    together with its gap evaluated on the original body.
    """
    T, Kiso, _ = isotropize(K, tol=tol)
    scan = scan_directions(Kiso, n_samples)
    xi = np.linalg.solve(T, scan.best_xi)
    xi /= np.linalg.norm(xi)
    return xi, direction_gap(K, xi)


@dataclass(frozen=True)
class ExpectationReport:
    residual: float
    expected_gap: float
    variance: float
    A: float
    B: float


def expectation_identity(K: Body, defect_tol: float = 1e-8) -> ExpectationReport:
    """Compare the Gaussian average of the gap with 3 Var_{V_K}(1/h^2).

    The body must be in S_2-isotropic position; it is rescaled to unit
    volume here.  The average uses E<xi,u>^4 = 3|u|^4 and
    E<xi,u>^2<xi,v>^2 = 2<u,v>^2 + |u|^2|v|^2, so that
    E gap = 3 \\int h^{-4} dV - (3n/(n+2)) (2A + B^2)
    with A = ||\\int theta theta^t h^{-2} dV||_F^2 and B = \\int h^{-2} dV.
    """
    rep = isotropy_defect(K)
    if rep.defect > defect_tol:
        raise NotIsotropic(f"isotropy defect {rep.defect:.3e} exceeds {defect_tol:.1e}")
    if abs(K.volume - 1.0) > 1e-12:
        K = K.normalized(1.0)
    n = K.dim
    X = K.grid.nodes
    rho = K.grid.weights * K.cone_density
    u = K.h**-2
    M = (X * (rho * u)[:, None]).T @ X
    A = float(np.sum(M * M))
    B = float(rho @ u)
    I4 = float(rho @ u**2)
    expected = 3.0 * I4 - gap_constant(n) * (2.0 * A + B * B)
    var = I4 - B * B / K.volume
    return ExpectationReport(abs(expected - 3.0 * var), expected, var, A, B)
