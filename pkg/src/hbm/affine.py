"""Centro-affine positioning: Gamma_{-p} gauges and the S_2-isotropic position.

The Gamma_{-2} body of K has gauge ||x||^2 = x^t Q x / V(K), where
Q = \\int theta theta^t dS_2K is the second moment matrix of
S_2K = h^{-1} S_K.  Because Gamma_{-2}(T K) = T Gamma_{-2} K for T in SL_n,
the map T = Q^{1/2} (normalized to unit determinant) sends K to isotropic
position in one step up to discretization error; the fixed-point loop only
polishes that error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .body import Body, apply_linear
from .spectral import lin

__all__ = [
    "ZeroVector",
    "NoConvergence",
    "IsotropyReport",
    "moment_matrix",
    "gamma_gauge",
    "isotropy_defect",
    "isotropize",
]


class ZeroVector(ValueError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def moment_matrix(K: Body) -> np.ndarray:
    """Q_uv = \\int <theta,u><theta,v> dS_2K."""
    w = K.grid.weights * K.det / K.h
    X = K.grid.nodes
    Q = (X * w[:, None]).T @ X
    return 0.5 * (Q + Q.T)


def gamma_gauge(K: Body, p: float, x) -> float:
    """||x||_{Gamma_{-p}K} = ((n / V) \\int |lin_{K,x}|^p dV_K)^{1/p}."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ZeroVector("gauge of the zero vector is undefined")
    vals = np.abs(K.grid.nodes @ x / K.h) ** p
    I = float(K.grid.integrate(vals * K.cone_density))
    return (K.dim * I / K.volume) ** (1.0 / p)


def _defect(Q: np.ndarray) -> float:
    n = Q.shape[0]
    m = np.trace(Q) / n
    return float(np.linalg.norm(Q - m * np.eye(n)) / m)


@dataclass(frozen=True, eq=False)
class IsotropyReport:
    """Moment matrix of S_2K, its relative deviation from isotropy, and the transform."""

    moment_matrix: np.ndarray
    defect: float
    transform: np.ndarray
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def trace(self) -> float:
        return float(np.trace(self.moment_matrix))


def isotropy_defect(K: Body) -> IsotropyReport:
    Q = moment_matrix(K)
    return IsotropyReport(Q, _defect(Q), np.eye(K.dim))


def _sqrt_spd(Q: np.ndarray, power: float) -> np.ndarray:
    w, U = np.linalg.eigh(Q)
    return (U * w**power) @ U.T


def isotropize(K: Body, tol: float = 1e-10, max_iter: int = 50):
    """Find T in SL_n with S_2 T(K) isotropic.

    Each step multiplies the accumulated map by Q(S_2 T(K))^{1/2}, scaled
    to unit determinant, and re-evaluates on the original body so that no
    truncation error accumulates.  A step that increases the defect is
    retried at half length.

    Returns ``(T, K_iso, report)``.
    """
    n = K.dim
    T = np.eye(n)
    cur = K
    Q = moment_matrix(cur)
    d = _defect(Q)
    history = [d]
    it = 0
    while d >= tol:
        if it >= max_iter:
            rep = IsotropyReport(Q, d, T, it, history)
            raise NoConvergence(f"isotropization stalled at defect {d:.3e} after {it} iterations", rep)
        alpha = 1.0
        while True:
            S = _sqrt_spd(Q / (np.trace(Q) / n), 0.5 * alpha)
            S /= np.linalg.det(S) ** (1.0 / n)
            T_new = S @ T
            new = apply_linear(K, T_new)
            Q_new = moment_matrix(new)
            d_new = _defect(Q_new)
            if d_new < d or alpha < 1e-3:
                break
            alpha *= 0.5
        it += 1
        T, cur, Q, d = T_new, new, Q_new, d_new
        history.append(d)
    return T, cur, IsotropyReport(Q, d, T, it, history)
