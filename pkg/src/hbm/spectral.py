"""Galerkin discretization of the Hilbert-Brunn-Minkowski operator.

Delta_K is the weighted Laplacian of the metric g_K = D^2 h / h with
weight V_K, so its Dirichlet form is

    \\int g_K^{ij} z_i w_j dV_K = (1/n) \\int h^2 adj(D^2 h)^{ij} z_i w_j d m.

Trial functions are adapted to K: even ones are phi / s~ and odd ones are
phi / h, where phi runs over real harmonics and s~ is the projection of
h^2 onto the body degree.  Constants and the functions lin_{K,xi} then lie
exactly in the trial space, and for ellipsoids so do the quadratic
eigenfunctions lin^2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .body import Body
from .jet import Jet, linear_jet
from .mixed_vol import mixed_volume, vk_matrix

__all__ = [
    "SingularMetric",
    "DegenerateTestFunction",
    "DegenerateTestBody",
    "OperatorAssembly",
    "SpectralResult",
    "trial_space",
    "assemble",
    "spectrum",
    "lambda1",
    "lambda1_even",
    "laplacian",
    "dirichlet_form",
    "dirichlet_energy",
    "variance",
    "rayleigh",
    "quotient_C",
    "minimize_quotient_C",
    "lin",
]


class SingularMetric(ArithmeticError):
    pass


class DegenerateTestFunction(ValueError):
    pass


class DegenerateTestBody(ValueError):
    pass


# ----------------------------------------------------------------------------
# pointwise calculus
# ----------------------------------------------------------------------------


def lin(K: Body, xi) -> Jet:
    """lin_{K,xi} = <theta, xi> / h_K; a batch if ``xi`` has shape (n, k)."""
    L = linear_jet(K.grid, xi)
    h = K.h_jet
    if L.value.ndim > 1:
        return L * h.reciprocal()
    return L / h


def _weighted(K: Body) -> np.ndarray:
    """Per-node matrix (h^2 / n) adj(D^2 h), the Dirichlet form density."""
    return (K.h**2 / K.dim)[:, None, None] * K.adj


def dirichlet_form(K: Body, z: Jet, w: Jet | None = None):
    """\\int g_K(grad z, grad w) dV_K; matrix-valued for batched jets."""
    Wm = _weighted(K)
    wts = K.grid.weights
    w = z if w is None else w
    gz = z.grad if z.grad.ndim == 3 else z.grad[:, None]
    gw = w.grad if w.grad.ndim == 3 else w.grad[:, None]
    Wg = np.einsum("kai,kij->kaj", gz, Wm * wts[:, None, None])
    B1, B2 = gz.shape[1], gw.shape[1]
    out = np.transpose(Wg, (1, 0, 2)).reshape(B1, -1) @ np.transpose(gw, (1, 0, 2)).reshape(B2, -1).T
    if z.grad.ndim == 2 and w.grad.ndim == 2:
        return float(out[0, 0])
    return out


def dirichlet_energy(K: Body, z: Jet) -> float:
    """\\int |grad z|^2_{g_K} dV_K."""
    return dirichlet_form(K, z)


def laplacian(K: Body, z: Jet) -> np.ndarray:
    """Pointwise Delta_K z = g^{ij}(z_ij + (log h)_i z_j + (log h)_j z_i)."""
    ginv = K.gK_inv
    dlog = K.dh / K.h[:, None]
    if z.value.ndim == 1:
        T = z.hess + 2.0 * dlog[:, :, None] * z.grad[:, None, :]
        return np.einsum("kij,kij->k", ginv, T)
    T = z.hess + 2.0 * dlog[:, None, :, None] * z.grad[:, :, None, :]
    return np.einsum("kij,kaij->ka", ginv, T)


def variance(K: Body, z) -> float:
    """Var_{V_K}(z) = \\int z^2 dV_K - (\\int z dV_K)^2 / V(K)."""
    v = z.value if isinstance(z, Jet) else np.asarray(z, dtype=float)
    rho = K.cone_density
    g = K.grid
    return float(g.integrate(v * v * rho) - g.integrate(v * rho) ** 2 / K.volume)


def rayleigh(K: Body, z: Jet) -> float:
    """Dirichlet energy over V_K-variance; bounded below by lambda_{1,e}."""
    var = variance(K, z)
    scale = float(K.grid.integrate(z.value**2 * K.cone_density))
    if var <= 1e-12 * max(scale, 1e-300):
        raise DegenerateTestFunction("test function is constant V_K-almost everywhere")
    return dirichlet_energy(K, z) / var


# ----------------------------------------------------------------------------
# Galerkin assembly
# ----------------------------------------------------------------------------


def trial_space(K: Body, parity: str, max_degree: int | None = None) -> Jet:
    """K-adapted trial functions as a batched jet."""
    if K.disc.symmetry is not None:
        raise ValueError("spectral analysis needs a discretization without symmetry reduction")
    L = K.max_degree if max_degree is None else int(max_degree)
    if parity == "even":
        if L < K.max_degree:
            raise ValueError("even trial degree must be at least the body degree")
        b = K.disc.basis(L, "even")
        s_proj = K.disc.basis(parity="even").synthesize(K.coeffs[_even_idx(K)])
        if np.any(s_proj.value <= 0):
            raise SingularMetric("projected h^2 is not positive")
        return b.jet() * s_proj.reciprocal()
    if parity == "odd":
        b = K.disc.basis(L, "odd") if L % 2 else K.disc.basis(max(L - 1, 1), "odd")
        return b.jet() * K.h_jet.reciprocal()
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


def _even_idx(K: Body) -> np.ndarray:
    from .sphere import harmonic_index

    return np.array([l % 2 == 0 for l, _ in harmonic_index(K.dim, K.max_degree)])


@dataclass(frozen=True, eq=False)
class OperatorAssembly:
    """Stiffness, mass and mean vector of Delta_K in a trial space."""

    stiffness: np.ndarray
    mass: np.ndarray
    mean: np.ndarray
    parity: str
    volume: float
    trial: Jet = field(repr=False)

    @property
    def size(self) -> int:
        return self.mass.shape[0]

    def constant_coefficients(self) -> np.ndarray:
        """Coefficients of the constant function 1 (least squares in M)."""
        return np.linalg.solve(self.mass, self.mean)


def assemble(K: Body, parity: str = "even", max_degree: int | None = None) -> OperatorAssembly:
    """Assemble A_ab = \\int g^{ij} psi_a,i psi_b,j dV_K and M_ab = \\int psi_a psi_b dV_K."""
    if not np.all(np.isfinite(K.det)) or np.any(K.det <= 0):
        raise SingularMetric("det D^2 h is not positive; g_K cannot be inverted")
    psi = trial_space(K, parity, max_degree)
    A = dirichlet_form(K, psi)
    w = K.grid.weights * K.cone_density
    M = (psi.value * w[:, None]).T @ psi.value
    m = psi.value.T @ w
    A = 0.5 * (A + A.T)
    M = 0.5 * (M + M.T)
    return OperatorAssembly(A, M, m, parity, K.volume, psi)


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Eigenpairs of -Delta_K on a symmetry subspace."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    subspace: str
    multiplicity: int = 1

    def to_json(self) -> str:
        return json.dumps(
            {
                "eigenvalues": [float(x) for x in self.eigenvalues],
                "residuals": [float(x) for x in self.residuals],
                "subspace": self.subspace,
                "multiplicity": int(self.multiplicity),
            },
            sort_keys=True,
        )


def _residuals(A, M, lam, V):
    R = A @ V - (M @ V) * lam
    return np.linalg.norm(R, axis=0) / np.linalg.norm(M @ V, axis=0)


def _solve(A, M):
    lam, V = scipy.linalg.eigh(A, M)
    return lam, V


def spectrum(K: Body, subspace: str = "even", count: int | None = None, max_degree: int | None = None) -> SpectralResult:
    """Galerkin eigenvalues of -Delta_K on ``"even"``, ``"odd"`` or ``"all"`` functions."""
    if subspace == "all":
        e = spectrum(K, "even", None, max_degree)
        o = spectrum(K, "odd", None, max_degree)
        lam = np.concatenate([e.eigenvalues, o.eigenvalues])
        order = np.argsort(lam, kind="stable")
        res = np.concatenate([e.residuals, o.residuals])[order]
        pad = max(e.eigenvectors.shape[0], o.eigenvectors.shape[0])
        vecs = np.zeros((pad, lam.size))
        vecs[: e.eigenvectors.shape[0], : e.eigenvalues.size] = e.eigenvectors
        vecs[: o.eigenvectors.shape[0], e.eigenvalues.size :] = o.eigenvectors
        out = SpectralResult(lam[order], vecs[:, order], res, "all")
    else:
        asm = assemble(K, subspace, max_degree)
        lam, V = _solve(asm.stiffness, asm.mass)
        out = SpectralResult(lam, V, _residuals(asm.stiffness, asm.mass, lam, V), subspace)
    if count is not None:
        out = SpectralResult(out.eigenvalues[:count], out.eigenvectors[:, :count], out.residuals[:count], out.subspace)
    return out


def _cluster(values: np.ndarray, rtol: float) -> int:
    first = values[0]
    return int(np.sum(np.abs(values - first) <= rtol * abs(first)))


def lambda1(K: Body, rtol: float = 1e-6, max_degree: int | None = None):
    """Smallest nonzero eigenvalue on the full space and its multiplicity.

    Returns ``(value, multiplicity, result)``; ``result.eigenvectors`` holds
    the eigenvectors of the cluster (odd trial coefficients when the cluster
    is odd, as it is for every body by Hilbert's spectral identity).
    """
    e = spectrum(K, "even", None, max_degree)
    o = spectrum(K, "odd", None, max_degree)
    # the constant is the unique null vector of the even block
    lam_e = e.eigenvalues[1:]
    lam = np.concatenate([lam_e, o.eigenvalues])
    tags = np.concatenate([np.zeros(lam_e.size, int), np.ones(o.eigenvalues.size, int)])
    idx = np.concatenate([np.arange(1, e.eigenvalues.size), np.arange(o.eigenvalues.size)])
    order = np.argsort(lam, kind="stable")
    lam, tags, idx = lam[order], tags[order], idx[order]
    mult = _cluster(lam, rtol)
    sel = slice(0, mult)
    vecs, res = [], []
    for t, i in zip(tags[sel], idx[sel]):
        src = o if t else e
        vecs.append(src.eigenvectors[:, i])
        res.append(src.residuals[i])
    sub = "odd" if np.all(tags[sel] == 1) else ("even" if np.all(tags[sel] == 0) else "all")
    width = max(v.size for v in vecs)
    V = np.zeros((width, mult))
    for j, v in enumerate(vecs):
        V[: v.size, j] = v
    result = SpectralResult(lam[sel], V, np.array(res), sub, mult)
    return float(lam[0]), mult, result


def lambda1_even(K: Body, max_degree: int | None = None, count: int = 1):
    """lambda_{1,e}: smallest eigenvalue on even, V_K-mean-zero functions.

    The constant mode is deflated by the rank-one shift
    A + sigma m m^t / V, which moves it to sigma while leaving every
    mean-zero eigenpair unchanged.

    Returns ``(value, coefficients, assembly)``; the eigenfunction is
    ``assembly.trial @ coefficients``.
    """
    asm = assemble(K, "even", max_degree)
    A, M, m = asm.stiffness, asm.mass, asm.mean
    lam_max = np.linalg.norm(A, 2) / max(np.linalg.eigvalsh(M).min(), 1e-300)
    sigma = 10.0 * lam_max + 1.0
    shifted = A + sigma * np.outer(m, m) / asm.volume
    lam, V = scipy.linalg.eigh(shifted, M, subset_by_index=[0, count - 1])
    if count == 1:
        return float(lam[0]), V[:, 0], asm
    return lam, V, asm


# ----------------------------------------------------------------------------
# the mixed-volume quotient
# ----------------------------------------------------------------------------


def _support_ratio(K: Body, L: Body) -> Jet:
    return L.h_jet / K.h_jet


def quotient_C(K: Body, L: Body) -> float:
    """The quotient whose infimum over L defines lambda^C_{1,e}(K).

    (n-1) [\\int r^2 dV_K - V(L[2],K[n-2])] / [\\int r^2 dV_K - V(L[1],K[n-1])^2 / V(K)]
    with r = h_L / h_K.
    """
    if K.grid is not L.grid:
        raise ValueError("bodies must share a discretization")
    n = K.dim
    r = _support_ratio(K, L)
    rho = K.cone_density
    g = K.grid
    r2 = float(g.integrate(r.value**2 * rho))
    v1 = mixed_volume([L] + [K] * (n - 1), g)
    v2 = mixed_volume([L, L] + [K] * (n - 2), g)
    num = r2 - v2
    den = r2 - v1 * v1 / K.volume
    scale = max(r2, 1e-300)
    if den <= 1e-12 * scale:
        raise DegenerateTestBody("h_L / h_K is constant V_K-almost everywhere")
    if num < -1e-9 * scale:
        raise ArithmeticError(f"numerator {num:.3e} negative (Minkowski inequality violated)")
    return (n - 1) * num / den


def minimize_quotient_C(K: Body, max_degree: int | None = None):
    """Minimize the quotient over bodies with h_L = h_K (1 + z), z even.

    Expanding the quotient in z leaves the ratio of the quadratic forms
    (n-1)(\\int z^2 dV_K - V_K(z, z)) and Var_{V_K}(z); this is a generalized
    eigenproblem in the even trial space.  The value is an upper bound for
    the infimum over all of K_e.

    Returns ``(value, coefficients, trial)``.
    """
    n = K.dim
    psi = trial_space(K, "even", max_degree)
    w = K.grid.weights * K.cone_density
    M = (psi.value * w[:, None]).T @ psi.value
    m = psi.value.T @ w
    Vk = vk_matrix(K, psi)
    N = (n - 1) * (M - Vk)
    N = 0.5 * (N + N.T)
    Var = M - np.outer(m, m) / K.volume
    # restrict to V_K-mean-zero functions to make the pencil definite
    Q = scipy.linalg.null_space(m[None, :])
    Nr, Dr = Q.T @ N @ Q, Q.T @ Var @ Q
    lam, V = scipy.linalg.eigh(0.5 * (Nr + Nr.T), 0.5 * (Dr + Dr.T), subset_by_index=[0, 0])
    return float(lam[0]), Q @ V[:, 0], psi
