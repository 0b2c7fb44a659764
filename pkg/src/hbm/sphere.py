"""Quadrature grids and real harmonic bases on S^1 and S^2.

Derivatives of basis functions are evaluated analytically: Fourier modes on
the circle, and normalized associated Legendre recurrences (value, first and
second colatitude derivative) on the 2-sphere.  Covariant derivatives are
expressed in a per-node orthonormal tangent frame.  On S^2 the frame is the
coordinate frame (d/dtheta, d/dphi / sin theta); Gauss-Legendre colatitudes
never land on the poles, so the frame is regular at every node.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .jet import Jet

__all__ = [
    "SphereGrid",
    "HarmonicBasis",
    "build_grid",
    "build_basis",
    "integrate",
    "harmonic_index",
    "harmonics_at",
    "harmonic_jets_at",
    "sphere_area",
]


def sphere_area(dim: int) -> float:
    """Surface measure of S^{dim-1}."""
    if dim == 2:
        return 2.0 * np.pi
    if dim == 3:
        return 4.0 * np.pi
    raise ValueError(f"dim must be 2 or 3, got {dim}")


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Quadrature rule on S^{n-1} with a tangent frame at every node.

    Attributes
    ----------
    dim : int
        Ambient dimension n (2 or 3).
    nodes : ndarray, shape (N, n)
        Unit vectors.
    weights : ndarray, shape (N,)
        Positive weights summing to the area of the sphere.
    frame : ndarray, shape (N, n-1, n)
        Orthonormal tangent vectors e_1..e_{n-1} per node.
    shape : tuple
        ``(N,)`` on the circle, ``(n_lat, n_lon)`` on S^2 (latitude-major).
    """

    dim: int
    nodes: np.ndarray
    weights: np.ndarray
    frame: np.ndarray
    shape: tuple
    colatitude: np.ndarray | None = None
    longitude: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    @property
    def area(self) -> float:
        return sphere_area(self.dim)

    @property
    def resolution(self) -> int:
        return self.shape[0]

    @cached_property
    def exact_degree(self) -> int:
        """Largest total degree of a spherical polynomial integrated exactly."""
        if self.dim == 2:
            return self.shape[0] - 1
        n_lat, n_lon = self.shape
        return min(2 * n_lat - 1, n_lon - 1)

    @cached_property
    def antipode(self) -> np.ndarray:
        """Index of the node -theta for each node theta."""
        if self.dim == 2:
            n = self.shape[0]
            return (np.arange(n) + n // 2) % n
        n_lat, n_lon = self.shape
        i, j = np.divmod(np.arange(self.size), n_lon)
        return (n_lat - 1 - i) * n_lon + (j + n_lon // 2) % n_lon

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Quadrature of per-node values (leading axis is the node axis)."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def build_grid(dim: int, resolution: int, n_lon: int | None = None) -> SphereGrid:
    """Build the quadrature grid.

    n=2 uses ``resolution`` equispaced angles (trapezoid rule); n=3 uses
    ``resolution`` Gauss-Legendre colatitudes times ``n_lon`` (default
    ``2*resolution``) uniform longitudes.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    resolution = int(resolution)
    if resolution < 4:
        raise ValueError(f"resolution must be >= 4, got {resolution}")
    if dim == 2:
        if resolution % 2:
            raise ValueError("circle resolution must be even (antipodal symmetry)")
        alpha = 2.0 * np.pi * np.arange(resolution) / resolution
        nodes = np.stack([np.cos(alpha), np.sin(alpha)], axis=1)
        frame = np.stack([-np.sin(alpha), np.cos(alpha)], axis=1)[:, None, :]
        weights = np.full(resolution, 2.0 * np.pi / resolution)
        return SphereGrid(2, nodes, weights, frame, (resolution,), longitude=alpha)

    n_lon = 2 * resolution if n_lon is None else int(n_lon)
    if n_lon < 4 or n_lon % 2:
        raise ValueError(f"n_lon must be even and >= 4, got {n_lon}")
    x, wx = np.polynomial.legendre.leggauss(resolution)
    # colatitude ascending from the north pole
    x, wx = x[::-1], wx[::-1]
    theta = np.arccos(x)
    phi = 2.0 * np.pi * np.arange(n_lon) / n_lon
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    nodes = np.stack([st * cp, st * sp, ct], axis=1)
    e_theta = np.stack([ct * cp, ct * sp, -st], axis=1)
    e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
    frame = np.stack([e_theta, e_phi], axis=1)
    weights = np.repeat(wx, n_lon) * (2.0 * np.pi / n_lon)
    return SphereGrid(3, nodes, weights, frame, (resolution, n_lon), colatitude=th, longitude=ph)


def integrate(values, grid: SphereGrid):
    """Sum of ``values * weights`` over the nodes."""
    values = np.asarray(values, dtype=float)
    return grid.integrate(values)


def harmonic_index(dim: int, max_degree: int) -> list[tuple[int, int]]:
    """(degree, order) labels in storage order: degree ascending, order ascending.

    On the circle the orders of degree l >= 1 are -l (sine) and +l (cosine).
    """
    out = [(0, 0)]
    for l in range(1, max_degree + 1):
        if dim == 2:
            out += [(l, -l), (l, l)]
        else:
            out += [(l, m) for m in range(-l, l + 1)]
    return out


def _legendre(theta: np.ndarray, lmax: int, derivatives: bool = True):
    """Normalized associated Legendre functions in the colatitude.

    Returns arrays ``p, dp, d2p`` of shape (lmax+1, lmax+1, P) indexed [l, m],
    normalized so that ``p[l,m] * sqrt(2) * cos(m phi)`` is L2-orthonormal on S^2
    (no Condon-Shortley phase).
    """
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    p = np.zeros((lmax + 1, lmax + 1) + theta.shape)
    p[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, lmax + 1):
        p[m, m] = np.sqrt((2 * m + 1) / (2.0 * m)) * s * p[m - 1, m - 1]
    for m in range(0, lmax):
        p[m + 1, m] = np.sqrt(2 * m + 3.0) * c * p[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = np.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            p[l, m] = a * (c * p[l - 1, m] - b * p[l - 2, m])
    if not derivatives:
        return p, None, None
    dp = np.zeros_like(p)
    for l in range(1, lmax + 1):
        for m in range(0, l + 1):
            k = np.sqrt((2.0 * l + 1) * (l * l - m * m) / (2.0 * l - 1))
            prev = p[l - 1, m] if m <= l - 1 else 0.0
            dp[l, m] = (l * c * p[l, m] - k * prev) / s
    ll = np.arange(lmax + 1)[:, None, None]
    mm = np.arange(lmax + 1)[None, :, None]
    d2p = -(c / s) * dp - (ll * (ll + 1) - mm**2 / s**2) * p
    return p, dp, d2p


def _harmonics_s2(theta, phi, lmax, derivatives=True, keep=None):
    p, dp, d2p = _legendre(theta, lmax, derivatives)
    s, c = np.sin(theta), np.cos(theta)
    labels = harmonic_index(3, lmax)
    if keep is not None:
        labels = [lab for lab, k in zip(labels, keep) if k]
    P = theta.shape[0]
    B = len(labels)
    val = np.empty((P, B))
    grad = np.empty((P, B, 2)) if derivatives else None
    hess = np.empty((P, B, 2, 2)) if derivatives else None
    for a, (l, m) in enumerate(labels):
        k = abs(m)
        if m == 0:
            t, dt, d2t = np.ones_like(phi), np.zeros_like(phi), np.zeros_like(phi)
        elif m > 0:
            r2 = np.sqrt(2.0)
            t, dt, d2t = r2 * np.cos(k * phi), -r2 * k * np.sin(k * phi), -r2 * k * k * np.cos(k * phi)
        else:
            r2 = np.sqrt(2.0)
            t, dt, d2t = r2 * np.sin(k * phi), r2 * k * np.cos(k * phi), -r2 * k * k * np.sin(k * phi)
        f = p[l, k]
        val[:, a] = f * t
        if derivatives:
            df, d2f = dp[l, k], d2p[l, k]
            grad[:, a, 0] = df * t
            grad[:, a, 1] = f * dt / s
            hess[:, a, 0, 0] = d2f * t
            h12 = df * dt / s - c * f * dt / s**2
            hess[:, a, 0, 1] = h12
            hess[:, a, 1, 0] = h12
            hess[:, a, 1, 1] = f * d2t / s**2 + (c / s) * df * t
    return val, grad, hess


def _harmonics_s1(alpha, lmax, derivatives=True, keep=None):
    labels = harmonic_index(2, lmax)
    if keep is not None:
        labels = [lab for lab, k in zip(labels, keep) if k]
    P = alpha.shape[0]
    B = len(labels)
    val = np.empty((P, B))
    grad = np.empty((P, B, 1))
    hess = np.empty((P, B, 1, 1))
    norm = 1.0 / np.sqrt(np.pi)
    for a, (l, m) in enumerate(labels):
        if l == 0:
            val[:, a] = 1.0 / np.sqrt(2.0 * np.pi)
            grad[:, a, 0] = 0.0
            hess[:, a, 0, 0] = 0.0
        elif m > 0:
            val[:, a] = norm * np.cos(l * alpha)
            grad[:, a, 0] = -norm * l * np.sin(l * alpha)
            hess[:, a, 0, 0] = -norm * l * l * np.cos(l * alpha)
        else:
            val[:, a] = norm * np.sin(l * alpha)
            grad[:, a, 0] = norm * l * np.cos(l * alpha)
            hess[:, a, 0, 0] = -norm * l * l * np.sin(l * alpha)
    if not derivatives:
        return val, None, None
    return val, grad, hess


def harmonics_at(points: np.ndarray, max_degree: int, parity: str | None = None,
                 symmetry: str | None = None) -> np.ndarray:
    """Values of the real harmonic basis at arbitrary unit vectors, shape (P, B)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dim = points.shape[1]
    if dim not in (2, 3):
        raise ValueError(f"points must be 2D or 3D, got dimension {dim}")
    keep = _label_mask(harmonic_index(dim, max_degree), parity, symmetry)
    if dim == 2:
        alpha = np.arctan2(points[:, 1], points[:, 0])
        val, _, _ = _harmonics_s1(alpha, max_degree, derivatives=False, keep=keep)
    else:
        theta = np.arccos(np.clip(points[:, 2], -1.0, 1.0))
        phi = np.arctan2(points[:, 1], points[:, 0])
        val, _, _ = _harmonics_s2(theta, phi, max_degree, derivatives=False, keep=keep)
    return val


def harmonic_jets_at(points: np.ndarray, max_degree: int, parity: str | None = None,
                     symmetry: str | None = None):
    """Basis values and covariant derivatives at arbitrary unit vectors.

    Returns ``(values, grad, hess, frame)`` where derivatives are taken in
    the coordinate frame returned alongside (e_theta, e_phi on S^2).  The
    frame degenerates at the poles; callers must keep points away from them.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dim = points.shape[1]
    if dim not in (2, 3):
        raise ValueError(f"points must be 2D or 3D, got dimension {dim}")
    keep = _label_mask(harmonic_index(dim, max_degree), parity, symmetry)
    if dim == 2:
        alpha = np.arctan2(points[:, 1], points[:, 0])
        val, grad, hess = _harmonics_s1(alpha, max_degree, keep=keep)
        frame = np.stack([-np.sin(alpha), np.cos(alpha)], axis=1)[:, None, :]
    else:
        theta = np.arccos(np.clip(points[:, 2], -1.0, 1.0))
        phi = np.arctan2(points[:, 1], points[:, 0])
        val, grad, hess = _harmonics_s2(theta, phi, max_degree, keep=keep)
        st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
        e_theta = np.stack([ct * cp, ct * sp, -st], axis=1)
        e_phi = np.stack([-sp, cp, np.zeros_like(sp)], axis=1)
        frame = np.stack([e_theta, e_phi], axis=1)
    return val, grad, hess, frame


def _parity_mask(labels, parity):
    deg = np.array([l for l, _ in labels])
    if parity is None:
        return np.ones(deg.shape, dtype=bool)
    if parity == "even":
        return deg % 2 == 0
    if parity == "odd":
        return deg % 2 == 1
    raise ValueError(f"parity must be None, 'even' or 'odd', got {parity!r}")


SYMMETRIES = (None, "reflections")


def _symmetry_mask(labels, symmetry):
    """Labels of harmonics invariant under the given group.

    "reflections" is the group of coordinate sign changes.  In the standard
    frame (pole on e_n, longitude measured from e_1) every real harmonic is
    an eigenfunction of each coordinate reflection, so the invariant
    subspace is spanned by basis functions: even degree and cos(m phi) with
    m even.
    """
    if symmetry is None:
        return np.ones(len(labels), dtype=bool)
    if symmetry == "reflections":
        return np.array([l % 2 == 0 and m >= 0 and m % 2 == 0 for l, m in labels], dtype=bool)
    raise ValueError(f"symmetry must be one of {SYMMETRIES}, got {symmetry!r}")


def _label_mask(labels, parity, symmetry=None):
    return _parity_mask(labels, parity) & _symmetry_mask(labels, symmetry)


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    """Real harmonic basis evaluated on a grid, with covariant derivatives.

    ``values[k, a]`` is the a-th basis function at node k, ``grad[k, a, i]``
    its derivative along frame vector e_i, and ``hess[k, a, i, j]`` the
    covariant Hessian (phi_a)_{ij}.
    """

    grid: SphereGrid
    max_degree: int
    degrees: np.ndarray
    orders: np.ndarray
    values: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def size(self) -> int:
        return self.degrees.shape[0]

    @property
    def parity(self) -> np.ndarray:
        """+1 for even functions, -1 for odd ones."""
        return np.where(self.degrees % 2 == 0, 1, -1)

    @property
    def labels(self) -> list[tuple[int, int]]:
        return list(zip(self.degrees.tolist(), self.orders.tolist()))

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Round-sphere Laplacian eigenvalue l(l+n-2) of every basis function."""
        return self.degrees * (self.degrees + self.dim - 2.0)

    def jet(self) -> Jet:
        """The basis as a batched jet with batch axis 1."""
        return Jet(self.values, self.grad, self.hess)

    @cached_property
    def grad_rows(self) -> np.ndarray:
        """Gradients flattened to shape (B, N * d) for matrix products."""
        return np.ascontiguousarray(np.moveaxis(self.grad, 1, 0).reshape(self.size, -1))

    @cached_property
    def hess_rows(self) -> np.ndarray:
        """Hessians flattened to shape (B, N * d * d)."""
        return np.ascontiguousarray(np.moveaxis(self.hess, 1, 0).reshape(self.size, -1))

    def synthesize(self, coeffs: np.ndarray) -> Jet:
        """Jet of the field sum_a coeffs[a] * phi_a."""
        coeffs = np.asarray(coeffs, dtype=float)
        return Jet(
            self.values @ coeffs,
            (coeffs @ self.grad_rows).reshape(self.grad.shape[0], -1),
            (coeffs @ self.hess_rows).reshape(self.hess.shape[0], *self.hess.shape[2:]),
        )

    def contract(self, value_w: np.ndarray, grad_w: np.ndarray, hess_w: np.ndarray) -> np.ndarray:
        """sum_k [value_w phi_a + grad_w . grad phi_a + hess_w : Hess phi_a] for every a."""
        return self.values.T @ value_w + self.grad_rows @ grad_w.ravel() + self.hess_rows @ hess_w.ravel()

    def project(self, values: np.ndarray) -> np.ndarray:
        """L2 projection coefficients of per-node values onto the basis."""
        return self.grid.integrate(np.asarray(values, dtype=float)[:, None] * self.values)

    def subset(self, parity: str | None, symmetry: str | None = None) -> "HarmonicBasis":
        keep = _label_mask(self.labels, parity, symmetry)
        return HarmonicBasis(
            self.grid,
            self.max_degree,
            self.degrees[keep],
            self.orders[keep],
            self.values[:, keep],
            self.grad[:, keep],
            self.hess[:, keep],
        )


def build_basis(grid: SphereGrid, max_degree: int, parity: str | None = None,
                symmetry: str | None = None) -> HarmonicBasis:
    """Evaluate the real harmonic basis of degree <= ``max_degree`` on ``grid``.

    The basis has 2L+1 functions on S^1 and (L+1)^2 on S^2 (fewer when
    restricted to one parity or to functions invariant under a symmetry
    group; only the kept functions are evaluated).  Quadrature must
    integrate degree-2L products exactly.
    """
    max_degree = int(max_degree)
    if max_degree < 2:
        raise ValueError(f"max_degree must be >= 2, got {max_degree}")
    if 2 * max_degree > grid.exact_degree:
        raise ValueError(
            f"degree {max_degree} exceeds grid exactness (products up to degree {grid.exact_degree})"
        )
    labels = harmonic_index(grid.dim, max_degree)
    keep = _label_mask(labels, parity, symmetry)
    if grid.dim == 2:
        val, grad, hess = _harmonics_s1(grid.longitude, max_degree, keep=keep)
    else:
        val, grad, hess = _harmonics_s2(grid.colatitude, grid.longitude, max_degree, keep=keep)
    deg = np.array([l for l, _ in labels])[keep]
    order = np.array([m for _, m in labels])[keep]
    return HarmonicBasis(grid, max_degree, deg, order, val, grad, hess)
