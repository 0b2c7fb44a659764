"""Origin-symmetric convex bodies represented through their support functions.

A body is stored through the even field s = h_K^2 on the sphere, expanded in
real even harmonics.  Working with h^2 rather than h keeps ellipsoids exact
at degree two and makes linear images of ellipsoids exact as well.  Every
derived quantity (D^2 h, g_K, the measures S_K, S_pK, V_K) is a lazily
computed node field built from the analytic jet of s.

Three flavours share one interface:

``CoefficientBody``
    s given by harmonic coefficients; the primary representation.
``LinearImage``
    T(K) for a base body K, evaluated exactly through the 2-homogeneous
    extension of s (no truncation); coefficients are produced on demand.
``FieldBody``
    a body whose support function jet is supplied directly, used for test
    bodies such as h_K (1 + z) or the shifted supports h + R lin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .jet import Jet, linear_jet
from .sphere import (
    HarmonicBasis,
    SphereGrid,
    build_basis,
    build_grid,
    _label_mask,
    harmonic_index,
    harmonic_jets_at,
    harmonics_at,
)

__all__ = [
    "Discretization",
    "Body",
    "CoefficientBody",
    "LinearImage",
    "FieldBody",
    "MeasureField",
    "ConvexityFailure",
    "InradiusViolation",
    "default_discretization",
    "make_standard",
    "volume",
    "polar_volume",
    "geometric_distance",
    "apply_linear",
    "measures",
    "shifted_support",
    "perturbed",
    "ball_volume",
    "random_ellipsoid_matrix",
    "body_from_json",
]

CURVATURE_FLOOR = 1e-8
WEAK_FLOOR = -1e-9

DEFAULTS = {2: dict(resolution=256, degree=64), 3: dict(resolution=64, degree=16)}


class ConvexityFailure(ValueError):
    """The support function violates the curvature floor somewhere."""


class InradiusViolation(ValueError):
    """The body does not contain the ball of radius 1/R."""


def ball_volume(dim: int) -> float:
    return np.pi if dim == 2 else 4.0 * np.pi / 3.0


class Discretization:
    """A quadrature grid together with cached harmonic bases.

    Parameters
    ----------
    dim : int
        2 or 3.
    resolution : int, optional
        Circle points (n=2) or Gauss-Legendre colatitudes (n=3).
    degree : int, optional
        Maximal harmonic degree used for bodies.
    n_lon : int, optional
        Longitudes on S^2 (default ``2 * resolution``).
    symmetry : {None, "reflections"}, optional
        Restrict bodies to those invariant under every coordinate
        reflection.  Only the invariant harmonics are evaluated, which makes
        high degrees affordable; constructors project onto the invariant
        subspace (for s = h^2 this is the group average, which preserves
        convexity).  Spectral analysis needs the unrestricted basis.
    """

    def __init__(self, dim: int, resolution: int | None = None, degree: int | None = None, n_lon: int | None = None,
                 symmetry: str | None = None):
        if dim not in DEFAULTS:
            raise ValueError(f"dim must be 2 or 3, got {dim}")
        self.dim = int(dim)
        self.resolution = int(resolution or DEFAULTS[dim]["resolution"])
        self.grid: SphereGrid = build_grid(dim, self.resolution, n_lon)
        self.degree = int(degree or min(DEFAULTS[dim]["degree"], self.grid.exact_degree // 2))
        self.degree -= self.degree % 2
        if 2 * self.degree > self.grid.exact_degree:
            raise ValueError(f"degree {self.degree} too high for resolution {self.resolution}")
        self._bases: dict = {}
        _label_mask([], None, symmetry)  # validates the name
        self.symmetry = symmetry

    def basis(self, max_degree: int | None = None, parity: str | None = "even") -> HarmonicBasis:
        L = self.degree if max_degree is None else int(max_degree)
        key = (L, parity)
        if key not in self._bases:
            if (L, None) in self._bases:
                self._bases[key] = self._bases[(L, None)].subset(parity, self.symmetry)
            else:
                self._bases[key] = build_basis(self.grid, L, parity, self.symmetry)
        return self._bases[key]

    def coefficient_mask(self, max_degree: int | None = None) -> np.ndarray:
        """Entries of the full coefficient vector carried by ``basis(parity="even")``."""
        L = self.degree if max_degree is None else int(max_degree)
        return _label_mask(harmonic_index(self.dim, L), "even", self.symmetry)

    @property
    def n_lon(self) -> int | None:
        return self.grid.shape[1] if self.dim == 3 else None

    def describe(self) -> dict:
        out = {"dim": self.dim, "resolution": self.resolution, "degree": self.degree}
        if self.dim == 3:
            out["n_lon"] = self.n_lon
        if self.symmetry is not None:
            out["symmetry"] = self.symmetry
        return out

    def __repr__(self) -> str:
        return f"Discretization(dim={self.dim}, resolution={self.resolution}, degree={self.degree})"


@lru_cache(maxsize=8)
def default_discretization(dim: int, resolution: int | None = None, degree: int | None = None) -> Discretization:
    """Shared discretization instance for the given parameters."""
    return Discretization(dim, resolution, degree)


# ----------------------------------------------------------------------------
# bodies
# ----------------------------------------------------------------------------


def _ambient_from_sphere(s: np.ndarray, grad: np.ndarray, hess: np.ndarray, frame: np.ndarray, omega: np.ndarray):
    """Ambient gradient and Hessian of the 2-homogeneous extension at unit omega."""
    d = frame.shape[1]
    G = np.einsum("ki,kin->kn", grad, frame) + 2.0 * s[:, None] * omega
    tang = hess + 2.0 * s[:, None, None] * np.eye(d)
    H = np.einsum("kin,kij,kjm->knm", frame, tang, frame)
    cross = np.einsum("kin,ki->kn", frame, grad)[:, :, None] * omega[:, None, :]
    H += cross + np.swapaxes(cross, 1, 2)
    H += 2.0 * s[:, None, None] * omega[:, :, None] * omega[:, None, :]
    return G, H


class Body:
    """Common interface of support-function bodies.

    Subclasses provide :meth:`_s_jet` (or override :attr:`h_jet`).  All node
    fields are cached; bodies are immutable after construction.
    """

    kind = "body"

    def __init__(self, disc: Discretization, meta: dict | None = None, floor: str = "strict", check: bool = True):
        self.disc = disc
        self.meta = dict(meta or {})
        self.floor = floor
        if check:
            self.validate()

    # -- basic shape -----------------------------------------------------
    @property
    def dim(self) -> int:
        return self.disc.dim

    @property
    def grid(self) -> SphereGrid:
        return self.disc.grid

    @property
    def max_degree(self) -> int:
        return self.disc.degree

    def _s_jet(self) -> Jet:
        raise NotImplementedError

    @cached_property
    def s_jet(self) -> Jet:
        return self._s_jet()

    @cached_property
    def h_jet(self) -> Jet:
        s = self.s_jet
        if np.any(s.value <= 0):
            raise ConvexityFailure("support function is not positive (origin not interior)")
        return s.sqrt()

    # -- node fields -----------------------------------------------------
    @property
    def h(self) -> np.ndarray:
        return self.h_jet.value

    @property
    def dh(self) -> np.ndarray:
        return self.h_jet.grad

    @cached_property
    def D2h(self) -> np.ndarray:
        return self.h_jet.D2

    @cached_property
    def det(self) -> np.ndarray:
        """det D^2 h, the density of S_K."""
        return np.linalg.det(self.D2h) if self.dim == 3 else self.D2h[:, 0, 0]

    @cached_property
    def adj(self) -> np.ndarray:
        """Adjugate of D^2 h (so that adj = det * inverse)."""
        A = self.D2h
        if self.dim == 2:
            return np.ones_like(A)
        out = np.empty_like(A)
        out[:, 0, 0] = A[:, 1, 1]
        out[:, 1, 1] = A[:, 0, 0]
        out[:, 0, 1] = -A[:, 0, 1]
        out[:, 1, 0] = -A[:, 1, 0]
        return out

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        """Principal radii of curvature at each node (eigenvalues of D^2 h)."""
        return np.linalg.eigvalsh(self.D2h)

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues.min())

    @property
    def gK(self) -> np.ndarray:
        return self.D2h / self.h[:, None, None]

    @property
    def gK_inv(self) -> np.ndarray:
        return self.h[:, None, None] * self.adj / self.det[:, None, None]

    @cached_property
    def volume(self) -> float:
        return float(self.grid.integrate(self.h * self.det) / self.dim)

    @property
    def cone_density(self) -> np.ndarray:
        """Density of V_K with respect to the spherical measure."""
        return self.h * self.det / self.dim

    def validate(self) -> None:
        """Check positivity and the curvature floor; raise ConvexityFailure."""
        h = self.h
        if not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise ConvexityFailure("support function is not positive (origin not interior)")
        ev = self.eigenvalues
        scale = float(np.mean(ev))
        if self.floor == "weak":
            bound = WEAK_FLOOR * max(scale, 1.0)
        else:
            bound = CURVATURE_FLOOR * scale
        if scale <= 0 or ev.min() < bound:
            raise ConvexityFailure(
                f"min eigenvalue of D^2 h is {ev.min():.3e}, below the floor {bound:.3e}"
            )

    # -- transformations -------------------------------------------------
    def scaled(self, c: float) -> "Body":
        raise NotImplementedError

    def normalized(self, target: float = 1.0) -> "Body":
        """Homothetic copy with the given volume."""
        return self.scaled((target / self.volume) ** (1.0 / self.dim))

    def ambient(self, x: np.ndarray):
        """Value, gradient, Hessian of the 2-homogeneous extension of s at x."""
        raise NotImplementedError(f"{type(self).__name__} has no ambient extension")

    @cached_property
    def coeffs(self) -> np.ndarray:
        """Full harmonic coefficient vector of s (odd entries are zero)."""
        basis = self.disc.basis(parity="even")
        even = basis.project(self.s_jet.value)
        return _embed_even(self.disc, even)

    def to_json(self) -> str:
        meta = dict(self.meta)
        meta.update({"field": "h^2", "ordering": "degree ascending, order ascending", **self.disc.describe()})
        meta.setdefault("kind", self.kind)
        obj = {
            "dim": self.dim,
            "max_degree": self.max_degree,
            "coeffs": [float(c) for c in self.coeffs],
            "meta": meta,
        }
        return json.dumps(obj, sort_keys=True)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, kind={self.meta.get('kind', self.kind)!r})"


def _embed_even(disc: Discretization, even: np.ndarray) -> np.ndarray:
    mask = disc.coefficient_mask()
    full = np.zeros(mask.shape[0])
    full[mask] = even
    return full


class CoefficientBody(Body):
    """Body with s = h^2 given by harmonic coefficients."""

    kind = "coefficients"

    def __init__(self, disc: Discretization, coeffs: np.ndarray, meta: dict | None = None, floor="strict", check=True):
        coeffs = np.asarray(coeffs, dtype=float)
        mask = disc.coefficient_mask()
        n_full = mask.shape[0]
        if coeffs.shape == (n_full,):
            deg = np.array([l for l, _ in harmonic_index(disc.dim, disc.degree)])
            if np.any(coeffs[deg % 2 == 1] != 0):
                raise ValueError("odd harmonic coefficients must vanish for a symmetric body")
            if np.abs(coeffs[~mask]).max(initial=0.0) > 1e-12 * np.linalg.norm(coeffs):
                raise ValueError(f"body is not invariant under the discretization symmetry {disc.symmetry!r}")
            full = np.where(mask, coeffs, 0.0)
        elif coeffs.shape == (int(mask.sum()),):
            full = _embed_even(disc, coeffs)
        else:
            raise ValueError(f"expected {n_full} or {int(mask.sum())} coefficients, got {coeffs.shape}")
        full.setflags(write=False)
        self.__dict__["coeffs"] = full
        self.even_coeffs = full[mask]
        super().__init__(disc, meta, floor, check)

    def _s_jet(self) -> Jet:
        return self.disc.basis(parity="even").synthesize(self.even_coeffs)

    def scaled(self, c: float) -> "CoefficientBody":
        return CoefficientBody(self.disc, self.coeffs * c * c, self.meta, self.floor)

    def ambient(self, x: np.ndarray):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        omega = x / r[:, None]
        S, G, H = self._ambient_unit(omega)
        return S * r**2, G * r[:, None], H

    def _ambient_unit(self, omega):
        L = self.max_degree
        c = self.even_coeffs
        if self.dim == 3:
            near = np.hypot(omega[:, 0], omega[:, 1]) < 1e-6
        else:
            near = np.zeros(len(omega), dtype=bool)
        val, grad, hess, frame = harmonic_jets_at(omega[~near], L, "even", self.disc.symmetry)
        s = val @ c
        G0, H0 = _ambient_from_sphere(
            s, np.einsum("kai,a->ki", grad, c), np.einsum("kaij,a->kij", hess, c), frame, omega[~near]
        )
        S = np.empty(len(omega))
        G = np.empty(omega.shape)
        H = np.empty(omega.shape + (omega.shape[1],))
        S[~near], G[~near], H[~near] = s, G0, H0
        if near.any():
            # pole: average the smooth ambient derivatives over a small ring
            delta = 1e-4
            rings = []
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                q = omega[near] + delta * np.array([dx, dy, 0.0])
                q /= np.linalg.norm(q, axis=1)[:, None]
                rings.append(self._ambient_unit(q))
            S[near] = harmonics_at(omega[near], L, "even", self.disc.symmetry) @ c
            G[near] = sum(r[1] for r in rings) / 4.0
            H[near] = sum(r[2] for r in rings) / 4.0
        return S, G, H


class LinearImage(Body):
    """The body T(K), with h_{T(K)}(theta) = h_K(T^t theta) evaluated exactly."""

    kind = "linear_image"

    def __init__(self, base: Body, T: np.ndarray, meta: dict | None = None, floor="strict", check=True):
        T = np.asarray(T, dtype=float)
        if T.shape != (base.dim, base.dim):
            raise ValueError(f"T must be {base.dim}x{base.dim}")
        if abs(np.linalg.det(T)) < 1e-14:
            raise ValueError("T must be invertible")
        self.base = base
        self.T = T
        meta = dict(base.meta if meta is None else meta)
        super().__init__(base.disc, meta, floor, check)

    def ambient(self, x):
        S, G, H = self.base.ambient(np.atleast_2d(x) @ self.T)
        return S, G @ self.T.T, np.einsum("ab,kbc,dc->kad", self.T, H, self.T)

    def _s_jet(self) -> Jet:
        grid = self.grid
        S, G, H = self.ambient(grid.nodes)
        grad = np.einsum("kin,kn->ki", grid.frame, G)
        hess = np.einsum("kin,knm,kjm->kij", grid.frame, H, grid.frame)
        hess -= 2.0 * S[:, None, None] * np.eye(self.dim - 1)
        return Jet(S, grad, hess)

    def scaled(self, c: float) -> "LinearImage":
        return LinearImage(self.base, self.T * c, self.meta, self.floor)


class FieldBody(Body):
    """Body defined directly by the jet of its support function."""

    kind = "field"

    def __init__(self, disc: Discretization, h_jet: Jet, meta: dict | None = None, floor="strict", check=True):
        self.__dict__["h_jet"] = h_jet
        super().__init__(disc, meta, floor, check)

    def _s_jet(self) -> Jet:
        return self.h_jet * self.h_jet

    def scaled(self, c: float) -> "FieldBody":
        return FieldBody(self.disc, self.h_jet * c, self.meta, self.floor)


# ----------------------------------------------------------------------------
# measures
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasureField:
    """Density of S_K, S_pK or V_K with respect to the spherical measure."""

    kind: str
    density: np.ndarray
    total: float
    p: float | None = None

    def integrate(self, values, grid: SphereGrid) -> float:
        return float(grid.integrate(np.asarray(values) * self.density))


def measures(K: Body, kind: str = "V", p: float | None = None) -> MeasureField:
    """Surface area (``"S"``), L^p surface area (``"Sp"``) or cone volume (``"V"``)."""
    if kind in ("S", "S_K"):
        dens, kind, p = K.det, "S_K", None
    elif kind in ("V", "V_K"):
        dens, kind, p = K.cone_density, "V_K", None
    elif kind in ("Sp", "S_pK"):
        if p is None:
            raise ValueError("S_pK requires p")
        dens, kind = K.h ** (1.0 - p) * K.det, "S_pK"
    else:
        raise ValueError(f"unknown measure kind {kind!r}")
    return MeasureField(kind, dens, float(K.grid.integrate(dens)), p)


# ----------------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------------


def volume(K: Body) -> float:
    """Volume (1/n) \\int h det(D^2 h)."""
    return K.volume


def polar_volume(K: Body) -> float:
    """Volume of the polar body, (1/n) \\int h^{-n}."""
    return float(K.grid.integrate(K.h ** (-K.dim)) / K.dim)


def geometric_distance(K: Body) -> float:
    """Ratio of circumradius to inradius about the origin, max h / min h."""
    return float(K.h.max() / K.h.min())


def apply_linear(K: Body, T: np.ndarray, check: bool = True) -> Body:
    """The body T(K).  The identity returns ``K`` itself.

    Coefficient bodies and linear images are mapped exactly (the support
    function is pulled back through T); field bodies are first projected.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (K.dim, K.dim):
        raise ValueError(f"T must be {K.dim}x{K.dim}, got {T.shape}")
    if np.array_equal(T, np.eye(K.dim)):
        return K
    if isinstance(K, LinearImage):
        M = T @ K.T
        if np.allclose(M, np.eye(K.dim), rtol=0, atol=1e-13):
            return K.base
        return LinearImage(K.base, M, K.meta, K.floor, check)
    if isinstance(K, FieldBody):
        K = CoefficientBody(K.disc, K.coeffs, K.meta, K.floor, check)
    return LinearImage(K, T, K.meta, K.floor, check)


def shifted_support(K: Body, R: float, p: int, xi: np.ndarray) -> FieldBody:
    """Body with support h_K ((p-1) R^p + lin_{K,xi}^p), p even.

    Requires the ball of radius 1/R inside K; convexity is only weak in
    general so the relaxed floor is used.
    """
    p = int(p)
    if p < 2 or p % 2:
        raise ValueError("p must be a positive even integer")
    if K.h.min() < 1.0 / R * (1 - 1e-12):
        raise InradiusViolation(f"min h_K = {K.h.min():.6g} < 1/R = {1.0 / R:.6g}")
    xi = np.asarray(xi, dtype=float)
    xi = xi / np.linalg.norm(xi)
    lin = linear_jet(K.grid, xi) / K.h_jet
    jet = K.h_jet * ((lin**p) + (p - 1) * float(R) ** p)
    return FieldBody(K.disc, jet, {"kind": "shifted_support", "R": float(R), "p": p, "xi": xi.tolist()}, floor="weak")


def perturbed(K: Body, z: Jet, eps: float = 1.0, floor: str = "strict") -> FieldBody:
    """Body with support h_K (1 + eps z)."""
    jet = K.h_jet * (z * float(eps) + 1.0)
    return FieldBody(K.disc, jet, {"kind": "perturbed", "eps": float(eps)}, floor=floor)


def body_from_json(text: str, disc: Discretization | None = None) -> CoefficientBody:
    obj = json.loads(text)
    dim, L = int(obj["dim"]), int(obj["max_degree"])
    meta = obj.get("meta", {})
    if meta.get("field", "h^2") != "h^2":
        raise ValueError("only h^2 coefficient files are supported")
    if disc is None:
        disc = default_discretization(dim, meta.get("resolution"), L)
    if disc.dim != dim or disc.degree != L:
        raise ValueError("discretization does not match the stored body")
    return CoefficientBody(disc, np.array(obj["coeffs"], dtype=float), meta)


# ----------------------------------------------------------------------------
# standard bodies
# ----------------------------------------------------------------------------


def _symmetric_projection(disc: Discretization, func, max_degree: int) -> np.ndarray:
    """Even harmonic coefficients of ``func`` with hyperoctahedral symmetry kept exactly.

    The product grid is already invariant under the coordinate symmetries
    fixing the polar axis (when the longitude count is a multiple of four),
    so averaging the quadrature over the cyclic axis permutations yields a
    rule invariant under the full group.
    """
    grid = disc.grid
    if disc.dim == 2 and grid.size % 4 == 0:
        group = [np.eye(2)]
    elif disc.dim == 3 and grid.shape[1] % 4 == 0:
        P = np.roll(np.eye(3), 1, axis=0)
        group = [np.eye(3), P, P @ P]
    else:
        group = _hyperoctahedral(disc.dim)
    c = 0.0
    for g in group:
        pts = grid.nodes @ g.T
        Y = harmonics_at(pts, max_degree, "even", disc.symmetry)
        c = c + (func(pts) * grid.weights) @ Y
    return c / len(group)


def _hyperoctahedral(dim: int):
    import itertools

    out = []
    for perm in itertools.permutations(range(dim)):
        for signs in itertools.product((1.0, -1.0), repeat=dim - 1):
            P = np.zeros((dim, dim))
            for i, j in enumerate(perm):
                P[i, j] = 1.0
            out.append(np.diag((1.0,) + signs) @ P)
    return out


def _heat_degree(dim: int, t: float, cap: int) -> int:
    """Smallest degree beyond which the heat factor exp(-t l(l+n-2)) is below 1e-17."""
    l = 2
    while l < cap and t * l * (l + dim - 2) < 39.0:
        l += 2
    return min(l, cap)


def rounded_lq_coeffs(disc: Discretization, q: float, eps: float, smoothing: float) -> np.ndarray:
    """Coefficients of h^2 for the heat-smoothed body B_q + eps B.

    The support function ||theta||_{q'} + eps (q' the dual exponent) is
    only C^1, so its truncated expansion is not convex.  Convolving h with
    the heat kernel averages rotated copies of the body, which preserves
    convexity and the curvature floor eps, and makes the expansion decay
    fast enough to truncate.
    """
    qd = q / (q - 1.0)

    def h_of(x):
        return np.sum(np.abs(x) ** qd, axis=1) ** (1.0 / qd) + eps

    cap = disc.grid.exact_degree // 2
    Lh = _heat_degree(disc.dim, smoothing, cap) if smoothing > 0 else disc.degree
    Lh = max(Lh - Lh % 2, disc.degree)
    bh = disc.basis(Lh, "even")
    c = _symmetric_projection(disc, h_of, Lh) * np.exp(-smoothing * bh.eigenvalues)
    h = bh.values @ c
    return disc.basis(parity="even").project(h * h)


def _ellipsoid_coeffs(disc: Discretization, A: np.ndarray) -> np.ndarray:
    # s = theta^t A A^t theta is a quadratic; project it exactly
    M = A @ A.T
    grid = disc.grid
    vals = np.einsum("ki,ij,kj->k", grid.nodes, M, grid.nodes)
    c = disc.basis(parity="even").project(vals)
    deg = disc.basis(parity="even").degrees
    c[deg > 2] = 0.0
    return c


def random_ellipsoid_matrix(dim: int, rng: np.random.Generator, max_cond: float = 4.0) -> np.ndarray:
    """Random T with unit determinant and condition number at most max_cond."""
    Q1, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    Q2, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    logs = rng.uniform(0.0, np.log(max_cond), size=dim)
    logs[0], logs[-1] = 0.0, np.log(max_cond) * rng.uniform(0.5, 1.0)
    logs -= logs.mean()
    return Q1 @ np.diag(np.exp(logs)) @ Q2


def make_standard(kind: str, disc: Discretization | None = None, dim: int | None = None, **params) -> Body:
    """Construct one of the standard bodies.

    Parameters
    ----------
    kind : {"ball", "ellipsoid", "rounded_lq", "random_even"}
    disc : Discretization, optional
        Defaults to the shared discretization for ``dim``.
    params :
        ``r`` for balls; ``A`` (matrix or diagonal) for ellipsoids (the body
        A(B), with h = |A^t theta|); ``q``, ``eps`` and ``smoothing`` (heat
        time applied to h) for rounded_lq;
        ``seed`` and ``amplitude`` (and optionally ``degrees``) for
        random_even.
    """
    if disc is None:
        if dim is None:
            raise ValueError("give either disc or dim")
        disc = default_discretization(dim)
    n = disc.dim
    basis = disc.basis(parity="even")
    if kind == "ball":
        r = float(params.get("r", 1.0))
        if r <= 0:
            raise ValueError("radius must be positive")
        c = np.zeros(basis.size)
        c[0] = r * r * np.sqrt(disc.grid.area)
        return CoefficientBody(disc, c, {"kind": "ball", "r": r})
    if kind == "ellipsoid":
        A = np.asarray(params["A"], dtype=float)
        if A.ndim == 1:
            A = np.diag(A)
        if A.shape != (n, n) or abs(np.linalg.det(A)) < 1e-14:
            raise ValueError(f"ellipsoid needs an invertible {n}x{n} matrix")
        M = A @ A.T
        if disc.symmetry is not None and np.abs(M - np.diag(np.diag(M))).max() > 1e-12 * np.abs(M).max():
            raise ValueError("ellipsoid axes must be coordinate axes on a reflection-symmetric discretization")
        return CoefficientBody(disc, _ellipsoid_coeffs(disc, A), {"kind": "ellipsoid", "A": A.tolist()})
    if kind == "rounded_lq":
        q = float(params.get("q", 6.0))
        eps = float(params.get("eps", 0.15))
        if q <= 1 or eps <= 0:
            raise ValueError("rounded_lq needs q > 1 and eps > 0")
        t = float(params.get("smoothing", 0.02))
        c = rounded_lq_coeffs(disc, q, eps, t)
        return CoefficientBody(disc, c, {"kind": "rounded_lq", "q": q, "eps": eps, "smoothing": t})
    if kind == "random_even":
        seed = int(params.get("seed", 0))
        amp = float(params.get("amplitude", 0.05))
        degrees = params.get("degrees", (2, 4))
        rng = np.random.default_rng(seed)
        lo, hi = degrees
        sel = (basis.degrees >= lo) & (basis.degrees <= hi)
        w = np.zeros(basis.size)
        w[sel] = rng.standard_normal(sel.sum())
        u = basis.values @ w
        u *= amp / np.abs(u).max()
        c = basis.project(np.exp(2.0 * u))
        K = CoefficientBody(disc, c, {"kind": "random_even", "seed": seed, "amplitude": amp})
        K = K.normalized(1.0)
        K.meta.update({"kind": "random_even", "seed": seed, "amplitude": amp})
        return K
    raise ValueError(f"unknown body kind {kind!r}")
