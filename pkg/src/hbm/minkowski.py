"""The even L^p-Minkowski problem as a variational problem.

For an even measure mu = f dm and p != 0 the normalized functional

    G_{mu,p}(K) = log \\int h_K^p dmu - (p/n) log V(K)

is 0-homogeneous, and its critical points are exactly the bodies with
S_pK = c mu.  Minimizing F = e^G / p amounts to minimizing J = sign(p) G;
for p = 0 the limit G_{mu,0} = \\int log h dmu~ - (1/n) log V is used.

The optimizer works on the even harmonic coefficients of s = h^2 with an
L-BFGS loop whose steps are rejected (and shortened) whenever the trial
body leaves the curvature floor.  The gradient is the exact derivative of
the discrete objective.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .body import (
    Body,
    CoefficientBody,
    ConvexityFailure,
    Discretization,
    apply_linear,
    geometric_distance,
    make_standard,
    measures,
    perturbed,
    polar_volume,
)
from .jet import Jet
from .spectral import dirichlet_energy, lambda1_even, variance

__all__ = [
    "TargetMeasure",
    "SolveReport",
    "NotConverged",
    "ConvexityBarrier",
    "PreconditionUnmet",
    "SeparationNotFound",
    "functional",
    "normalized_functional",
    "first_variation",
    "second_variation",
    "el_residual",
    "solve",
    "nonuniqueness_experiment",
    "critical_divergence_scan",
    "supercritical_diagnostic",
    "separation",
]


class NotConverged(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConvexityBarrier(RuntimeError):
    pass


class PreconditionUnmet(ValueError):
    pass


class SeparationNotFound(RuntimeError):
    pass


# ----------------------------------------------------------------------------
# target measures
# ----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TargetMeasure:
    """An even measure f dm on the sphere."""

    density: np.ndarray
    grid: object
    label: str = "custom"

    def __post_init__(self):
        f = np.asarray(self.density, dtype=float)
        if f.shape != (self.grid.size,):
            raise ValueError("density must have one value per node")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValueError("density must be finite and nonnegative")
        if np.max(np.abs(f - f[self.grid.antipode])) > 1e-10 * max(np.abs(f).max(), 1e-300):
            raise ValueError("target measure must be even")
        from .directions import sample_directions

        u = sample_directions(self.grid.dim, 64)
        half = np.clip(u @ self.grid.nodes.T, 0, None) @ (f * self.grid.weights)
        if np.any(half <= 0):
            raise ValueError("target measure is concentrated on a great subsphere")

    @property
    def total(self) -> float:
        return float(self.grid.integrate(self.density))

    @classmethod
    def uniform(cls, grid) -> "TargetMeasure":
        return cls(np.ones(grid.size), grid, "uniform")

    @classmethod
    def from_body(cls, K: Body, p: float) -> "TargetMeasure":
        return cls(measures(K, "Sp", p).density, K.grid, f"S_{p:g}K")

    @property
    def is_uniform(self) -> bool:
        f = self.density
        return bool(np.ptp(f) <= 1e-12 * f.max())


# ----------------------------------------------------------------------------
# functionals and variations
# ----------------------------------------------------------------------------


def _G(h: np.ndarray, V: float, mu: TargetMeasure, p: float) -> float:
    n = mu.grid.dim
    w = mu.grid.weights * mu.density
    if p == 0:
        return float(w @ np.log(h)) / mu.total - np.log(V) / n
    return float(np.log(w @ h**p)) - p / n * np.log(V)


def normalized_functional(K: Body, mu: TargetMeasure, p: float) -> float:
    """G_{mu,p}(K) (log form; G_{mu,0} for p = 0)."""
    return _G(K.h, K.volume, mu, p)


def functional(K: Body, mu: TargetMeasure, p: float) -> float:
    """F_{mu,p}(K) = (1/p) \\int h^p dmu / V^{p/n}; G_{mu,0}(K) when p = 0."""
    if p == 0:
        return normalized_functional(K, mu, 0.0)
    w = mu.grid.weights * mu.density
    return float(w @ K.h**p) / p / K.volume ** (p / K.dim)


def first_variation(K: Body, mu: TargetMeasure, p: float) -> np.ndarray:
    """Density g with d/de G(h (1 + e z)) = \\int z g dm at e = 0."""
    rho = K.cone_density
    V = K.volume
    if p == 0:
        return mu.density / mu.total - rho / V
    hp = K.h**p * mu.density
    return p * (hp / float(mu.grid.integrate(hp)) - rho / V)


def second_variation(K: Body, p: float, z: Jet) -> float:
    """Second variation of G_{S_pK,p} along h (1 + e z).

    (p/V) [\\int |grad z|^2_{g_K} dV_K - (n - p) Var_{V_K}(z)], with the
    prefactor 1/V when p = 0.
    """
    V = K.volume
    E = dirichlet_energy(K, z)
    var = variance(K, z)
    pref = (1.0 if p == 0 else p) / V
    return pref * (E - (K.dim - p) * var)


def el_residual(K: Body, mu: TargetMeasure, p: float) -> tuple[float, float]:
    """(residual, c): c = |S_pK| / |mu|, residual = L1 distance of normalized densities / 2."""
    S = measures(K, "Sp", p)
    c = S.total / mu.total
    diff = np.abs(S.density / S.total - mu.density / mu.total)
    return 0.5 * float(K.grid.integrate(diff)), float(c)


# ----------------------------------------------------------------------------
# optimizer
# ----------------------------------------------------------------------------


@dataclass
class SolveReport:
    body: Body
    p: float
    c: float
    el_residual: float
    objective_trace: list
    dG: float
    status: str
    iterations: int
    grad_norm: float
    on_floor: bool = False
    lambda1_even: float | None = None

    def summary(self) -> dict:
        return {
            "p": self.p,
            "c": self.c,
            "el_residual": self.el_residual,
            "dG": self.dG,
            "status": self.status,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "on_floor": self.on_floor,
            "lambda1_even": self.lambda1_even,
            "objective": self.objective_trace[-1] if self.objective_trace else None,
        }


class _Problem:
    """Objective J = sign(p) G and its exact gradient in s-coefficients.

    With ``tau > 0`` the log-barrier tau * B, B = -mean log det D^2 h, is
    added; it keeps iterates strictly inside the convex cone.
    """

    def __init__(self, disc: Discretization, mu: TargetMeasure, p: float, tau: float = 0.0):
        self.disc = disc
        self.mu = mu
        self.p = float(p)
        self.tau = float(tau)
        self.sign = 1.0 if p >= 0 else -1.0
        self.basis = disc.basis(parity="even")
        self.n = disc.dim
        self.area = float(disc.grid.weights.sum())

    def body(self, c, check=True) -> CoefficientBody:
        return CoefficientBody(self.disc, c, check=check)

    def barrier(self, K: Body) -> float:
        return -float(self.disc.grid.weights @ np.log(K.det)) / self.area

    def value(self, K: Body) -> float:
        J = self.sign * _G(K.h, K.volume, self.mu, self.p)
        if self.tau > 0:
            J += self.tau * self.barrier(K)
        return J

    @staticmethod
    def _weights(r: Jet, s0, W):
        # sum_k [s0 eta_a + W : Hess eta_a] with eta_a = phi_a r, as weights on phi_a and its derivatives
        alpha = s0 * r.value + (W * r.hess).sum(axis=(1, 2))
        beta = 2.0 * (W @ r.grad[:, :, None])[:, :, 0]
        gamma = W * r.value[:, None, None]
        return alpha, beta, gamma

    def gradient(self, K: Body) -> np.ndarray:
        n, p = self.n, self.p
        w = self.disc.grid.weights
        h = K.h_jet
        hv = h.value
        V = K.volume
        # the s-coefficient direction phi_a moves h by eta_a = phi_a / (2h)
        r = (h * 2.0).reciprocal()
        if n == 2:
            s0 = w * (K.det + hv) / n
            W = (w * hv / n)[:, None, None] * np.ones((1, 1, 1))
        else:
            s0 = w * (K.det + hv * np.trace(K.adj, axis1=1, axis2=2)) / n
            W = (w * hv / n)[:, None, None] * K.adj
        # dJ = sign * (dI - (q / V) dV) with q = p / n (1 / n when p = 0)
        fw = w * self.mu.density
        if p == 0:
            dI = fw * r.value / hv / self.mu.total
            q = 1.0 / n
        else:
            hp = fw * hv**p
            dI = p * hp / hv * r.value / hp.sum()
            q = p / n
        a, b, c = self._weights(r, s0, W)
        f = -self.sign * q / V
        alpha, beta, gamma = self.sign * dI + f * a, f * b, f * c
        if self.tau > 0:
            # d det = adj : D^2 eta (the scalar D^2 eta when n = 2)
            m = -self.tau * w / K.det / self.area
            M = m[:, None, None] * (K.adj if n == 3 else np.ones((1, 1, 1)))
            a, b, c = self._weights(r, np.trace(M, axis1=1, axis2=2), M)
            alpha, beta, gamma = alpha + a, beta + b, gamma + c
        return self.basis.contract(alpha, beta, np.broadcast_to(gamma, (hv.size,) + gamma.shape[1:]))


def _lbfgs_direction(g, S, Y, H0):
    q = g.copy()
    alphas = []
    for s, y in reversed(list(zip(S, Y))):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append((rho, a))
        q -= a * y
    if S:
        s, y = S[-1], Y[-1]
        gamma = (s @ y) / (y @ (H0 * y))
        r = gamma * H0 * q
    else:
        r = H0 * q
    for (s, y), (rho, a) in zip(zip(S, Y), reversed(alphas)):
        b = rho * (y @ r)
        r += s * (a - b)
    return -r


@dataclass
class _State:
    x: np.ndarray
    K: Body
    trace: list
    iterations: int = 0
    converged: bool = False
    on_floor: bool = False
    stalled: bool = False
    stationary: bool = False
    grad_norm: float = np.inf


def _unit_volume(prob: _Problem, x):
    """Rescale coefficients to volume one.  Inputs are bodies that already
    passed the floor check, and a positive rescaling cannot break convexity,
    so the check is not repeated (it can flip on rounding at the floor)."""
    K = prob.body(x, check=False)
    x = x * K.volume ** (-2.0 / prob.n)
    return x, prob.body(x, check=False)


def _descend(prob: _Problem, x, max_iter, gtol, el_tol, memory, check_el=True) -> _State:
    """L-BFGS with backtracking, floor rejection and volume renormalization."""
    n = prob.n
    x, K = _unit_volume(prob, x)
    deg = prob.basis.degrees
    H0 = 1.0 / (1.0 + deg * (deg + n - 2.0))
    J = prob.value(K)
    g = prob.gradient(K)
    S, Y = [], []
    st = _State(x, K, [float(J)])
    for it in range(1, max_iter + 1):
        if np.abs(g).max() * np.linalg.norm(x) < gtol:
            # stationary: further steps cannot reduce the EL residual on this discretization
            st.stationary = True
            st.converged = not check_el or el_residual(K, prob.mu, prob.p)[0] < el_tol
            break
        d = _lbfgs_direction(g, S, Y, H0)
        if d @ g >= 0:
            S, Y = [], []
            d = -H0 * g
        t = 1.0
        accepted = False
        while t > 1e-12:
            xt = x + t * d
            try:
                Kt = prob.body(xt)
                Jt = prob.value(Kt)
            except ConvexityFailure:
                st.on_floor = True
                t *= 0.5
                continue
            if np.isfinite(Jt) and Jt <= J + 1e-4 * t * (g @ d):
                accepted = True
                break
            t *= 0.5
        st.iterations = it
        if not accepted:
            # no descent left at machine precision
            st.stalled = True
            break
        # renormalize volume; J is 0-homogeneous and the barrier shifts by a constant
        alpha = Kt.volume ** (-2.0 / n)
        Kn = prob.body(xt * alpha, check=False)  # positive rescaling of a checked body
        gn = prob.gradient(Kn)
        s_vec = alpha * (xt - x)
        y_vec = gn - g / alpha
        x, K, J = xt * alpha, Kn, prob.value(Kn)
        S = [alpha * s for s in S]
        Y = [y / alpha for y in Y]
        g = gn
        if s_vec @ y_vec > 1e-14 * np.linalg.norm(s_vec) * np.linalg.norm(y_vec):
            S.append(s_vec)
            Y.append(y_vec)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        st.trace.append(float(J))
    st.x, st.K = x, K
    st.grad_norm = float(np.abs(g).max() * np.linalg.norm(x))
    return st


def _fd_hessian(prob: _Problem, x: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Symmetrized forward differences of the exact gradient."""
    eps = 1e-7 * np.linalg.norm(x)
    H = np.empty((x.size, x.size))
    for i in range(x.size):
        xi = x.copy()
        xi[i] += eps
        H[:, i] = (prob.gradient(prob.body(xi, check=False)) - g) / eps
    return 0.5 * (H + H.T)


def _newton(prob: _Problem, x, max_iter, gtol, el_tol, check_el=True) -> _State:
    """Damped Newton steps on the volume-one slice with |eigenvalue| modification.

    The Hessian is restricted to the complement of the radial direction
    (along which J is constant), negative curvature is flipped and tiny
    curvature is floored, and steps are backtracked under the floor check.
    """
    x, K = _unit_volume(prob, x)
    J = prob.value(K)
    st = _State(x, K, [float(J)])
    for it in range(1, max_iter + 1):
        g = prob.gradient(K)
        u = x / np.linalg.norm(x)
        g = g - u * (u @ g)
        st.grad_norm = float(np.abs(g).max() * np.linalg.norm(x))
        if st.grad_norm < gtol:
            st.stationary = True
            st.converged = not check_el or el_residual(K, prob.mu, prob.p)[0] < el_tol
            break
        H = _fd_hessian(prob, x, prob.gradient(K))
        P = np.eye(x.size) - np.outer(u, u)
        lam, U = np.linalg.eigh(P @ H @ P)
        radial = np.abs(U.T @ u) > 0.5
        mod = np.maximum(np.abs(lam), 1e-8 * np.abs(lam).max())
        inv = np.where(radial, 0.0, 1.0 / mod)
        d = -U @ (inv * (U.T @ g))
        t = 1.0
        accepted = False
        while t > 1e-10:
            try:
                Kt = prob.body(x + t * d)
                Jt = prob.value(Kt)
            except ConvexityFailure:
                st.on_floor = True
                t *= 0.5
                continue
            if np.isfinite(Jt) and Jt <= J + 1e-4 * t * (g @ d):
                accepted = True
                break
            t *= 0.5
        st.iterations = it
        if not accepted:
            st.stalled = True
            break
        alpha = Kt.volume ** (-2.0 / prob.n)
        x = (x + t * d) * alpha
        K = prob.body(x, check=False)
        J = prob.value(K)
        st.trace.append(float(J))
    st.x, st.K = x, K
    return st


def _continue(prob: _Problem, st: _State, max_iter, gtol, el_tol, memory) -> _State:
    """Hand an unconverged Newton run over to L-BFGS."""
    if st.converged or st.stationary:
        return st
    more = _descend(prob, st.x, max_iter, gtol, el_tol, memory)
    more.iterations += st.iterations
    more.trace = st.trace + more.trace[1:]
    more.on_floor |= st.on_floor
    return more


BARRIER_SCHEDULE = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)
STAGE_ITER = 300
NEWTON_ITER = 40


def solve(
    mu: TargetMeasure,
    p: float,
    init: Body,
    disc: Discretization | None = None,
    max_iter: int = 2000,
    gtol: float = 1e-8,
    el_tol: float = 1e-5,
    memory: int = 20,
    raise_on_failure: bool = False,
    barrier: str = "auto",
    newton_first: bool = False,
) -> SolveReport:
    """Minimize J = sign(p) G_{mu,p} over even bodies (p in (-n, 1)).

    Parameters
    ----------
    mu : TargetMeasure
    p : float
        Exponent; p <= -n and p >= 1 are rejected.
    init : Body
        Starting body; projected to coefficients on ``disc``.
    gtol : float
        Bound on the sup-norm of the coefficient gradient, relative to
        1 / |c| (the natural scale of a 0-homogeneous objective).
    el_tol : float
        Bound on the Euler-Lagrange residual for convergence.
    barrier : {"auto", "always", "never"}
        Interior-point continuation: a log-barrier on det D^2 h with
        weights in ``BARRIER_SCHEDULE`` (at most ``STAGE_ITER`` L-BFGS
        steps each) followed by damped Newton polishing without the barrier.
        "auto" uses it only when the plain descent stalls on the
        curvature floor.
    newton_first : bool
        Start with damped Newton steps; meant for warm starts close to a
        solution (e.g. a coarse solution transferred to a finer
        discretization).  Falls back to the default path if it stalls.
    """
    disc = disc or init.disc
    n = disc.dim
    if not (-n < p < 1):
        raise ValueError(f"solver implemented for -n < p < 1, got p={p} (n={n})")
    if mu.grid is not disc.grid:
        raise ValueError("target measure and discretization use different grids")
    if barrier not in ("auto", "always", "never"):
        raise ValueError(f"unknown barrier mode {barrier!r}")
    c0 = np.asarray(init.coeffs if init.disc is disc else _transfer(init, disc), dtype=float)
    # on a symmetric discretization this projects s onto the invariant subspace
    x0 = c0[disc.coefficient_mask()]
    prob = _Problem(disc, mu, p)
    prob.body(x0)  # a transferred initializer may fail the floor check
    st = None
    if newton_first:
        st = _continue(prob, _newton(prob, x0, NEWTON_ITER, gtol, el_tol), max_iter, gtol, el_tol, memory)
        x0 = st.x
    elif barrier != "always":
        st = _descend(prob, x0, max_iter, gtol, el_tol, memory)
    if barrier == "always" or (barrier == "auto" and not st.stationary and st.on_floor):
        x = x0
        used = 0
        stage_iter = min(max_iter, STAGE_ITER)
        for tau in BARRIER_SCHEDULE:
            sub = _descend(_Problem(disc, mu, p, tau), x, stage_iter, 1e-3 * tau + gtol, el_tol, memory,
                           check_el=False)
            x, used = sub.x, used + sub.iterations
        # quasi-Newton progress is slow on the anisotropic bodies reached this way
        sub = _newton(_Problem(disc, mu, p, BARRIER_SCHEDULE[-1]), x, NEWTON_ITER, gtol, el_tol, check_el=False)
        x, used = sub.x, used + sub.iterations
        fin = _continue(prob, _newton(prob, x, NEWTON_ITER, gtol, el_tol), max_iter, gtol, el_tol, memory)
        fin.iterations += used
        if st is None or fin.converged or el_residual(fin.K, mu, p)[0] < el_residual(st.K, mu, p)[0]:
            if st is not None:
                fin.on_floor = st.on_floor
            st = fin
    K = st.K
    res, c = el_residual(K, mu, p)
    status = "Converged" if st.converged else "NotConverged"
    if not st.converged and st.grad_norm < gtol and res < el_tol:
        status = "Converged"
    rep = SolveReport(K, float(p), c, res, st.trace, geometric_distance(K), status, st.iterations, st.grad_norm,
                      st.on_floor)
    if raise_on_failure and status != "Converged":
        raise NotConverged(f"solver stopped with residual {res:.2e}, gradient {st.grad_norm:.2e}", rep)
    return rep


def _transfer(K: Body, disc: Discretization) -> np.ndarray:
    """Coefficients of K's h^2 in ``disc`` (padding or truncating degrees)."""
    from .sphere import harmonic_index

    src = dict(zip(harmonic_index(K.dim, K.max_degree), K.coeffs))
    return np.array([src.get(lab, 0.0) for lab in harmonic_index(disc.dim, disc.degree)])


# ----------------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------------


def separation(K1: Body, K2: Body) -> float:
    """Scale-free distance max(h2/h1) * max(h1/h2) >= 1 (1 iff homothetic)."""
    r = K2.h / K1.h
    return float(r.max() / r.min())


def _rescale_to_c1(K: Body, mu: TargetMeasure, p: float) -> Body:
    _, c = el_residual(K, mu, p)
    # S_p(tK) = t^{n-p} S_pK
    return K.scaled(c ** (-1.0 / (K.dim - p)))


def nonuniqueness_experiment(
    K1: Body,
    p: float,
    disc: Discretization | None = None,
    n_init: int = 8,
    seed: int = 0,
    delta_sep: float = 0.05,
    el_tol: float = 1e-5,
    max_iter: int = 2000,
    lam: float | None = None,
    stop_on_found: bool = False,
    refine=(),
) -> dict:
    """Look for K2 != K1 with S_pK2 = S_pK1.

    Requires lambda_{1,e}(K1) < n - p and p > -n.  Initializers are K1 pushed
    both ways along its first even eigenfunction (where K1 fails to be a
    local minimum), followed by seeded random bodies.  With
    ``stop_on_found`` the remaining initializers are skipped once a
    separated solution appears.

    ``refine`` is a sequence of finer discretizations.  When given, the
    search on ``disc`` only locates stationary points; the separated one
    with the smallest residual is then transferred level by level (K1 is
    carried over exactly, mu recomputed on each grid) and polished with
    Newton steps.  The second solution is typically far more elongated than
    K1 and needs a higher degree to satisfy the Euler-Lagrange equation
    pointwise.  Refined runs appear in ``runs`` as ``<init>@L<degree>``.
    """
    n = K1.dim
    disc = disc or K1.disc
    if lam is None:
        lam = lambda1_even(K1)[0]
    if p <= -n:
        raise PreconditionUnmet(f"p = {p} must exceed -n = {-n}")
    if not lam < n - p:
        raise PreconditionUnmet(f"lambda_1e(K1) = {lam:.6f} is not below n - p = {n - p:.6f}")
    K1d = K1 if K1.disc is disc else CoefficientBody(disc, _transfer(K1, disc), K1.meta)
    mu = TargetMeasure.from_body(K1d, p)
    inits = _initializers(K1d, n_init, seed)
    runs = []
    found = None
    candidates = []
    # with refinement the first level only has to reach stationarity
    search_tol = np.inf if refine else el_tol
    for label, K0 in inits:
        rep = solve(mu, p, K0, disc, max_iter=max_iter, el_tol=search_tol)
        K2 = _rescale_to_c1(rep.body, mu, p)
        sep = separation(K1d, K2)
        row = {"init": label, "status": rep.status, "el_residual": rep.el_residual, "separation": sep,
               "iterations": rep.iterations, "dG": rep.dG}
        runs.append(row)
        if rep.el_residual < el_tol and sep > 1.0 + delta_sep:
            found = found or (row, K2, rep)
            if stop_on_found:
                break
        elif refine and sep > 1.0 + delta_sep and rep.status == "Converged":
            candidates.append((rep.el_residual, label, rep.body))
            if stop_on_found:
                break
    if found is None and candidates:
        _, label, K = min(candidates, key=lambda c: c[0])
        for i, fine in enumerate(refine):
            last = i == len(refine) - 1
            K1f = CoefficientBody(fine, _transfer(K1, fine), K1.meta)
            mu_f = TargetMeasure.from_body(K1f, p)
            rep = solve(mu_f, p, CoefficientBody(fine, _transfer(K, fine)), fine, max_iter=max_iter,
                        el_tol=el_tol if last else np.inf, newton_first=True)
            K = rep.body
            K2 = _rescale_to_c1(K, mu_f, p)
            sep = separation(K1f, K2)
            row = {"init": f"{label}@L{fine.degree}", "status": rep.status, "el_residual": rep.el_residual,
                   "separation": sep, "iterations": rep.iterations, "dG": rep.dG}
            runs.append(row)
            if rep.el_residual < el_tol and sep > 1.0 + delta_sep:
                found = (row, K2, rep)
                break
    out = {"p": float(p), "lambda1_even_K1": float(lam), "runs": runs, "found": found is not None}
    if found is not None:
        row, K2, rep = found
        out.update({"K2": K2, "separation": row["separation"], "el_residual": row["el_residual"], "init": row["init"],
                    "report": rep})
    return out


def _initializers(K1: Body, count: int, seed: int):
    disc = K1.disc
    lam, v, asm = lambda1_even(K1)
    zj = asm.trial.combine(v)
    zj = zj * (1.0 / np.abs(zj.value).max())
    out = []
    for sgn in (1.0, -1.0):
        for eps in (0.3, 0.15, 0.05):
            try:
                Kp = perturbed(K1, zj, sgn * eps)
                out.append((f"eigen{'+' if sgn > 0 else '-'}{eps:g}", CoefficientBody(disc, Kp.coeffs)))
                break
            except ConvexityFailure:
                continue
    out.append(("ball", make_standard("ball", disc)))
    rng = np.random.default_rng(seed)
    k = 0
    while len(out) < count:
        amp = 0.05
        try:
            out.append((f"random{k}", make_standard("random_even", disc, seed=int(rng.integers(1 << 31)), amplitude=amp)))
        except ConvexityFailure:
            pass
        k += 1
    return out[:count]


def critical_divergence_scan(mu: TargetMeasure, p_list, disc: Discretization, init: Body | None = None,
                             max_iter: int = 3000, el_tol: float = 1e-5) -> list[dict]:
    """Solve for each p (descending toward -n) with warm starts; one row per p."""
    n = disc.dim
    rows = []
    K = init or make_standard("ball", disc)
    for p in p_list:
        p = float(p)
        if not (-n < p < 0):
            raise ValueError(f"scan exponents must lie in (-n, 0), got {p}")
        rep = solve(mu, p, K, disc, max_iter=max_iter, el_tol=el_tol)
        lam = lambda1_even(rep.body)[0]
        rep.lambda1_even = lam
        rows.append({"p": p, "dG": rep.dG, "el_residual": rep.el_residual, "lambda_even": lam,
                     "objective": rep.objective_trace[-1], "status": rep.status})
        K = rep.body
    return rows


def supercritical_diagnostic(mu: TargetMeasure, p: float, body_path, labels=None) -> list[dict]:
    """Evaluate F_{mu,p} and -F along a family of bodies for p <= -n.

    Bodies are volume-normalized before evaluation; the Mahler product
    V(K) V(K°) is reported alongside.
    """
    rows = []
    n = mu.grid.dim
    if p > -n:
        raise ValueError(f"diagnostic is for p <= -n, got {p}")
    for i, K in enumerate(body_path):
        if K.grid is not mu.grid:
            raise ValueError("bodies must live on the measure's grid")
        K = K.normalized(1.0)
        F = functional(K, mu, p)
        rows.append({"label": labels[i] if labels is not None else i, "dG": geometric_distance(K), "F": F,
                     "minus_F": -F, "mahler": K.volume * polar_volume(K)})
    return rows


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
    return buf.getvalue()
