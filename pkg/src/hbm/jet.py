"""Second-order jets of scalar fields on the sphere.

A :class:`Jet` carries per-node values together with the tangential
gradient and the covariant Hessian in the grid's orthonormal frame.
Arithmetic propagates derivatives exactly by the product and chain rules,
so quantities such as D^2 of h_K (1 + z) never go through a projection.

Shapes: ``value`` is (N, *batch), ``grad`` is (N, *batch, d) and ``hess``
is (N, *batch, d, d) with d = n - 1.  Binary operations align batch axes
on the left, so an unbatched jet combines with a batched one along the
node axis.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Jet", "linear_jet", "constant_jet"]


class Jet:
    __slots__ = ("value", "grad", "hess")
    __array_priority__ = 1000

    def __init__(self, value, grad, hess):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = np.asarray(hess, dtype=float)

    # -- structure -----------------------------------------------------
    @property
    def tangent_dim(self) -> int:
        return self.grad.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.value.shape[1:]

    def _expand(self, ndim: int) -> "Jet":
        k = ndim - self.value.ndim
        if k <= 0:
            return self
        pad = (1,) * k
        v = self.value.reshape(self.value.shape + pad)
        g = self.grad.reshape(self.value.shape + pad + self.grad.shape[-1:])
        h = self.hess.reshape(self.value.shape + pad + self.hess.shape[-2:])
        return Jet(v, g, h)

    def __getitem__(self, idx) -> "Jet":
        """Index the batch axes (the node axis is kept)."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        full = (slice(None),) + idx
        return Jet(self.value[full], self.grad[full], self.hess[full])

    def combine(self, coeffs) -> "Jet":
        """Linear combination over the (single) batch axis."""
        c = np.asarray(coeffs, dtype=float)
        return Jet(
            self.value @ c,
            np.einsum("kai,a->ki", self.grad, c),
            np.einsum("kaij,a->kij", self.hess, c),
        )

    @property
    def D2(self) -> np.ndarray:
        """The matrix D^2 f = Hess f + f * identity."""
        eye = np.eye(self.tangent_dim)
        return self.hess + self.value[..., None, None] * eye

    @property
    def laplacian(self) -> np.ndarray:
        return np.trace(self.hess, axis1=-2, axis2=-1)

    # -- arithmetic ----------------------------------------------------
    @staticmethod
    def _coerce(other, like: "Jet") -> "Jet":
        if isinstance(other, Jet):
            return other
        c = np.asarray(other, dtype=float)
        if c.ndim != 0:
            raise TypeError("only scalars and jets combine with a Jet")
        return constant_jet(float(c), like.value.shape[0], like.tangent_dim)

    def _align(self, other):
        other = Jet._coerce(other, self)
        nd = max(self.value.ndim, other.value.ndim)
        return self._expand(nd), other._expand(nd)

    def __add__(self, other):
        if np.isscalar(other):
            return Jet(self.value + other, self.grad, self.hess)
        a, b = self._align(other)
        return Jet(a.value + b.value, a.grad + b.grad, a.hess + b.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return Jet(self.value * other, self.grad * other, self.hess * other)
        a, b = self._align(other)
        va, vb = a.value[..., None], b.value[..., None]
        grad = a.grad * vb + va * b.grad
        cross = a.grad[..., :, None] * b.grad[..., None, :]
        hess = a.hess * vb[..., None] + b.hess * va[..., None] + cross + np.swapaxes(cross, -1, -2)
        return Jet(a.value * b.value, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if np.isscalar(other):
            return self * (1.0 / other)
        return self * Jet._coerce(other, self).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        p = float(p)
        if p == 1.0:
            return self
        if p == 2.0:
            return self * self
        v = self.value
        return self.apply(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    # -- chain rule ----------------------------------------------------
    def apply(self, f0, f1, f2) -> "Jet":
        """Compose with a scalar function given its value and two derivatives."""
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        grad = f1[..., None] * self.grad
        outer = self.grad[..., :, None] * self.grad[..., None, :]
        hess = f1[..., None, None] * self.hess + f2[..., None, None] * outer
        return Jet(f0, grad, hess)

    def reciprocal(self) -> "Jet":
        v = self.value
        return self.apply(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def sqrt(self) -> "Jet":
        r = np.sqrt(self.value)
        return self.apply(r, 0.5 / r, -0.25 / (r * self.value))

    def exp(self) -> "Jet":
        e = np.exp(self.value)
        return self.apply(e, e, e)

    def log(self) -> "Jet":
        v = self.value
        return self.apply(np.log(v), 1.0 / v, -1.0 / v**2)

    def __repr__(self) -> str:
        return f"Jet(nodes={self.value.shape[0]}, batch={self.batch_shape}, d={self.tangent_dim})"


def constant_jet(c: float, n_nodes: int, d: int) -> Jet:
    return Jet(np.full(n_nodes, float(c)), np.zeros((n_nodes, d)), np.zeros((n_nodes, d, d)))


def linear_jet(grid, xi) -> Jet:
    """Jet of theta -> <theta, xi>, restricted to the sphere.

    Its tangential gradient is the projection of xi onto the frame and its
    covariant Hessian is -<theta, xi> times the identity, so D^2 vanishes.
    Passing a matrix ``xi`` of shape (n, k) yields a batch of k functionals.
    """
    xi = np.asarray(xi, dtype=float)
    value = grid.nodes @ xi
    grad = np.einsum("kin,n...->k...i", grid.frame, xi)
    d = grid.dim - 1
    hess = -value[..., None, None] * np.eye(d)
    return Jet(value, grad, hess)
