"""Second-order jets of scalar fields on the meridional (w, z) plane.

A :class:`Jet` carries a value together with its first and second partial
derivatives with respect to ``w`` (index 1) and ``z`` (index 3).  Arithmetic on
jets applies the product and chain rules, so composite expressions like
``exp(2 F) * A`` come with exact derivatives.  All components may be numpy
arrays of a common (broadcastable) shape, so one jet can describe a whole
grid of points at once.
"""
from __future__ import annotations

import numpy as np

_FIELDS = ("v", "d1", "d3", "d11", "d13", "d33")


class Jet:
    """Value, gradient and Hessian of a scalar field.

    Parameters
    ----------
    v : array_like
        Value.
    d1, d3 : array_like
        First partials along w and z.
    d11, d13, d33 : array_like
        Second partials.
    """

    __slots__ = _FIELDS
    __array_priority__ = 100

    def __init__(self, v, d1=0.0, d3=0.0, d11=0.0, d13=0.0, d33=0.0):
        self.v = np.asarray(v, dtype=float)
        self.d1 = np.asarray(d1, dtype=float)
        self.d3 = np.asarray(d3, dtype=float)
        self.d11 = np.asarray(d11, dtype=float)
        self.d13 = np.asarray(d13, dtype=float)
        self.d33 = np.asarray(d33, dtype=float)

    # -- construction -------------------------------------------------
    @classmethod
    def const(cls, v):
        return cls(v)

    @classmethod
    def from_parts(cls, value, grad=(0.0, 0.0), hess=(0.0, 0.0, 0.0)):
        """Build from ``value``, ``(d1, d3)`` and ``(d11, d13, d33)``."""
        return cls(value, grad[0], grad[1], hess[0], hess[1], hess[2])

    @staticmethod
    def lift(x) -> "Jet":
        return x if isinstance(x, Jet) else Jet(x)

    # -- accessors ----------------------------------------------------
    @property
    def grad(self):
        return (self.d1, self.d3)

    @property
    def hess(self):
        return (self.d11, self.d13, self.d33)

    @property
    def lap(self):
        """Flat two-dimensional Laplacian d11 + d33."""
        return self.d11 + self.d33

    def d(self, j):
        """First partial along coordinate index ``j`` in {1, 3}."""
        return self.d1 if j == 1 else self.d3

    def dd(self, i, j):
        """Second partial for coordinate indices ``i, j`` in {1, 3}."""
        if i == 1 and j == 1:
            return self.d11
        if i == 3 and j == 3:
            return self.d33
        return self.d13

    def parts(self):
        return tuple(getattr(self, f) for f in _FIELDS)

    def is_finite(self) -> bool:
        return all(bool(np.all(np.isfinite(p))) for p in self.parts())

    def take(self, idx) -> "Jet":
        """Index every component (after broadcasting) with ``idx``."""
        arrs = np.broadcast_arrays(*self.parts())
        return Jet(*(a[idx] for a in arrs))

    def broadcast(self) -> "Jet":
        return Jet(*(np.array(a) for a in np.broadcast_arrays(*self.parts())))

    def __repr__(self):
        return f"Jet(v={self.v!r}, d1={self.d1!r}, d3={self.d3!r})"

    # -- arithmetic ---------------------------------------------------
    def __neg__(self):
        return Jet(*(-p for p in self.parts()))

    def __add__(self, o):
        if not isinstance(o, Jet):
            return Jet(self.v + o, self.d1, self.d3, self.d11, self.d13, self.d33)
        return Jet(*(a + b for a, b in zip(self.parts(), o.parts())))

    __radd__ = __add__

    def __sub__(self, o):
        return self + (-Jet.lift(o))

    def __rsub__(self, o):
        return Jet.lift(o) - self

    def __mul__(self, o):
        if not isinstance(o, Jet):
            return Jet(*(p * o for p in self.parts()))
        a, b = self, o
        return Jet(
            a.v * b.v,
            a.d1 * b.v + a.v * b.d1,
            a.d3 * b.v + a.v * b.d3,
            a.d11 * b.v + 2 * a.d1 * b.d1 + a.v * b.d11,
            a.d13 * b.v + a.d1 * b.d3 + a.d3 * b.d1 + a.v * b.d13,
            a.d33 * b.v + 2 * a.d3 * b.d3 + a.v * b.d33,
        )

    __rmul__ = __mul__

    def __truediv__(self, o):
        if not isinstance(o, Jet):
            return self * (1.0 / np.asarray(o, dtype=float))
        return self * o.reciprocal()

    def __rtruediv__(self, o):
        return Jet.lift(o) * self.reciprocal()

    def __pow__(self, p):
        p = float(p)
        if p == 2.0:
            return self * self
        v = self.v
        return self._chain(v**p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def _chain(self, f0, f1, f2):
        """Apply a scalar function given its value and first two derivatives."""
        return Jet(
            f0,
            f1 * self.d1,
            f1 * self.d3,
            f2 * self.d1 * self.d1 + f1 * self.d11,
            f2 * self.d1 * self.d3 + f1 * self.d13,
            f2 * self.d3 * self.d3 + f1 * self.d33,
        )

    def reciprocal(self):
        r = 1.0 / self.v
        return self._chain(r, -r * r, 2 * r * r * r)


def exp(u: Jet) -> Jet:
    e = np.exp(u.v)
    return u._chain(e, e, e)


def log(u: Jet) -> Jet:
    r = 1.0 / u.v
    return u._chain(np.log(u.v), r, -r * r)


def sqrt(u: Jet) -> Jet:
    s = np.sqrt(u.v)
    return u._chain(s, 0.5 / s, -0.25 / (s * u.v))


def dot_grad(a: Jet, b: Jet):
    """Flat inner product of gradients, sum_j d_j a * d_j b."""
    return a.d1 * b.d1 + a.d3 * b.d3
