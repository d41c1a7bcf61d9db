"""Metric parameterizations, Christoffel symbols and Ricci components.

Coordinates are ``x^0 = c t``, ``x^1 = w`` (cylindrical radius), ``x^2 = phi``
and ``x^3 = z``.  The stationary axisymmetric metric is carried either as the
potentials ``(F, A, K, Pi)`` of

    ds^2 = e^{2F} (c dt + A dphi)^2 - e^{-2F} [e^{2K} (dw^2 + dz^2) + Pi^2 dphi^2]

or as the functions ``(f, k, l, m)`` with

    g_00 = f,  g_02 = -k,  g_22 = -l,  g_11 = g_33 = -e^m.

Every routine accepts batched jets; the trailing array shape of the inputs is
carried through.  Nothing here depends on a grid.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from . import jets as J
from .errors import AxisSingularityError, InvalidJetError
from .jets import Jet

EPS_AXIS = 1e-10


@dataclass(frozen=True)
class Constants:
    """Speed of light and gravitational constant (geometrized by default)."""

    c: float = 1.0
    Ggrav: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and self.Ggrav > 0):
            raise ValueError("c and Ggrav must be strictly positive")

    @property
    def kappa(self) -> float:
        """Einstein coupling 8 pi G / c^4."""
        return 8 * np.pi * self.Ggrav / self.c**4


@dataclass
class MetricJet:
    """Lanczos potentials with first and second partials.

    Each attribute is a :class:`~astar.jets.Jet`; ``Pi`` has length units.
    """

    F: Jet
    A: Jet
    K: Jet
    Pi: Jet

    @classmethod
    def from_derivatives(cls, F, A, K, Pi):
        """Build from tuples ``(value, (d1, d3), (d11, d13, d33))``."""
        return cls(*(Jet.from_parts(*x) for x in (F, A, K, Pi)))

    @classmethod
    def minkowski(cls, w, z=0.0):
        w = np.asarray(w, dtype=float)
        zero = np.zeros(np.broadcast(w, np.asarray(z)).shape)
        return cls(Jet(zero), Jet(zero), Jet(zero), Jet(w + zero, 1.0))

    # flat-array views matching the usual (value, grad, hess) naming
    dF = property(lambda s: s.F.grad)
    dA = property(lambda s: s.A.grad)
    dK = property(lambda s: s.K.grad)
    dPi = property(lambda s: s.Pi.grad)
    d2F = property(lambda s: s.F.hess)
    d2A = property(lambda s: s.A.hess)
    d2K = property(lambda s: s.K.hess)
    d2Pi = property(lambda s: s.Pi.hess)

    def validate(self, eps_axis: float = EPS_AXIS) -> "MetricJet":
        for f in fields(self):
            if not getattr(self, f.name).is_finite():
                raise InvalidJetError(f"non-finite entries in {f.name}")
        check_off_axis(self.Pi.v, eps_axis)
        return self

    def take(self, idx) -> "MetricJet":
        return MetricJet(self.F.take(idx), self.A.take(idx), self.K.take(idx), self.Pi.take(idx))


def check_off_axis(Pi, eps_axis: float = EPS_AXIS):
    bad = ~(np.asarray(Pi) > eps_axis)
    if np.any(bad):
        loc = tuple(int(i) for i in np.argwhere(bad)[0]) if np.ndim(Pi) else None
        raise AxisSingularityError(f"Pi <= {eps_axis:g} (axis) at index {loc}")


@dataclass
class LewisState:
    """Lewis functions (f, k, l, m) as jets; Pi is derived from them."""

    f: Jet
    k: Jet
    l: Jet
    m: Jet

    @property
    def Pi2(self):
        return self.f.v * self.l.v + self.k.v**2

    @property
    def Pi(self) -> Jet:
        """Pi = sqrt(f l + k^2) with derivatives."""
        pi2 = self.f * self.l + self.k * self.k
        if np.any(~(pi2.v > 0)):
            raise AxisSingularityError("f l + k^2 <= 0: degenerate Lewis state")
        return J.sqrt(pi2)


def lanczos_to_lewis(jet: MetricJet) -> LewisState:
    """Convert Lanczos potentials to Lewis functions, derivatives included."""
    for name in ("F", "A", "K", "Pi"):
        if not getattr(jet, name).is_finite():
            raise InvalidJetError(f"non-finite entries in {name}")
    e2F = J.exp(2 * jet.F)
    f = e2F
    k = -e2F * jet.A
    l = -e2F * jet.A * jet.A + J.exp(-2 * jet.F) * jet.Pi * jet.Pi
    m = 2 * (jet.K - jet.F)
    return LewisState(f, k, l, m)


def lewis_to_lanczos(ls: LewisState) -> MetricJet:
    """Inverse of :func:`lanczos_to_lewis`."""
    if np.any(~(ls.f.v > 0)):
        raise InvalidJetError("f must be positive")
    F = 0.5 * J.log(ls.f)
    A = -ls.k / ls.f
    K = 0.5 * ls.m + F
    return MetricJet(F, A, K, ls.Pi)


def metric_components(jet: MetricJet, constants: Constants | None = None):
    """Covariant and contravariant metric, each of shape ``(4, 4, *batch)``.

    ``constants`` is accepted for interface symmetry; with ``x^0 = c t`` the
    components do not involve c.
    """
    check_off_axis(jet.Pi.v)
    F, A, K, Pi = jet.F.v, jet.A.v, jet.K.v, jet.Pi.v
    F, A, K, Pi = np.broadcast_arrays(F, A, K, Pi)
    e2F, em2F = np.exp(2 * F), np.exp(-2 * F)
    g = np.zeros((4, 4) + F.shape)
    gi = np.zeros_like(g)
    g[0, 0] = e2F
    g[0, 2] = g[2, 0] = e2F * A
    g[1, 1] = g[3, 3] = -np.exp(2 * K - 2 * F)
    g[2, 2] = e2F * A**2 - em2F * Pi**2
    gi[0, 0] = -(e2F * A**2 - em2F * Pi**2) / Pi**2
    gi[0, 2] = gi[2, 0] = e2F * A / Pi**2
    gi[1, 1] = gi[3, 3] = -np.exp(2 * F - 2 * K)
    gi[2, 2] = -e2F / Pi**2
    return g, gi


def _sym(G, mu, a, b, val):
    G[mu, a, b] = val
    G[mu, b, a] = val


def christoffel_lanczos(jet: MetricJet) -> np.ndarray:
    """Christoffel symbols ``Gamma[mu, nu, lam, ...]`` from Lanczos potentials."""
    check_off_axis(jet.Pi.v)
    F, A, K, P = jet.F, jet.A, jet.K, jet.Pi
    shape = np.broadcast(*F.parts(), *A.parts(), *K.parts(), *P.parts()).shape
    G = np.zeros((4, 4, 4) + shape)
    e2F, e4F = np.exp(2 * F.v), np.exp(4 * F.v)
    e2F2K = np.exp(2 * F.v - 2 * K.v)
    Pi, A0 = P.v, A.v
    for j in (1, 3):
        Fj, Aj, Kj, Pj = F.d(j), A.d(j), K.d(j), P.d(j)
        _sym(G, 0, 0, j, e4F * A0 * Aj / (2 * Pi**2) + Fj)
        # the simplified closed form keeps the e^{4F} A^2 A_j / (2 Pi^2) piece
        _sym(G, 0, 2, j, 0.5 * Aj + e4F * A0**2 * Aj / (2 * Pi**2) + 2 * A0 * Fj - A0 * Pj / Pi)
        G[j, 0, 0] = e2F2K * e2F * Fj
        _sym(G, j, 0, 2, 0.5 * e2F2K * e2F * (2 * Fj * A0 + Aj))
        G[j, 2, 2] = 0.5 * e2F2K * (
            e2F * (2 * Fj * A0**2 + 2 * A0 * Aj) + (2 * Fj * Pi**2 - 2 * Pi * Pj) / e2F
        )
        _sym(G, 2, 0, j, -e4F * Aj / (2 * Pi**2))
        _sym(G, 2, 2, j, -e4F * A0 * Aj / (2 * Pi**2) - Fj + Pj / Pi)
    # (w, z) block of the conformally flat 2-metric e^{2(K-F)}
    s1, s3 = K.d1 - F.d1, K.d3 - F.d3
    G[1, 1, 1] = s1
    _sym(G, 1, 1, 3, s3)
    G[1, 3, 3] = -s1
    G[3, 1, 1] = -s3
    _sym(G, 3, 1, 3, s1)
    G[3, 3, 3] = s3
    return G


def christoffel_lewis(ls: LewisState) -> np.ndarray:
    """Christoffel symbols from Lewis functions."""
    f, k, l, m = ls.f, ls.k, ls.l, ls.m
    pi2 = ls.Pi2
    if np.any(~(pi2 > 0)):
        raise AxisSingularityError("f l + k^2 <= 0: degenerate Lewis state")
    shape = np.broadcast(*f.parts(), *k.parts(), *l.parts(), *m.parts()).shape
    G = np.zeros((4, 4, 4) + shape)
    em = np.exp(-m.v)
    for j in (1, 3):
        fj, kj, lj = f.d(j), k.d(j), l.d(j)
        _sym(G, 0, 0, j, (l.v * fj + k.v * kj) / (2 * pi2))
        _sym(G, 0, 2, j, (k.v * lj - l.v * kj) / (2 * pi2))
        G[j, 0, 0] = 0.5 * em * fj
        _sym(G, j, 0, 2, -0.5 * em * kj)
        G[j, 2, 2] = -0.5 * em * lj
        _sym(G, 2, 0, j, (f.v * kj - k.v * fj) / (2 * pi2))
        _sym(G, 2, 2, j, (f.v * lj + k.v * kj) / (2 * pi2))
    G[1, 1, 1] = 0.5 * m.d1
    _sym(G, 1, 1, 3, 0.5 * m.d3)
    G[1, 3, 3] = -0.5 * m.d1
    G[3, 1, 1] = -0.5 * m.d3
    _sym(G, 3, 1, 3, 0.5 * m.d1)
    G[3, 3, 3] = 0.5 * m.d3
    return G


def christoffel_from_metric(gi: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Generic Christoffel symbols from ``g^{-1}`` and ``dg[a] = d_a g``.

    ``dg`` has shape ``(4, 4, 4, *batch)`` with the derivative index first.
    """
    # Gamma^mu_{nu lam} = 1/2 g^{mu a} (d_lam g_{a nu} + d_nu g_{a lam} - d_a g_{nu lam})
    t = np.einsum("lan...->anl...", dg) + np.einsum("nal...->anl...", dg) - dg
    return 0.5 * np.einsum("ma...,anl...->mnl...", gi, t)


def sigma(ls: LewisState):
    """Sum over j of d_j f d_j l + (d_j k)^2."""
    return sum(ls.f.d(j) * ls.l.d(j) + ls.k.d(j) ** 2 for j in (1, 3))


def sigma_from_lanczos(jet: MetricJet):
    """The same quantity written in Lanczos potentials."""
    e4F = np.exp(4 * jet.F.v)
    P = jet.Pi.v
    return sum(
        e4F * jet.A.d(j) ** 2 - 4 * jet.F.d(j) ** 2 * P**2 + 4 * P * jet.Pi.d(j) * jet.F.d(j)
        for j in (1, 3)
    )


@dataclass
class RicciComponents:
    """The six structurally nonzero Ricci components R_{mu nu}."""

    R00: np.ndarray
    R02: np.ndarray
    R22: np.ndarray
    R11: np.ndarray
    R33: np.ndarray
    R13: np.ndarray

    NAMES = ("R00", "R02", "R22", "R11", "R33", "R13")
    INDEX = ((0, 0), (0, 2), (2, 2), (1, 1), (3, 3), (1, 3))

    def as_array(self):
        return np.stack(np.broadcast_arrays(*(getattr(self, n) for n in self.NAMES)))

    @classmethod
    def from_tensor(cls, R):
        return cls(*(R[i, j] for i, j in cls.INDEX))


def _div_term(g: Jet, Pi: Jet):
    """sum_j d_j (d_j g / Pi)."""
    P = Pi.v
    return (g.d11 + g.d33) / P - (g.d1 * Pi.d1 + g.d3 * Pi.d3) / P**2


def ricci_closed_form(ls: LewisState) -> RicciComponents:
    """Ricci components of the stationary axisymmetric metric in Lewis form."""
    Pi = ls.Pi
    check_off_axis(Pi.v)
    P = Pi.v
    f, k, l, m = ls.f, ls.k, ls.l, ls.m
    sig = sigma(ls)
    half_em = 0.5 * P * np.exp(-m.v)

    def X(g):
        return _div_term(g, Pi) + g.v * sig / P**3

    R00 = half_em * X(f)
    R02 = -half_em * X(k)
    R22 = -half_em * X(l)
    lap_m = m.d11 + m.d33
    cross = (m.d1 * Pi.d1 - m.d3 * Pi.d3) / P
    R11 = 0.5 * (-lap_m - 2 * Pi.d11 / P + cross + (f.d1 * l.d1 + k.d1**2) / P**2)
    R33 = 0.5 * (-lap_m - 2 * Pi.d33 / P - cross + (f.d3 * l.d3 + k.d3**2) / P**2)
    R13 = 0.5 * (
        -2 * Pi.d13 / P
        + (m.d3 * Pi.d1 + m.d1 * Pi.d3) / P
        + (f.d1 * l.d3 + l.d1 * f.d3 + 2 * k.d1 * k.d3) / (2 * P**2)
    )
    return RicciComponents(R00, R02, R22, R11, R33, R13)


def ricci_from_jet(jet: MetricJet) -> RicciComponents:
    return ricci_closed_form(lanczos_to_lewis(jet))


# ---------------------------------------------------------------------------
# finite-difference oracle

MetricSampler = Callable[[np.ndarray, np.ndarray], tuple]


def _metric_from_sample(sampler, w, z):
    F, A, K, Pi = (np.asarray(x, dtype=float) for x in sampler(w, z))
    return metric_components(MetricJet(Jet(F), Jet(A), Jet(K), Jet(Pi)))


def _fd_christoffel(sampler, w, z, h):
    g, gi = _metric_from_sample(sampler, w, z)
    gwp, _ = _metric_from_sample(sampler, w + h, z)
    gwm, _ = _metric_from_sample(sampler, w - h, z)
    gzp, _ = _metric_from_sample(sampler, w, z + h)
    gzm, _ = _metric_from_sample(sampler, w, z - h)
    dg = np.zeros((4,) + g.shape)
    dg[1] = (gwp - gwm) / (2 * h)
    dg[3] = (gzp - gzm) / (2 * h)
    return christoffel_from_metric(gi, dg)


def ricci_tensor_brute_force(sampler: MetricSampler, point, h: float = 1e-4) -> np.ndarray:
    """Full 4x4 Ricci tensor by central differences of the sampled metric.

    Parameters
    ----------
    sampler : callable
        ``sampler(w, z) -> (F, A, K, Pi)`` returning plain values.
    point : (w, z)
    h : float
        Finite-difference step used for every derivative.

    Notes
    -----
    Christoffels at the five stencil points use their own central
    differences, so the overall stencil spans ``2 h`` in each direction.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    w, z = (np.asarray(p, dtype=float) for p in point)
    Gc = _fd_christoffel(sampler, w, z, h)
    dG = np.zeros((4,) + Gc.shape)
    dG[1] = (_fd_christoffel(sampler, w + h, z, h) - _fd_christoffel(sampler, w - h, z, h)) / (2 * h)
    dG[3] = (_fd_christoffel(sampler, w, z + h, h) - _fd_christoffel(sampler, w, z - h, h)) / (2 * h)
    # R_{mn} = d_a G^a_{mn} - d_n G^a_{ma} + G^a_{mn} G^b_{ab} - G^b_{ma} G^a_{nb}
    R = (
        np.einsum("aamn...->mn...", dG)
        - np.einsum("nama...->mn...", dG)
        + np.einsum("amn...,bab...->mn...", Gc, Gc)
        - np.einsum("bma...,anb...->mn...", Gc, Gc)
    )
    return R


def ricci_brute_force(sampler: MetricSampler, point, h: float = 1e-4, richardson: bool = False) -> RicciComponents:
    """Six Ricci components from the finite-difference oracle.

    With ``richardson=True`` the steps ``h`` and ``2 h`` are combined to cancel
    the leading ``h^2`` error term.
    """
    R = ricci_tensor_brute_force(sampler, point, h)
    if richardson:
        R = (4 * R - ricci_tensor_brute_force(sampler, point, 2 * h)) / 3
    return RicciComponents.from_tensor(R)


def covariant_divergence_brute_force(sampler: MetricSampler, tensor_sampler, point, h: float = 1e-4):
    """nabla_mu T^{mu nu} by central differences.

    ``tensor_sampler(w, z)`` returns the contravariant tensor ``T^{mu nu}`` with
    shape ``(4, 4, *batch)``.
    """
    w, z = (np.asarray(p, dtype=float) for p in point)
    Gc = _fd_christoffel(sampler, w, z, h)
    T = np.asarray(tensor_sampler(w, z))
    dT1 = (np.asarray(tensor_sampler(w + h, z)) - np.asarray(tensor_sampler(w - h, z))) / (2 * h)
    dT3 = (np.asarray(tensor_sampler(w, z + h)) - np.asarray(tensor_sampler(w, z - h))) / (2 * h)
    div = dT1[1] + dT3[3]
    div = div + np.einsum("mam...,an...->n...", Gc, T) + np.einsum("nma...,ma...->n...", Gc, T)
    return div
