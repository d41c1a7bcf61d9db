"""Equation of state, enthalpy, four-velocity and perfect-fluid stress-energy.

The barotropic law is ``P = A rho^gamma (1 + Y(A rho^{gamma-1} / c^2))`` with
``Y`` a polynomial vanishing at 0.  Dust has ``P = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, optimize

from . import jets as J
from .errors import CausalityViolationError, CausalLimitError, EosRangeError, QuadratureError
from .jets import Jet
from .tensor_core import Constants, MetricJet, lanczos_to_lewis, metric_components


@dataclass(frozen=True)
class EosSpec:
    """Barotropic (or dust) equation of state.

    Parameters
    ----------
    kind : {"barotropic", "dust"}
    gamma : float
        Adiabatic exponent, 1 < gamma < 2.
    Acoef : float
        Polytropic constant, > 0.
    upsilon : tuple of float
        Coefficients ``(a1, a2, ...)`` of ``Y(y) = a1 y + a2 y^2 + ...``.
    """

    kind: str = "barotropic"
    gamma: float = 5.0 / 3.0
    Acoef: float = 1.0
    upsilon: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in ("barotropic", "dust"):
            raise ValueError(f"unknown EOS kind {self.kind!r}")
        if self.kind == "barotropic":
            if not 1.0 < self.gamma < 2.0:
                raise ValueError("gamma must satisfy 1 < gamma < 2")
            if not self.Acoef > 0:
                raise ValueError("Acoef must be positive")
        object.__setattr__(self, "upsilon", tuple(float(a) for a in self.upsilon))

    def _ups(self, y):
        """Y(y) and Y'(y)."""
        y = np.asarray(y, dtype=float)
        Y = np.zeros_like(y)
        dY = np.zeros_like(y)
        for n, a in enumerate(self.upsilon, start=1):
            Y = Y + a * y**n
            dY = dY + n * a * y ** (n - 1)
        return Y, dY

    def y_of_rho(self, rho, c):
        return self.Acoef * np.asarray(rho, dtype=float) ** (self.gamma - 1) / c**2

    def rho_of_y(self, y, c):
        return (c**2 * np.asarray(y, dtype=float) / self.Acoef) ** (1.0 / (self.gamma - 1))

    def sound_speed2_over_c2(self, y):
        """(dP/drho) / c^2 as a function of y."""
        Y, dY = self._ups(y)
        return y * (self.gamma * (1 + Y) + (self.gamma - 1) * y * dY)

    def causal_ymax(self) -> float:
        """Largest y for which the sound speed stays below c (and P > 0)."""
        if not self.upsilon:
            return 1.0 / self.gamma
        ys = np.geomspace(1e-12, 1e3, 4000)
        Y, _ = self._ups(ys)
        cs = self.sound_speed2_over_c2(ys)
        bad = (cs >= 1) | (cs <= 0) | (1 + Y <= 0)
        if not bad.any():
            return float(ys[-1])
        i = int(np.argmax(bad))
        if i == 0:
            raise CausalityViolationError("EOS is acausal arbitrarily close to rho = 0")
        lo, hi = ys[i - 1], ys[i]
        g = lambda y: min(1 - self.sound_speed2_over_c2(y), 1 + self._ups(y)[0], self.sound_speed2_over_c2(y))
        return float(optimize.brentq(g, lo, hi, xtol=1e-15)) if g(hi) < 0 else float(lo)


def eos_pressure(rho, spec: EosSpec, constants: Constants = Constants()):
    """Pressure and dP/drho.

    Raises
    ------
    CausalityViolationError
        Barotropic law with ``dP/drho`` outside ``(0, c^2)`` at positive rho.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    if spec.kind == "dust":
        return np.zeros_like(rho), np.zeros_like(rho)
    c = constants.c
    y = spec.y_of_rho(rho, c)
    Y, _ = spec._ups(y)
    P = spec.Acoef * rho**spec.gamma * (1 + Y)
    cs2 = spec.sound_speed2_over_c2(y)
    dP = c**2 * cs2
    pos = rho > 0
    if np.any(pos & ((cs2 <= 0) | (cs2 >= 1))):
        bad = np.argwhere(pos & ((cs2 <= 0) | (cs2 >= 1)))[0]
        raise CausalityViolationError(f"dP/drho outside (0, c^2) at index {tuple(bad)}")
    return P, dP


def _du_dy(y, spec: EosSpec, c):
    Y, dY = spec._ups(y)
    g = spec.gamma
    return c**2 * (g * (1 + Y) + (g - 1) * y * dY) / ((g - 1) * (1 + y + y * Y))


def _enthalpy_scalar(rho, spec, c):
    if rho == 0.0:
        return 0.0
    y = float(spec.y_of_rho(rho, c))
    val, err, info = integrate.quad(_du_dy, 0.0, y, args=(spec, c), epsabs=1e-12, epsrel=1e-13, full_output=True)[:3]
    if err > 1e-9 * (1 + abs(val)):
        raise QuadratureError(f"enthalpy quadrature error {err:.3g} at rho={rho!r}")
    return val


def enthalpy_u(rho, spec: EosSpec, constants: Constants = Constants()):
    """Relativistic enthalpy ``u = int_0^rho dP / (s + P(s)/c^2)``.

    The integral is evaluated after the substitution ``y = A s^{gamma-1}/c^2``,
    which removes the integrable singularity at s = 0.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    if spec.kind == "dust":
        return np.zeros_like(rho)
    c = constants.c
    out = np.array([_enthalpy_scalar(float(r), spec, c) for r in rho.ravel()])
    return out.reshape(rho.shape) if rho.ndim else float(out[0])


def rho_max(spec: EosSpec, constants: Constants = Constants()) -> float:
    """Density at which the EOS reaches the causal limit."""
    return float(spec.rho_of_y(spec.causal_ymax(), constants.c))


def rho_from_u(u, spec: EosSpec, constants: Constants = Constants()):
    """Invert :func:`enthalpy_u` by bracketing root-finding."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("u must be non-negative")
    if spec.kind == "dust":
        raise EosRangeError("dust has u = 0 for every density; u cannot be inverted")
    c = constants.c
    ymax = spec.causal_ymax() * (1 - 1e-12)
    umax = integrate.quad(_du_dy, 0.0, ymax, args=(spec, c), epsabs=1e-12, epsrel=1e-13)[0]
    out = np.empty(u.size)
    for i, ui in enumerate(u.ravel()):
        if ui == 0.0:
            out[i] = 0.0
            continue
        if ui >= umax:
            raise EosRangeError(f"u={ui!r} beyond causal range (max {umax:.6g})")
        yi = optimize.brentq(
            lambda y: integrate.quad(_du_dy, 0.0, y, args=(spec, c), epsabs=1e-13, epsrel=1e-14)[0] - ui,
            0.0, ymax, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200,
        )
        out[i] = spec.rho_of_y(yi, c)
    return out.reshape(u.shape) if u.ndim else float(out[0])


class EnthalpyTable:
    """Tabulated ``u(y)`` with spline inversion for vectorized solver use.

    Node values of ``u`` come from adaptive quadrature on each table interval,
    so the table error is dominated by the spline (fourth order in the node
    spacing).  The table is immutable after construction.
    """

    def __init__(self, spec: EosSpec, constants: Constants = Constants(), y_top=None, n=4097):
        if spec.kind == "dust":
            raise EosRangeError("dust has no enthalpy table")
        self.spec, self.constants = spec, constants
        c = constants.c
        ymax = spec.causal_ymax() * (1 - 1e-9)
        y_top = ymax if y_top is None else min(float(y_top), ymax)
        # sqrt spacing resolves the linear start of u(y) and keeps the inverse smooth
        s = np.linspace(0.0, 1.0, n)
        ys = y_top * s**2
        # 10-point Gauss-Legendre per interval: the integrand is analytic on [0, y_top]
        xg, wg = np.polynomial.legendre.leggauss(10)
        a, b = ys[:-1, None], ys[1:, None]
        yq = 0.5 * (a + b) + 0.5 * (b - a) * xg
        du = 0.5 * (b - a)[:, 0] * (_du_dy(yq, spec, c) @ wg)
        us = np.concatenate([[0.0], np.cumsum(du)])
        self.y_nodes, self.u_nodes = ys, us
        self.u_max = float(us[-1])
        # u(y) has u'(0) > 0, so y(u) is smooth and splines well in either direction
        self._inv = interpolate.CubicSpline(us, ys)
        self._fwd = interpolate.CubicSpline(ys, us)

    def y_from_u(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u > self.u_max):
            raise EosRangeError(f"u={float(np.max(u))!r} beyond tabulated range {self.u_max:.6g}")
        return np.where(u > 0, self._inv(np.clip(u, 0.0, None)), 0.0)

    def rho_from_u(self, u):
        return self.spec.rho_of_y(self.y_from_u(u), self.constants.c)

    def u_from_rho(self, rho):
        y = self.spec.y_of_rho(rho, self.constants.c)
        if np.any(y > self.y_nodes[-1]):
            raise EosRangeError("density beyond tabulated range")
        return np.where(y > 0, self._fwd(y), 0.0)


@dataclass
class FluidPoint:
    """Fluid state at one or many points.

    ``Omega`` is a :class:`~astar.jets.Jet` so that its partials are
    available; use ``Jet.const`` for rigid rotation.
    """

    rho: np.ndarray
    P: np.ndarray
    eps: np.ndarray
    u: np.ndarray
    Omega: Jet

    @property
    def dOmega(self):
        return self.Omega.grad

    @classmethod
    def vacuum(cls, Omega=0.0, shape=()):
        z = np.zeros(shape)
        return cls(z, z, z, z, Jet.lift(Omega))

    @classmethod
    def from_rho(cls, rho, spec: EosSpec, constants: Constants = Constants(), Omega=0.0, u=None):
        rho = np.asarray(rho, dtype=float)
        P, _ = eos_pressure(rho, spec, constants)
        if u is None:
            u = enthalpy_u(rho, spec, constants) if spec.kind == "barotropic" else np.zeros_like(rho)
        return cls(rho, P, constants.c**2 * rho, np.asarray(u, dtype=float), Jet.lift(Omega))


@dataclass
class FourVelocity:
    U_upper: np.ndarray
    U_lower: np.ndarray
    G: np.ndarray


def lorentz_G(jet: MetricJet, Omega, constants: Constants = Constants()) -> Jet:
    """Log Lorentz factor G with partials (from those of the metric and Omega).

    Raises
    ------
    CausalLimitError
        The rotating world line is not timelike somewhere.
    """
    om = Jet.lift(Omega) / constants.c
    e2F = J.exp(2 * jet.F)
    one = 1.0 + om * jet.A
    e2G = e2F * one * one - om * om * jet.Pi * jet.Pi / e2F
    bad = ~(e2G.v > 0)
    if np.any(bad):
        loc = tuple(int(i) for i in np.argwhere(bad)[0]) if np.ndim(e2G.v) else None
        raise CausalLimitError(f"timelike condition fails (e^2G <= 0) at index {loc}", location=loc)
    return 0.5 * J.log(e2G)


def u0u2(jet: MetricJet, Omega, constants: Constants = Constants()):
    """Product U^0 U_2 (the rotation-coupling factor in the Euler equations)."""
    om = np.asarray(Jet.lift(Omega).v) / constants.c
    F, A, Pi = jet.F.v, jet.A.v, jet.Pi.v
    G = lorentz_G(jet, Omega, constants).v
    return np.exp(2 * F - 2 * G) * (A * (1 + om * A) - np.exp(-4 * F) * om * Pi**2)


def four_velocity(jet: MetricJet, Omega, constants: Constants = Constants()) -> FourVelocity:
    om = np.asarray(Jet.lift(Omega).v) / constants.c
    G = lorentz_G(jet, Omega, constants).v
    F, A, Pi = jet.F.v, jet.A.v, jet.Pi.v
    F, A, Pi, om, G = np.broadcast_arrays(F, A, Pi, om, G)
    U0 = np.exp(-G)
    zero = np.zeros_like(U0)
    Uu = np.stack([U0, zero, om * U0, zero])
    Ul = np.stack([
        np.exp(2 * F - G) * (1 + om * A),
        zero,
        np.exp(2 * F - G) * (A * (1 + om * A) - np.exp(-4 * F) * om * Pi**2),
        zero,
    ])
    return FourVelocity(Uu, Ul, G)


@dataclass
class StressEnergy:
    T_upper: np.ndarray
    T_lower: np.ndarray
    S_lower: np.ndarray
    trace: np.ndarray


def stress_energy(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()) -> StressEnergy:
    """Perfect-fluid T^{mu nu}, T_{mu nu}, S_{mu nu} = T_{mu nu} - g_{mu nu} T / 2 and T."""
    g, gi = metric_components(jet, constants)
    U = four_velocity(jet, fluid.Omega, constants)
    h = fluid.eps + fluid.P
    Tu = h * np.einsum("m...,n...->mn...", U.U_upper, U.U_upper) - fluid.P * gi
    Tl = h * np.einsum("m...,n...->mn...", U.U_lower, U.U_lower) - fluid.P * g
    tr = np.einsum("ab...,ab...->...", g, Tu)
    S = Tl - 0.5 * g * tr
    return StressEnergy(Tu, Tl, S, tr)


def source_components(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()):
    """Closed-form S_00, S_02, S_22, S_11 (= S_33) in Lewis variables.

    Independent of :func:`stress_energy`; used to cross-check it.
    """
    ls = lanczos_to_lewis(jet)
    f, k, l, m = ls.f.v, ls.k.v, ls.l.v, ls.m.v
    om = np.asarray(fluid.Omega.v) / constants.c
    e2G = f - 2 * om * k - om**2 * l
    pi2 = f * l + k**2
    h = 0.5 * (fluid.eps + fluid.P) / e2G
    P = fluid.P
    S00 = h * ((f - om * k) ** 2 + om**2 * pi2) + P * f
    S02 = h * (-k * f - 2 * om * f * l + om**2 * k * l) - P * k
    S22 = h * (pi2 + (k + om * l) ** 2) - P * l
    S11 = 0.5 * np.exp(m) * (fluid.eps - P)
    return S00, S02, S22, S11


def euler_residual(jet: MetricJet, fluid: FluidPoint, dP, constants: Constants = Constants()):
    """Meridional Euler residuals ``(res1, res3)``.

    ``res_j = d_j P + (eps + P) d_j G - (eps + P) U^0 U_2 d_j Omega / c``,
    with d_j G taken from the jets of the metric and Omega.
    """
    G = lorentz_G(jet, fluid.Omega, constants)
    h = fluid.eps + fluid.P
    w = u0u2(jet, fluid.Omega, constants)
    c = constants.c
    return tuple(dP[i] + h * G.d(j) - h * w * fluid.Omega.d(j) / c for i, j in enumerate((1, 3)))


def first_integral_residual(fluid: FluidPoint, G, const_value, constants: Constants = Constants()):
    """``u / c^2 + G - const``; meaningful only where rho > 0."""
    G = G.v if isinstance(G, Jet) else G
    return fluid.u / constants.c**2 + G - const_value
