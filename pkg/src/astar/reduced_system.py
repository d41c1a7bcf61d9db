"""Residuals of the reduced field equations and of the full Einstein equations.

The reduced system replaces the six Einstein equations by three second-order
equations for ``F, A, Pi``, two first-order equations for ``K`` and the first
integral of the Euler equations.  Residuals are always ``LHS - RHS``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, fields

import numpy as np

from .errors import GaugeDegeneracyError, HypothesisWarning
from .jets import Jet
from .matter import FluidPoint, lorentz_G, stress_energy
from .tensor_core import Constants, MetricJet, check_off_axis, lanczos_to_lewis, ricci_from_jet


@dataclass
class ReducedResiduals:
    """Residuals of the reduced system and the resolved K-gradient targets."""

    rF: np.ndarray
    rA: np.ndarray
    rPi: np.ndarray
    rKd: np.ndarray
    rKe: np.ndarray
    kt1: np.ndarray
    kt3: np.ndarray
    RHd: np.ndarray
    RHe: np.ndarray

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class EinsteinResiduals:
    """Q_{mu nu} = R_{mu nu} - kappa S_{mu nu} for the six nonzero families."""

    Q00: np.ndarray
    Q02: np.ndarray
    Q22: np.ndarray
    Q11: np.ndarray
    Q33: np.ndarray
    Q13: np.ndarray

    NAMES = ("Q00", "Q02", "Q22", "Q11", "Q33", "Q13")

    def as_dict(self):
        return {n: getattr(self, n) for n in self.NAMES}


def check_gauge(Pi: Jet, tiny: float = 1e-300):
    g2 = Pi.d1**2 + Pi.d3**2
    bad = ~(g2 > tiny)
    if np.any(bad):
        loc = tuple(int(i) for i in np.argwhere(bad)[0]) if np.ndim(g2) else None
        raise GaugeDegeneracyError(f"grad Pi vanishes at index {loc}", location=loc)
    return g2


def resolve_k_gradient(Pi: Jet, RHd, RHe):
    """Solve the 2x2 first-order system for (d_w K, d_z K)."""
    g2 = check_gauge(Pi)
    kt1 = (Pi.d1 * RHd + Pi.d3 * RHe) / g2
    kt3 = (-Pi.d3 * RHd + Pi.d1 * RHe) / g2
    return kt1, kt3


def k_equation_rhs(F: Jet, A: Jet, Pi: Jet):
    """Right-hand sides of the two first-order K equations (vacuum-like part)."""
    P = Pi.v
    e4F = np.exp(4 * F.v)
    RHd = 0.5 * (Pi.d11 - Pi.d33) + P * (F.d1**2 - F.d3**2) - e4F * (A.d1**2 - A.d3**2) / (4 * P)
    RHe = Pi.d13 + 2 * P * F.d1 * F.d3 - e4F * A.d1 * A.d3 / (2 * P)
    return RHd, RHe


def _k_residuals(K: Jet, Pi: Jet, RHd, RHe):
    rKd = Pi.d1 * K.d1 - Pi.d3 * K.d3 - RHd
    rKe = Pi.d3 * K.d1 + Pi.d1 * K.d3 - RHe
    return rKd, rKe


def matter_sources(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()):
    """Right-hand sides of the F, A and Pi equations."""
    kappa = constants.kappa
    om = np.asarray(fluid.Omega.v) / constants.c
    F, A, K, Pi = jet.F.v, jet.A.v, jet.K.v, jet.Pi.v
    h = fluid.eps + fluid.P
    e2F = np.exp(2 * F)
    e2G = np.exp(2 * lorentz_G(jet, fluid.Omega, constants).v)
    conf = np.exp(2 * (K - F))
    sF = 0.5 * kappa * conf * (h * (e2F * (1 + om * A) ** 2 + om**2 * Pi**2 / e2F) / e2G + 2 * fluid.P)
    sA = -2 * kappa * conf * h * om * Pi**2 * (1 + om * A) / (e2F * e2G)
    sPi = 2 * kappa * conf * fluid.P * Pi
    return sF, sA, sPi


def field_operators(jet: MetricJet):
    """Left-hand sides of the F, A and Pi equations."""
    F, A, Pi = jet.F, jet.A, jet.Pi
    P = Pi.v
    LF = F.lap + (F.d1 * Pi.d1 + F.d3 * Pi.d3) / P + np.exp(4 * F.v) * (A.d1**2 + A.d3**2) / (2 * P**2)
    LA = A.lap - (Pi.d1 * A.d1 + Pi.d3 * A.d3) / P + 4 * (F.d1 * A.d1 + F.d3 * A.d3)
    LPi = Pi.lap
    return LF, LA, LPi


def reduced_residuals(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()) -> ReducedResiduals:
    """Residuals of the unprimed reduced system at one or many points."""
    check_off_axis(jet.Pi.v)
    LF, LA, LPi = field_operators(jet)
    sF, sA, sPi = matter_sources(jet, fluid, constants)
    RHd, RHe = k_equation_rhs(jet.F, jet.A, jet.Pi)
    kt1, kt3 = resolve_k_gradient(jet.Pi, RHd, RHe)
    rKd, rKe = _k_residuals(jet.K, jet.Pi, RHd, RHe)
    return ReducedResiduals(LF - sF, LA - sA, LPi - sPi, rKd, rKe, kt1, kt3, RHd, RHe)


def einstein_residuals(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()) -> EinsteinResiduals:
    """Q_{mu nu} from closed-form Ricci components and the fluid source."""
    R = ricci_from_jet(jet)
    S = stress_energy(jet, fluid, constants).S_lower
    k = constants.kappa
    return EinsteinResiduals(
        R.R00 - k * S[0, 0], R.R02 - k * S[0, 2], R.R22 - k * S[2, 2],
        R.R11 - k * S[1, 1], R.R33 - k * S[3, 3], R.R13 - k * S[1, 3],
    )


def einstein_terms(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()):
    """Magnitudes ``|R| + |kappa S|`` per component, for scaled norms."""
    R = ricci_from_jet(jet)
    S = stress_energy(jet, fluid, constants).S_lower
    k = constants.kappa
    idx = dict(Q00=(0, 0), Q02=(0, 2), Q22=(2, 2), Q11=(1, 1), Q33=(3, 3), Q13=(1, 3))
    return {n: np.abs(getattr(R, "R" + n[1:])) + np.abs(k * S[i, j]) for n, (i, j) in idx.items()}


# ---------------------------------------------------------------------------
# equivalence maps


def equivalence_map(jet: MetricJet):
    """Lower-triangular map taking (Q00, Q02, Q22) to the reduced combinations.

    Returns ``(M, D)`` with ``(rF, rA, rPi) = D @ M @ (Q00, Q02, Q22)``; ``M``
    has determinant ``-e^{2F}`` and ``D`` is a positive diagonal scaling.
    Arrays have shape ``(3, 3, *batch)``.
    """
    ls = lanczos_to_lewis(jet)
    f, k, l, m = ls.f.v, ls.k.v, ls.l.v, ls.m.v
    A, Pi = jet.A.v, jet.Pi.v
    f, k, l, m, A, Pi = np.broadcast_arrays(f, k, l, m, A, Pi)
    one, zero = np.ones_like(f), np.zeros_like(f)
    M = np.array([[one, zero, zero], [-A, one, zero], [l, -2 * k, -f]])
    em = np.exp(m)
    D = np.array([[em / f, zero, zero], [zero, 2 * em / f, zero], [zero, zero, em / Pi]])
    return M, D


def map_determinant(M):
    return np.linalg.det(np.moveaxis(M, (0, 1), (-2, -1)))


def reduced_from_einstein(jet: MetricJet, Q: EinsteinResiduals):
    M, D = equivalence_map(jet)
    q = np.stack(np.broadcast_arrays(Q.Q00, Q.Q02, Q.Q22))
    return np.einsum("ij...,jk...,k...->i...", D, M, q)


def einstein_from_reduced(jet: MetricJet, rF, rA, rPi):
    """Invert the map: recover (Q00, Q02, Q22) from (rF, rA, rPi)."""
    M, D = equivalence_map(jet)
    DM = np.moveaxis(np.einsum("ij...,jk...->ik...", D, M), (0, 1), (-2, -1))
    r = np.moveaxis(np.stack(np.broadcast_arrays(rF, rA, rPi)), 0, -1)
    return np.moveaxis(np.linalg.solve(DM, r[..., None])[..., 0], -1, 0)


def scaled_err(a, b, *terms):
    scale = 1.0 + sum(np.abs(t) for t in terms) if terms else 1.0 + np.abs(b)
    return np.abs(np.asarray(a) - np.asarray(b)) / scale


def equivalence_check(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()) -> dict:
    """Check that the reduced residuals are an invertible image of (Q00, Q02, Q22)."""
    M, D = equivalence_map(jet)
    det = map_determinant(M)
    det_expected = -np.exp(2 * jet.F.v)
    Q = einstein_residuals(jet, fluid, constants)
    red = reduced_residuals(jet, fluid, constants)
    mapped = reduced_from_einstein(jet, Q)
    direct = np.stack(np.broadcast_arrays(red.rF, red.rA, red.rPi))
    back = einstein_from_reduced(jet, red.rF, red.rA, red.rPi)
    qd = np.stack(np.broadcast_arrays(Q.Q00, Q.Q02, Q.Q22))
    return {
        "det": det,
        "det_expected": det_expected,
        "det_error": float(np.max(np.abs(det - det_expected))),
        "map_error": float(np.max(scaled_err(mapped, direct, direct))),
        "inverse_error": float(np.max(scaled_err(back, qd, qd))),
    }


def identity_suite(jet: MetricJet, fluid: FluidPoint, constants: Constants = Constants()) -> dict:
    """Residuals of the source and curvature identities that isolate Pi."""
    ls = lanczos_to_lewis(jet)
    f, k, l, m = ls.f.v, ls.k.v, ls.l.v, ls.m.v
    S = stress_energy(jet, fluid, constants).S_lower
    R = ricci_from_jet(jet)
    Pi = jet.Pi
    src = l * S[0, 0] - 2 * k * S[0, 2] - f * S[2, 2]
    curv = np.exp(m) / Pi.v * (l * R.R00 - 2 * k * R.R02 - f * R.R22)
    lap = Pi.lap
    two_p = 2 * fluid.P * Pi.v**2
    out = {
        "source_pi": np.max(scaled_err(src, two_p, np.abs(l * S[0, 0]), np.abs(k * S[0, 2]), np.abs(f * S[2, 2]))),
        "curvature_pi": np.max(scaled_err(curv, lap, np.abs(np.exp(m) / Pi.v * l * R.R00), np.abs(lap))),
    }
    dust, lap = np.broadcast_arrays(np.asarray(fluid.P) == 0, lap)
    out["harmonic_pi"] = float(np.max(np.abs(lap[dust]), initial=0.0))
    return {k_: float(v) for k_, v in out.items()}


# ---------------------------------------------------------------------------
# consistency of the first-order K system


def defect_rhs(jet: MetricJet, fluid: FluidPoint, kt1, kt3, constants: Constants = Constants()):
    """Predicted value of d_z kt1 - d_w kt3 for rigid rotation or vacuum."""
    Pi = jet.Pi
    g2 = check_gauge(Pi)
    fac = 2 * constants.kappa * np.exp(2 * (jet.K.v - jet.F.v)) * fluid.P * Pi.v / g2
    return fac * ((jet.K.d1 - kt1) * Pi.d3 - (jet.K.d3 - kt3) * Pi.d1)


def warn_if_differential(fluid: FluidPoint, where: str):
    dOm = np.abs(np.asarray(fluid.Omega.d1)) + np.abs(np.asarray(fluid.Omega.d3))
    rho = np.asarray(fluid.rho)
    if np.any(np.broadcast_to(dOm, np.broadcast(dOm, rho).shape)[np.broadcast_to(rho > 0, np.broadcast(dOm, rho).shape)] > 0):
        warnings.warn(
            f"{where}: Omega varies inside matter; the defect identity is not established there",
            HypothesisWarning,
            stacklevel=3,
        )
        return True
    return False


def consistency_defect(jet_field, fluid_field, point, h: float, constants: Constants = Constants()):
    """Compare d_z kt1 - d_w kt3 with its predicted value at ``point``.

    Parameters
    ----------
    jet_field : callable
        ``jet_field(w, z) -> MetricJet`` (K included).
    fluid_field : callable
        ``fluid_field(w, z) -> FluidPoint``.
    point : (w, z)
    h : float
        Step for the centered differences of the kt fields.

    Returns
    -------
    lhs, rhs : ndarray
    """
    w, z = (np.asarray(p, dtype=float) for p in point)
    fl = fluid_field(w, z)
    warn_if_differential(fl, "consistency_defect")

    def kt(wq, zq):
        r = reduced_residuals(jet_field(wq, zq), fluid_field(wq, zq), constants)
        return r.kt1, r.kt3

    k1p, _ = kt(w, z + h)
    k1m, _ = kt(w, z - h)
    _, k3p = kt(w + h, z)
    _, k3m = kt(w - h, z)
    lhs = (k1p - k1m) / (2 * h) - (k3p - k3m) / (2 * h)
    jet = jet_field(w, z)
    red = reduced_residuals(jet, fl, constants)
    return lhs, defect_rhs(jet, fl, red.kt1, red.kt3, constants)
