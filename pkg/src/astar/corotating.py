"""Corotating (primed) potentials and the primed reduced system.

With ``w = Omega / c`` the primed Lewis functions are

    f' = f - 2 w k - w^2 l,   k' = k + w l,   l' = l,   m' = m,

and ``e^{2F'} = f'``, ``A' = -k'/f'``, ``K' = m/2 + F'``.  When Omega varies,
derivatives of the primed functions pick up ``d Omega`` terms; the extra
pieces this produces in the field equations are collected in
:class:`CorrectionTerms`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as J
from .errors import CorotationBreakdownError, CausalLimitError
from .jets import Jet
from .matter import FluidPoint, four_velocity, lorentz_G
from .reduced_system import (
    ReducedResiduals,
    check_gauge,
    k_equation_rhs,
    resolve_k_gradient,
    scaled_err,
    warn_if_differential,
)
from .tensor_core import Constants, LewisState, MetricJet, check_off_axis, lanczos_to_lewis, lewis_to_lanczos, sigma


@dataclass
class PrimedState:
    """Primed Lanczos potentials and primed Lewis functions (all jets)."""

    Fp: Jet
    Ap: Jet
    Kp: Jet
    Pi: Jet
    fp: Jet
    kp: Jet
    lp: Jet
    mp: Jet

    def lewis(self) -> LewisState:
        return LewisState(self.fp, self.kp, self.lp, self.mp)

    def as_jet(self) -> MetricJet:
        """The primed potentials packaged as a Lanczos jet."""
        return MetricJet(self.Fp, self.Ap, self.Kp, self.Pi)


def _omega(Omega, constants):
    return Jet.lift(Omega) / constants.c


def to_primed(jet: MetricJet, Omega, constants: Constants = Constants()) -> PrimedState:
    """Primed state from a Lanczos jet and a (possibly varying) Omega jet."""
    ls = lanczos_to_lewis(jet)
    om = _omega(Omega, constants)
    fp = ls.f - 2 * om * ls.k - om * om * ls.l
    bad = ~(fp.v > 0)
    if np.any(bad):
        loc = tuple(int(i) for i in np.argwhere(bad)[0]) if np.ndim(fp.v) else None
        raise CausalLimitError(f"f' <= 0 at index {loc}", location=loc)
    kp = ls.k + om * ls.l
    Fp = 0.5 * J.log(fp)
    Ap = -kp / fp
    Kp = 0.5 * ls.m + Fp
    return PrimedState(Fp, Ap, Kp, jet.Pi, fp, kp, ls.l, ls.m)


def primed_from_potentials(Fp: Jet, Ap: Jet, Kp: Jet, Pi: Jet) -> PrimedState:
    """Primed state from the primed potentials alone."""
    fp = J.exp(2 * Fp)
    kp = -fp * Ap
    lp = -fp * Ap * Ap + Pi * Pi / fp
    mp = 2 * (Kp - Fp)
    return PrimedState(Fp, Ap, Kp, Pi, fp, kp, lp, mp)


def from_primed(primed: PrimedState, Omega, constants: Constants = Constants()) -> MetricJet:
    """Inverse of :func:`to_primed`."""
    om = _omega(Omega, constants)
    f = primed.fp + 2 * om * primed.kp - om * om * primed.lp
    k = primed.kp - om * primed.lp
    return lewis_to_lanczos(LewisState(f, k, primed.lp, primed.mp))


@dataclass
class CorrectionTerms:
    """Extra terms produced by a spatially varying Omega."""

    D1_1: np.ndarray
    D1_3: np.ndarray
    D2_1: np.ndarray
    D2_3: np.ndarray
    W1_1: np.ndarray
    W1_3: np.ndarray
    W2: np.ndarray

    @property
    def D1(self):
        return self.D1_1 + self.D1_3

    @property
    def D2(self):
        return self.D2_1 + self.D2_3

    @property
    def W1(self):
        return self.W1_1 + self.W1_3


def correction_terms(primed: PrimedState, Omega, constants: Constants = Constants()) -> CorrectionTerms:
    """Correction terms from first and second partials of Omega.

    The second partials come from the ``d11``/``d33`` slots of the Omega jet.
    """
    om = _omega(Omega, constants)
    Pi = primed.Pi
    P = Pi.v
    check_off_axis(P)
    fp, kp, lp = primed.fp, primed.kp, primed.lp
    out = {}
    for j in (1, 3):
        wj, wjj = om.d(j), om.dd(j, j)
        kj, lj, fj, Pj = kp.d(j), lp.d(j), fp.d(j), Pi.d(j)
        out[f"D1_{j}"] = 4 / P * wj * kj + (2 * wjj / P - 2 * wj * Pj / P**2) * kp.v - 2 / P * wj**2 * lp.v
        q = fp.v * lp.v + 2 * kp.v**2
        out[f"D2_{j}"] = (
            wjj * q / P
            + wj * ((2 * fp.v * lj + 4 * kp.v * kj) / P - q * Pj / P**2)
            - 2 * kp.v * lp.v * wj**2 / P
        )
        out[f"W1_{j}"] = 2 * wj * (kp.v * lj - lp.v * kj) + wj**2 * lp.v**2
    w1, w3 = om.d1, om.d3
    out["W2"] = (
        w1 * (kp.v * lp.d3 - lp.v * kp.d3) + w3 * (kp.v * lp.d1 - lp.v * kp.d1) + w1 * w3 * lp.v**2
    )
    return CorrectionTerms(**out)


def sigma_primed(primed: PrimedState):
    return sigma(primed.lewis())


def primed_k_rhs(primed: PrimedState, corr: CorrectionTerms | None):
    RHd, RHe = k_equation_rhs(primed.Fp, primed.Ap, primed.Pi)
    if corr is not None:
        P = primed.Pi.v
        RHd = RHd - (corr.W1_1 - corr.W1_3) / (4 * P)
        RHe = RHe - corr.W2 / (2 * P)
    return RHd, RHe


def primed_reduced_residuals(
    primed: PrimedState, fluid: FluidPoint, constants: Constants = Constants(), with_corrections: bool = True
) -> ReducedResiduals:
    """Residuals of the primed reduced system.

    With ``with_corrections=False`` the rigid-rotation form is evaluated.  For
    constant Omega both forms are identical because every correction term
    carries a factor of a derivative of Omega.
    """
    Fp, Ap, Kp, Pi = primed.Fp, primed.Ap, primed.Kp, primed.Pi
    P = Pi.v
    check_off_axis(P)
    kappa = constants.kappa
    corr = correction_terms(primed, fluid.Omega, constants) if with_corrections else None
    LF = Fp.lap + (Fp.d1 * Pi.d1 + Fp.d3 * Pi.d3) / P + np.exp(4 * Fp.v) * (Ap.d1**2 + Ap.d3**2) / (2 * P**2)
    LA = Ap.lap - (Pi.d1 * Ap.d1 + Pi.d3 * Ap.d3) / P + 4 * (Fp.d1 * Ap.d1 + Fp.d3 * Ap.d3)
    if corr is not None:
        LF = LF + 0.5 * P * np.exp(-2 * Fp.v) * corr.D1 + corr.W1 / (2 * P**2)
        LA = LA + P * np.exp(-4 * Fp.v) * corr.D2
    em = np.exp(2 * (Kp.v - Fp.v))
    rF = LF - 0.5 * kappa * em * (fluid.eps + 3 * fluid.P)
    rA = LA
    rPi = Pi.lap - 2 * kappa * em * fluid.P * P
    RHd, RHe = primed_k_rhs(primed, corr)
    kt1, kt3 = resolve_k_gradient(Pi, RHd, RHe)
    rKd = Pi.d1 * Kp.d1 - Pi.d3 * Kp.d3 - RHd
    rKe = Pi.d3 * Kp.d1 + Pi.d1 * Kp.d3 - RHe
    return ReducedResiduals(rF, rA, rPi, rKd, rKe, kt1, kt3, RHd, RHe)


def primed_equivalence_map(jet: MetricJet, Omega, constants: Constants = Constants()):
    """Map from (Q00, Q02, Q22) to the primed reduced combinations.

    Rows are ordered (Pi equation, A' equation, F' equation); the returned
    ``D`` rescales each row to the corresponding residual.  ``det M = f'^2``.
    """
    ls = lanczos_to_lewis(jet)
    om = np.asarray(_omega(Omega, constants).v)
    f, k, l, m = np.broadcast_arrays(ls.f.v, ls.k.v, ls.l.v, ls.m.v, om)[:4]
    om = np.broadcast_to(om, f.shape)
    fp = f - 2 * om * k - om**2 * l
    one, zero = np.ones_like(f), np.zeros_like(f)
    M = np.array([
        [l, -2 * k, -f],
        [k + om * l, f + om**2 * l, om * (f - om * k)],
        [one, 2 * om, om**2],
    ])
    em = np.exp(m)
    Pi = np.broadcast_to(jet.Pi.v, f.shape)
    D = np.array([[em / Pi, zero, zero], [zero, 2 * em / fp**2, zero], [zero, zero, em / fp]])
    return M, D, fp


def defect_rhs_primed(primed: PrimedState, fluid: FluidPoint, kt1, kt3, constants: Constants = Constants()):
    Pi = primed.Pi
    g2 = check_gauge(Pi)
    fac = 2 * constants.kappa * np.exp(2 * (primed.Kp.v - primed.Fp.v)) * fluid.P * Pi.v / g2
    return fac * ((primed.Kp.d1 - kt1) * Pi.d3 - (primed.Kp.d3 - kt3) * Pi.d1)


def primed_consistency_defect(primed_field, fluid_field, point, h: float, constants: Constants = Constants()):
    """Primed counterpart of :func:`astar.reduced_system.consistency_defect`.

    ``primed_field(w, z)`` returns a :class:`PrimedState` (K' included).
    """
    w, z = (np.asarray(p, dtype=float) for p in point)
    fl = fluid_field(w, z)
    warn_if_differential(fl, "primed_consistency_defect")

    def kt(wq, zq):
        r = primed_reduced_residuals(primed_field(wq, zq), fluid_field(wq, zq), constants, with_corrections=False)
        return r.kt1, r.kt3

    k1p, _ = kt(w, z + h)
    k1m, _ = kt(w, z - h)
    _, k3p = kt(w + h, z)
    _, k3m = kt(w - h, z)
    lhs = (k1p - k1m) / (2 * h) - (k3p - k3m) / (2 * h)
    pr = primed_field(w, z)
    red = primed_reduced_residuals(pr, fl, constants, with_corrections=False)
    return lhs, defect_rhs_primed(pr, fl, red.kt1, red.kt3, constants)


def _require_constant(Omega):
    if isinstance(Omega, Jet):
        if np.any(Omega.d1 != 0) or np.any(Omega.d3 != 0):
            raise ValueError("verify_transform requires a constant Omega")
        return Omega.v
    return np.asarray(Omega, dtype=float)


def verify_transform(jet: MetricJet, Omega, constants: Constants = Constants(), tol: float = 1e-10) -> dict:
    """Check that rigid corotation keeps the Lanczos form.

    Builds (F', A') directly from the transformed metric components and checks
    the algebraic relations between primed and unprimed potentials, the
    equality of the log Lorentz factor with F', agreement with
    :func:`to_primed`, and the corotating four-velocity.
    """
    Om = _require_constant(Omega)
    c = constants.c
    om = Om / c
    F, A, K, Pi = jet.F.v, jet.A.v, jet.K.v, jet.Pi.v
    e2F = np.exp(2 * F)
    x1 = e2F * (1 + A * om) ** 2 - Pi**2 * om**2 / e2F
    if np.any(~(x1 > 0)):
        raise CorotationBreakdownError("corotating e^{2F'} is not positive", location=None)
    e2Fp = x1
    Ap = (e2F * (1 + om * A) * A - om * Pi**2 / e2F) / e2Fp
    Fp = 0.5 * np.log(e2Fp)
    Kp = K - F + Fp
    errs = {}
    lhs3 = e2Fp * Ap**2 - Pi**2 / e2Fp
    rhs3 = e2F * A**2 - Pi**2 / e2F
    errs["quadratic_invariant"] = scaled_err(lhs3, rhs3, e2Fp * Ap**2, Pi**2 / e2Fp)
    errs["inverse_relation"] = scaled_err(e2Fp * (1 - Ap * om) ** 2 - Pi**2 * om**2 / e2Fp, e2F, e2F)
    errs["mixed_relation"] = scaled_err((1 - Ap * om) * e2Fp, (1 + A * om) * e2F, e2F)
    G = lorentz_G(jet, Om, constants).v
    errs["G_equals_Fp"] = scaled_err(G, Fp, Fp)
    pr = to_primed(jet, Jet.const(Om), constants)
    errs["Fp_match"] = scaled_err(pr.Fp.v, Fp, Fp)
    errs["Ap_match"] = scaled_err(pr.Ap.v, Ap, Ap)
    errs["Kp_match"] = scaled_err(pr.Kp.v, Kp, Kp)
    U = four_velocity(jet, Om, constants).U_upper
    # x^{2'} = x^2 - w x^0, so U^{2'} = U^2 - w U^0; normalization in the primed metric
    errs["U2_corotating"] = np.abs(U[2] - om * U[0])
    errs["U0_normalization"] = np.abs(e2Fp * U[0] ** 2 - 1)
    report = {k_: float(np.max(v)) for k_, v in errs.items()}
    report["max_error"] = max(report.values())
    report["passed"] = bool(report["max_error"] <= tol)
    return report


def line_element_split(jet: MetricJet, Omega: Jet, t, dx, constants: Constants = Constants()):
    """Line element in rotating coordinates for a (possibly varying) Omega.

    The rotating angle is ``phi' = phi - Omega(w, z) t``.  Returns
    ``(ds2, ds2_form, extra)`` where ``ds2`` is computed from the original
    metric, ``ds2_form`` is the Lanczos expression in the primed potentials
    and ``extra = ds2 - ds2_form`` predicted in closed form:

        extra = 2 e^{2F'} A' c dt d + (e^{2F'} A'^2 - e^{-2F'} Pi^2)(2 dphi' d + d^2),

    with ``d = t (d_w Omega dw + d_z Omega dz)``.

    Parameters
    ----------
    dx : sequence
        ``(c dt, dw, dphi', dz)``.
    """
    Om = Jet.lift(Omega)
    c = constants.c
    x0, dw, dphp, dz = (np.asarray(v, dtype=float) for v in dx)
    delta = t * (Om.d1 * dw + Om.d3 * dz)
    dphi = dphp + Om.v / c * x0 + delta
    ls = lanczos_to_lewis(jet)
    f, k, l, m = ls.f.v, ls.k.v, ls.l.v, ls.m.v
    ds2 = f * x0**2 - 2 * k * x0 * dphi - l * dphi**2 - np.exp(m) * (dw**2 + dz**2)
    pr = to_primed(jet, Jet.const(Om.v), constants)
    e2Fp, Ap, Kp, Pi = np.exp(2 * pr.Fp.v), pr.Ap.v, pr.Kp.v, jet.Pi.v
    form = e2Fp * (x0 + Ap * dphp) ** 2 - (np.exp(2 * Kp) * (dw**2 + dz**2) + Pi**2 * dphp**2) / e2Fp
    extra = 2 * e2Fp * Ap * x0 * delta + (e2Fp * Ap**2 - Pi**2 / e2Fp) * (2 * dphp * delta + delta**2)
    return ds2, form, extra
