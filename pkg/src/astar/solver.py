"""Finite-difference solver for rigidly rotating equilibria.

Fields live on a uniform node-centred lattice over ``w in [wmin, wmax]`` and
``z in [zmin, zmax]``; arrays are indexed ``[j, i]`` with ``j`` along z, so a
C-order flattening is z-outer.  The three second-order equations are relaxed
by red-black SOR with the nonlinear and source terms frozen for one sweep;
``K`` is obtained by integrating its resolved gradient along a fixed L-shaped
path (up the first column, then along rows), and the density follows from the
first integral of the Euler equations.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, ndimage, special

from .corotating import from_primed, primed_from_potentials, primed_reduced_residuals, to_primed
from .errors import (
    CausalLimitError,
    DivergenceError,
    EosRangeError,
    GaugeDegeneracyError,
    HypothesisWarning,
)
from .jets import Jet
from .matter import EnthalpyTable, EosSpec, FluidPoint, eos_pressure, lorentz_G
from .reduced_system import (
    defect_rhs,
    einstein_residuals,
    einstein_terms,
    field_operators,
    k_equation_rhs,
    matter_sources,
    reduced_residuals,
    resolve_k_gradient,
)
from .tensor_core import Constants, MetricJet

log = logging.getLogger(__name__)

EQUATIONS = ("F", "A", "Pi")


@dataclass(frozen=True)
class Grid2D:
    """Uniform lattice with ``nw x nz`` cells.

    ``zmin`` defaults to ``-zmax``; ``wmin`` defaults to 0 (the rotation axis).
    """

    wmax: float
    zmax: float
    nw: int
    nz: int
    wmin: float = 0.0
    zmin: float | None = None

    def __post_init__(self):
        if self.zmin is None:
            object.__setattr__(self, "zmin", -self.zmax)
        if self.nw < 16 or self.nz < 16:
            raise ValueError("grid needs at least 16 cells per direction")
        if not (self.wmax > self.wmin >= 0 and self.zmax > self.zmin):
            raise ValueError("grid extents must be positive and ordered")

    @property
    def hw(self):
        return (self.wmax - self.wmin) / self.nw

    @property
    def hz(self):
        return (self.zmax - self.zmin) / self.nz

    @property
    def w(self):
        return np.linspace(self.wmin, self.wmax, self.nw + 1)

    @property
    def z(self):
        return np.linspace(self.zmin, self.zmax, self.nz + 1)

    @property
    def shape(self):
        return (self.nz + 1, self.nw + 1)

    def mesh(self):
        """``(W, Z)`` arrays of shape ``(nz + 1, nw + 1)``."""
        W, Z = np.meshgrid(self.w, self.z)
        return W, Z

    @property
    def on_axis(self) -> bool:
        return self.wmin == 0.0

    @property
    def j0(self) -> int:
        """Row index of the node closest to z = 0 (path origin)."""
        return int(np.argmin(np.abs(self.z)))

    def coords(self, j, i):
        return [float(self.w[i]), float(self.z[j])]


def fd_jet(u: np.ndarray, grid: Grid2D) -> Jet:
    """Centred-difference jet of ``u`` on the interior nodes."""
    hw, hz = grid.hw, grid.hz
    c = u[1:-1, 1:-1]
    e, w_ = u[1:-1, 2:], u[1:-1, :-2]
    n, s = u[2:, 1:-1], u[:-2, 1:-1]
    return Jet(
        c,
        (e - w_) / (2 * hw),
        (n - s) / (2 * hz),
        (e - 2 * c + w_) / hw**2,
        (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2]) / (4 * hw * hz),
        (n - 2 * c + s) / hz**2,
    )


def central_diff(u: np.ndarray, h: float, axis: int):
    """Centred first difference on interior points along ``axis``."""
    if axis == 1:
        return (u[:, 2:] - u[:, :-2]) / (2 * h)
    return (u[2:, :] - u[:-2, :]) / (2 * h)


@dataclass
class FieldState:
    """Unknowns of the solve on a :class:`Grid2D`.

    In the ``primed`` frame ``F``, ``A`` and ``K`` hold the corotating
    potentials.  ``Omega`` is a float (rigid rotation) or a grid array.
    """

    grid: Grid2D
    F: np.ndarray
    A: np.ndarray
    K: np.ndarray
    Pi: np.ndarray
    rho: np.ndarray
    P: np.ndarray
    frame: str = "unprimed"
    Omega: float | np.ndarray = 0.0
    first_integral_const: float | None = None
    equatorial_symmetry: bool = False

    @classmethod
    def flat(cls, grid: Grid2D, frame="unprimed", Omega=0.0, constants: Constants = Constants()):
        W, _ = grid.mesh()
        z = np.zeros(grid.shape)
        st = cls(grid, z.copy(), z.copy(), z.copy(), W.copy(), z.copy(), z.copy(), frame, Omega)
        if frame == "primed":
            st.F, st.A = unprimed_to_primed_values(z, z, W, Omega, constants)
            st.K = st.F.copy()
        return st

    def copy(self):
        return replace(self, F=self.F.copy(), A=self.A.copy(), K=self.K.copy(), Pi=self.Pi.copy(),
                       rho=self.rho.copy(), P=self.P.copy())

    @property
    def constant_omega(self) -> bool:
        return np.ndim(self.Omega) == 0

    def omega_jet(self) -> Jet:
        """Omega on the interior nodes (with centred-difference partials)."""
        if self.constant_omega:
            return Jet.const(float(self.Omega))
        return fd_jet(np.asarray(self.Omega, dtype=float), self.grid)

    def omega_values(self):
        return self.Omega if self.constant_omega else np.asarray(self.Omega)

    def jet(self) -> MetricJet:
        """Interior jets of the stored potentials (frame as stored)."""
        g = self.grid
        return MetricJet(fd_jet(self.F, g), fd_jet(self.A, g), fd_jet(self.K, g), fd_jet(self.Pi, g))

    def unprimed_jet(self, constants: Constants = Constants()) -> MetricJet:
        jet = self.jet()
        if self.frame == "primed":
            pr = primed_from_potentials(jet.F, jet.A, jet.K, jet.Pi)
            return from_primed(pr, self.omega_jet(), constants)
        return jet

    def fluid(self, constants: Constants = Constants(), u=None) -> FluidPoint:
        s = (slice(1, -1), slice(1, -1))
        rho = self.rho[s]
        u_in = np.zeros_like(rho) if u is None else u[s]
        return FluidPoint(rho, self.P[s], constants.c**2 * rho, u_in, self.omega_jet())


# ---------------------------------------------------------------------------
# frame conversions on plain values


def unprimed_to_primed_values(F, A, Pi, Omega, constants: Constants = Constants()):
    """Corotating (F', A') from (F, A, Pi) values; raises if f' <= 0."""
    om = np.asarray(Omega) / constants.c
    e2F = np.exp(2 * F)
    e2Fp = e2F * (1 + om * A) ** 2 - om**2 * Pi**2 / e2F
    if np.any(~(e2Fp > 0)):
        loc = tuple(int(i) for i in np.argwhere(~(e2Fp > 0))[0])
        raise CausalLimitError(f"corotating frame breaks down at index {loc}", location=loc)
    Ap = (e2F * (1 + om * A) * A - om * Pi**2 / e2F) / e2Fp
    return 0.5 * np.log(e2Fp), Ap


def primed_to_unprimed_values(Fp, Ap, Pi, Omega, constants: Constants = Constants()):
    om = np.asarray(Omega) / constants.c
    e2Fp = np.exp(2 * Fp)
    e2F = e2Fp * (1 - om * Ap) ** 2 - om**2 * Pi**2 / e2Fp
    A = (e2Fp * (1 - om * Ap) * Ap + om * Pi**2 / e2Fp) / e2F
    return 0.5 * np.log(e2F), A


def log_lorentz_values(state: FieldState, constants: Constants = Constants()):
    """G on every node (the formula has no division by Pi)."""
    if state.frame == "primed":
        return state.F.copy()
    om = np.asarray(state.omega_values()) / constants.c
    e2F = np.exp(2 * state.F)
    e2G = e2F * (1 + om * state.A) ** 2 - om**2 * state.Pi**2 / e2F
    bad = ~(e2G > 0)
    if np.any(bad):
        j, i = np.argwhere(bad)[0]
        raise CausalLimitError(
            f"timelike condition fails at (w, z) = {state.grid.coords(j, i)}", location=state.grid.coords(j, i)
        )
    return 0.5 * np.log(e2G)


# ---------------------------------------------------------------------------
# boundary handling


def apply_axis(state: FieldState, name: str):
    """Axis parity: F and K even (quadratic extrapolation), A and Pi vanish."""
    if not state.grid.on_axis:
        return
    u = getattr(state, name)
    if name in ("F", "K"):
        u[:, 0] = (4 * u[:, 1] - u[:, 2]) / 3
    else:
        u[:, 0] = 0.0


def _cell_weights(grid: Grid2D):
    return grid.hw * grid.hz


def multipole_boundary(state: FieldState, constants: Constants = Constants(), lmax: int = 2):
    """Outer-boundary values of (F, A) in the unprimed frame.

    The F equation is rewritten as a flat 3-D Poisson problem and the A
    equation (through A = w^2 B) as a flat 5-D one; the exterior solutions are
    expanded in axisymmetric multipoles up to ``lmax`` using source integrals
    over the interior nodes.
    """
    g = state.grid
    jet = state.unprimed_jet(constants)
    fl = state.fluid(constants)
    P = jet.Pi.v
    W, Z = g.mesh()
    Wi, Zi = W[1:-1, 1:-1], Z[1:-1, 1:-1]
    sF, sA, _ = matter_sources(jet, fl, constants)
    F, A, Pi = jet.F, jet.A, jet.Pi
    geo_w = Pi.d1 / P - 1.0 / Wi
    geo_z = Pi.d3 / P
    effF = sF - np.exp(4 * F.v) * (A.d1**2 + A.d3**2) / (2 * P**2) - geo_w * F.d1 - geo_z * F.d3
    effA = sA - 4 * (F.d1 * A.d1 + F.d3 * A.d3) + geo_w * A.d1 + geo_z * A.d3
    dA = _cell_weights(g)
    ri = np.hypot(Wi, Zi)
    ci = np.divide(Zi, ri, out=np.zeros_like(ri), where=ri > 0)

    mask = np.zeros(g.shape, bool)
    mask[0, :] = mask[-1, :] = True
    mask[:, -1] = True
    if not g.on_axis:
        mask[:, 0] = True
    Wb, Zb = W[mask], Z[mask]
    rb = np.hypot(Wb, Zb)
    cb = Zb / rb
    Fb = np.zeros_like(rb)
    Bb = np.zeros_like(rb)
    for l in range(lmax + 1):
        mF = np.sum(effF * ri**l * special.eval_legendre(l, ci) * 2 * np.pi * Wi) * dA
        Fb += -mF / (4 * np.pi) * special.eval_legendre(l, cb) / rb ** (l + 1)
        c1 = special.eval_gegenbauer(l, 1.5, 1.0)
        mA = np.sum(effA * Wi * ri**l * special.eval_gegenbauer(l, 1.5, ci)) * dA
        Bb += -0.25 * mA * special.eval_gegenbauer(l, 1.5, cb) / (c1 * rb ** (l + 3))
    return mask, Fb, Wb**2 * Bb


def set_outer_boundary(state: FieldState, constants: Constants = Constants(), lmax: int = 2):
    mask, Fb, Ab = multipole_boundary(state, constants, lmax)
    W, _ = state.grid.mesh()
    state.Pi[mask] = W[mask]
    if state.frame == "primed":
        Fb, Ab = unprimed_to_primed_values(Fb, Ab, W[mask], state.omega_values() if state.constant_omega
                                           else np.asarray(state.Omega)[mask], constants)
    state.F[mask] = Fb
    state.A[mask] = Ab


# ---------------------------------------------------------------------------
# relaxation


def _sources(state: FieldState, constants: Constants):
    """Matter sources of the three equations on the interior nodes."""
    s = (slice(1, -1), slice(1, -1))
    if state.frame == "primed":
        em = np.exp(2 * (state.K[s] - state.F[s]))
        eps = constants.c**2 * state.rho[s]
        P = state.P[s]
        kap = constants.kappa
        return 0.5 * kap * em * (eps + 3 * P), np.zeros_like(P), 2 * kap * em * P * state.Pi[s]
    vals = MetricJet(Jet(state.F[s]), Jet(state.A[s]), Jet(state.K[s]), Jet(state.Pi[s]))
    try:
        return matter_sources(vals, state.fluid(constants), constants)
    except CausalLimitError as exc:
        j, i = exc.location if exc.location else (0, 0)
        loc = state.grid.coords(j + 1, i + 1)
        raise CausalLimitError(f"timelike condition fails at (w, z) = {loc}", location=loc) from None


def roundoff_floor(u: np.ndarray, grid: Grid2D) -> float:
    """Smallest residual a five-point stencil can resolve for field ``u``."""
    return 4 * np.finfo(float).eps * (1 + float(np.max(np.abs(u)))) * (2 / grid.hw**2 + 2 / grid.hz**2)


def _color_masks(grid: Grid2D):
    J, I = np.meshgrid(np.arange(1, grid.nz), np.arange(1, grid.nw), indexing="ij")
    red = (I + J) % 2 == 0
    return red, ~red


def equation_residual(state: FieldState, name: str, constants: Constants = Constants()):
    """Discrete residual of one second-order equation on the interior."""
    g = state.grid
    jet = state.jet()
    LF, LA, LPi = field_operators(jet)
    sF, sA, sPi = _sources(state, constants)
    return {"F": LF - sF, "A": LA - sA, "Pi": LPi - sPi}[name]


def relax_elliptic(
    state: FieldState,
    equation: str,
    sweeps: int = 10000,
    relaxation_factor: float = 1.6,
    tol: float = 0.0,
    constants: Constants = Constants(),
    growth_limit: float = 10.0,
):
    """Red-black SOR sweeps on one equation, updating ``state`` in place.

    Coefficients that involve other fields are frozen for the whole call;
    terms depending on the relaxed field itself (the gradient-squared term of
    the F equation and the matter sources) are refreshed once per sweep.

    Returns
    -------
    field : ndarray
        The updated field (same object as ``getattr(state, equation)``).
    residual : float
        Max-norm residual over interior nodes after the last sweep.
    """
    if equation not in EQUATIONS:
        raise ValueError(f"equation must be one of {EQUATIONS}")
    g = state.grid
    hw, hz = g.hw, g.hz
    s = (slice(1, -1), slice(1, -1))
    u = getattr(state, equation)
    Pi = state.Pi
    P = Pi[s]
    with np.errstate(divide="ignore", invalid="ignore"):
        if equation == "F":
            bw = central_diff(Pi, hw, 1)[1:-1] / P
            bz = central_diff(Pi, hz, 0)[:, 1:-1] / P
        elif equation == "A":
            bw = -central_diff(Pi, hw, 1)[1:-1] / P + 4 * central_diff(state.F, hw, 1)[1:-1]
            bz = -central_diff(Pi, hz, 0)[:, 1:-1] / P + 4 * central_diff(state.F, hz, 0)[:, 1:-1]
        else:
            bw = bz = 0.0
    base_diag = -2 / hw**2 - 2 / hz**2
    red, black = _color_masks(g)

    def frozen():
        if equation == "F":
            Aw = central_diff(state.A, hw, 1)[1:-1]
            Az = central_diff(state.A, hz, 0)[:, 1:-1]
            nl = np.exp(4 * u[s]) * (Aw**2 + Az**2) / (2 * P**2)
            return nl - _sources(state, constants)[0], 0.0
        if equation == "A":
            return -_sources(state, constants)[1], 0.0
        # Pi: source is linear in Pi, keep it implicit through the diagonal
        src = _sources(state, constants)[2]
        coef = np.divide(src, P, out=np.zeros_like(src), where=P != 0)
        return 0.0, coef

    def residual(extra, coef):
        c = u[s]
        r = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / hw**2 + (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / hz**2
        if equation != "Pi":
            r = r + bw * (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * hw) + bz * (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * hz)
        return r + extra - coef * c

    r0 = None
    res = np.inf
    tol = max(tol, roundoff_floor(u, g))
    best, since_best = np.inf, 0
    for it in range(max(int(sweeps), 1)):
        extra, coef = frozen()
        diag = base_diag - coef
        for mask in (red, black):
            r = residual(extra, coef)
            inner = u[s]
            inner[mask] -= relaxation_factor * r[mask] / (diag[mask] if np.ndim(diag) else diag)
            apply_axis(state, equation)
        extra, coef = frozen()
        res = float(np.max(np.abs(residual(extra, coef))))
        if not np.isfinite(res):
            raise DivergenceError(f"{equation} relaxation produced non-finite values")
        if r0 is None:
            r0 = max(res, 1e-300)
        elif res > growth_limit * r0 and res > 1e-12:
            raise DivergenceError(f"{equation} residual grew from {r0:.3g} to {res:.3g}")
        if res <= tol:
            break
        # stalled at round-off: further sweeps only shuffle the last bits
        if res < 0.99 * best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= 50:
                break
    return u, res


# ---------------------------------------------------------------------------
# K from its resolved gradient


def _extend(inner: np.ndarray, grid: Grid2D, parity: str | None):
    """Fill boundary nodes of an interior array by extrapolation."""
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = inner
    out[0, 1:-1] = 2 * out[1, 1:-1] - out[2, 1:-1]
    out[-1, 1:-1] = 2 * out[-2, 1:-1] - out[-3, 1:-1]
    out[:, -1] = 2 * out[:, -2] - out[:, -3]
    if grid.on_axis and parity == "odd":
        out[:, 0] = 0.0
    elif grid.on_axis and parity == "even":
        out[:, 0] = (4 * out[:, 1] - out[:, 2]) / 3
    else:
        out[:, 0] = 2 * out[:, 1] - out[:, 2]
    return out


def k_gradient_fields(state: FieldState, constants: Constants = Constants()):
    """Resolved K-gradient targets (kt1, kt3) extended to the whole grid."""
    jet = state.jet()
    RHd, RHe = k_equation_rhs(jet.F, jet.A, jet.Pi)
    try:
        kt1, kt3 = resolve_k_gradient(jet.Pi, RHd, RHe)
    except GaugeDegeneracyError as exc:
        j, i = exc.location
        loc = state.grid.coords(j + 1, i + 1)
        raise GaugeDegeneracyError(f"grad Pi vanishes at (w, z) = {loc}", location=loc) from None
    return _extend(kt1, state.grid, "odd"), _extend(kt3, state.grid, "even"), kt1, kt3


def integrate_gradient(kt1: np.ndarray, kt3: np.ndarray, grid: Grid2D, K_O: float = 0.0):
    """Integrate a gradient field along the L-path (first column, then rows).

    Composite trapezoid rule; the path starts at ``(w[0], z[j0])``.
    """
    j0 = grid.j0
    col = np.zeros(grid.nz + 1)
    up = integrate.cumulative_trapezoid(kt3[j0:, 0], dx=grid.hz, initial=0.0)
    down = integrate.cumulative_trapezoid(kt3[j0::-1, 0], dx=-grid.hz, initial=0.0)
    col[j0:] = up
    col[: j0 + 1] = down[::-1]
    rows = integrate.cumulative_trapezoid(kt1, dx=grid.hw, axis=1, initial=0.0)
    return K_O + col[:, None] + rows


def integrate_K(state: FieldState, constants: Constants = Constants(), K_O: float = 0.0):
    """K-tilde: the path integral of the resolved gradient of K."""
    kt1, kt3, _, _ = k_gradient_fields(state, constants)
    return integrate_gradient(kt1, kt3, state.grid, K_O)


# ---------------------------------------------------------------------------
# density from the first integral


def update_density(
    state: FieldState,
    eos: EosSpec,
    constants: Constants = Constants(),
    table: EnthalpyTable | None = None,
    u_central: float | None = None,
    support: str = "center",
):
    """Update ``rho`` and ``P`` from ``u = c^2 (const - G)``.

    With ``u_central`` given, the constant is reset so that the enthalpy at
    the path origin equals ``u_central``.  ``support="center"`` keeps only the
    connected region of positive enthalpy that contains the origin.
    """
    g = state.grid
    c2 = constants.c**2
    G = log_lorentz_values(state, constants)
    if u_central is not None:
        state.first_integral_const = u_central / c2 + G[g.j0, 0]
    u = c2 * (state.first_integral_const - G)
    pos = u > 0
    if support == "center":
        lab, _ = ndimage.label(pos)
        pos = (lab == lab[g.j0, 0]) & pos if pos[g.j0, 0] else np.zeros_like(pos)
    u = np.where(pos, u, 0.0)
    if eos.kind == "dust":
        raise EosRangeError("dust has no enthalpy-density relation; the first integral fixes G only")
    tab = table or EnthalpyTable(eos, constants, y_top=None)
    state.rho = np.where(pos, tab.rho_from_u(u), 0.0)
    state.P = eos_pressure(state.rho, eos, constants)[0]
    return state.rho, u


# ---------------------------------------------------------------------------
# reports


def _stat(arr, grid: Grid2D, offset: int = 1):
    arr = np.asarray(arr, dtype=float)
    if arr.size == 0:
        return {"max_abs": 0.0, "l2": 0.0, "argmax": [float("nan"), float("nan")]}
    a = np.abs(arr)
    j, i = np.unravel_index(int(np.argmax(a)), a.shape)
    return {
        "max_abs": float(a[j, i]),
        "l2": float(np.sqrt(np.mean(a**2))),
        "argmax": grid.coords(j + offset, i + offset),
    }


def consistency_defect_grid(state: FieldState, constants: Constants = Constants()):
    """d_z kt1 - d_w kt3 and its predicted value on nodes two cells inside.

    Returns ``(lhs, rhs)`` arrays of shape ``(nz - 3, nw - 3)``.
    """
    g = state.grid
    _, _, kt1, kt3 = k_gradient_fields(state, constants)
    lhs = central_diff(kt1, g.hz, 0)[:, 1:-1] - central_diff(kt3, g.hw, 1)[1:-1]
    inner = (slice(1, -1), slice(1, -1))
    jet = state.jet().take(inner)
    fl = state.fluid(constants)
    fl2 = FluidPoint(fl.rho[inner], fl.P[inner], fl.eps[inner], fl.u[inner],
                     fl.Omega if state.constant_omega else fl.Omega.take(inner))
    if state.frame == "primed":
        pr = primed_from_potentials(jet.F, jet.A, jet.K, jet.Pi)
        from .corotating import defect_rhs_primed

        rhs = defect_rhs_primed(pr, fl2, kt1[inner], kt3[inner], constants)
    else:
        rhs = defect_rhs(jet, fl2, kt1[inner], kt3[inner], constants)
    return lhs, rhs


def grid_residual_report(state: FieldState, constants: Constants = Constants(), eos: EosSpec | None = None,
                         table: EnthalpyTable | None = None) -> dict:
    """Per-equation residual statistics over interior nodes.

    Keys ``Q00 .. Q13`` are the Einstein residuals (unprimed components),
    ``*_scaled`` divide them by ``1 + |R| + |kappa S|`` pointwise, ``rF .. rKe``
    are the reduced-system residuals in the stored frame, ``K_mismatch`` is
    ``|K-tilde - K|`` on all nodes and ``consistency`` is the defect
    ``lhs - rhs`` of the mixed-partial condition.
    """
    g = state.grid
    jet_u = state.unprimed_jet(constants)
    fl = state.fluid(constants)
    rep = {}
    Q = einstein_residuals(jet_u, fl, constants)
    terms = einstein_terms(jet_u, fl, constants)
    for n, q in Q.as_dict().items():
        rep[n] = _stat(q, g)
        rep[n + "_scaled"] = _stat(q / (1 + terms[n]), g)
    if state.frame == "primed":
        jet = state.jet()
        red = primed_reduced_residuals(primed_from_potentials(jet.F, jet.A, jet.K, jet.Pi), fl, constants,
                                       with_corrections=not state.constant_omega)
    else:
        red = reduced_residuals(jet_u, fl, constants)
    for n in ("rF", "rA", "rPi", "rKd", "rKe"):
        rep[n] = _stat(getattr(red, n), g)
    Kt = integrate_K(state, constants)
    rep["K_mismatch"] = _stat(Kt - state.K, g, offset=0)
    lhs, rhs = consistency_defect_grid(state, constants)
    rep["consistency"] = _stat(lhs - rhs, g, offset=2)
    rep["consistency_lhs"] = _stat(lhs, g, offset=2)
    if eos is not None and eos.kind == "barotropic" and state.first_integral_const is not None:
        tab = table or EnthalpyTable(eos, constants)
        u = tab.u_from_rho(state.rho)
        G = log_lorentz_values(state, constants)
        fi = np.where(state.rho > 0, u / constants.c**2 + G - state.first_integral_const, 0.0)
        rep["first_integral"] = _stat(fi, g, offset=0)
    return rep


# ---------------------------------------------------------------------------
# fixed-point driver


@dataclass
class SolverOptions:
    theta: float = 0.5
    relaxation: float = 1.6
    tol_outer: float = 1e-8
    max_outer: int = 500
    max_sweeps: int = 20000
    inner_ratio: float = 1e-3
    u_central: float = 0.0
    seed_radius: float | None = None
    frame: str = "unprimed"
    equatorial_symmetry: bool = True
    allow_differential: bool = False
    multipole_order: int = 2

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation factor must lie in (0, 2)")
        if not (self.tol_outer > 0 and self.max_outer >= 1 and self.max_sweeps >= 1):
            raise ValueError("tolerances and iteration caps must be positive")
        if self.u_central < 0:
            raise ValueError("u_central must be non-negative")
        if self.frame not in ("unprimed", "primed"):
            raise ValueError("frame must be 'unprimed' or 'primed'")


@dataclass
class SolveReport:
    outer_iters: int = 0
    converged: bool = False
    message: str = ""
    history: list = field(default_factory=list)
    defect_history: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    hypotheses_satisfied: bool = True

    def as_dict(self):
        return {
            "outer_iters": self.outer_iters,
            "converged": self.converged,
            "message": self.message,
            "hypotheses_satisfied": self.hypotheses_satisfied,
            "history": self.history,
            "defect_history": self.defect_history,
            "residuals": self.residuals,
        }


def _symmetrize(state: FieldState):
    for name in ("F", "A", "K", "Pi", "rho", "P"):
        u = getattr(state, name)
        u[...] = 0.5 * (u + u[::-1])


def seed_density(grid: Grid2D, eos: EosSpec, constants: Constants, u_central: float, radius: float):
    """Parabolic density ball used as the initial guess."""
    W, Z = grid.mesh()
    if u_central <= 0 or eos.kind == "dust":
        return np.zeros(grid.shape)
    tab = EnthalpyTable(eos, constants)
    prof = np.clip(1 - (W**2 + Z**2) / radius**2, 0.0, None)
    return tab.rho_from_u(u_central * prof)


def omega_field(grid: Grid2D, kind: str, value: float, scale: float | None = None):
    """Rotation law: ``constant`` or ``profile`` (value / (1 + (w/scale)^2))."""
    if kind == "constant":
        return float(value)
    if kind == "profile":
        W, _ = grid.mesh()
        return value / (1 + (W / scale) ** 2)
    raise ValueError(f"unknown rotation law {kind!r}")


def fixed_point_solve(grid: Grid2D, eos: EosSpec, constants: Constants, opts: SolverOptions,
                      Omega=0.0, callback=None):
    """Outer fixed-point iteration for a rotating equilibrium.

    Each outer iteration relaxes the Pi, F and A equations with K and the
    density frozen, recomputes K-tilde by path integration, damps
    ``K <- (1 - theta) K + theta K-tilde``, updates the density from the first
    integral with the central enthalpy held fixed, and refreshes the outer
    boundary data.  Errors from the timelike or gauge conditions are turned
    into a non-converged report carrying the location.

    Returns
    -------
    state : FieldState
    report : SolveReport
    """
    report = SolveReport()
    if np.ndim(Omega) and not opts.allow_differential:
        raise ValueError("differential rotation needs allow_differential=True (defects are reported only)")
    if np.ndim(Omega):
        report.hypotheses_satisfied = False
        warnings.warn("differential rotation: the K integration is not backed by the consistency identity",
                      HypothesisWarning, stacklevel=2)
        if opts.frame == "primed":
            raise ValueError("the primed frame solver supports rigid rotation only")
    try:
        state = FieldState.flat(grid, opts.frame, Omega, constants)
        state.equatorial_symmetry = opts.equatorial_symmetry
        log_lorentz_values(state, constants)
    except CausalLimitError as exc:
        report.message = f"causal limit: {exc}"
        return None, report
    table = EnthalpyTable(eos, constants) if (eos.kind == "barotropic") else None
    radius = opts.seed_radius or 0.5 * min(grid.wmax, grid.zmax)
    try:
        state.rho = seed_density(grid, eos, constants, opts.u_central, radius)
        state.P = eos_pressure(state.rho, eos, constants)[0]
    except EosRangeError as exc:
        report.message = f"EOS range: {exc}"
        return state, report
    state.first_integral_const = opts.u_central / constants.c**2 + log_lorentz_values(state, constants)[grid.j0, 0]
    set_outer_boundary(state, constants, opts.multipole_order)
    resid = {n: np.inf for n in EQUATIONS}
    for it in range(1, opts.max_outer + 1):
        old = state.copy()
        try:
            for name in ("Pi", "F", "A"):
                r_start = float(np.max(np.abs(equation_residual(state, name, constants))))
                tol_in = max(0.1 * opts.tol_outer, opts.inner_ratio * r_start)
                _, resid[name] = relax_elliptic(state, name, opts.max_sweeps, opts.relaxation, tol_in, constants)
            Kt = integrate_K(state, constants)
            dK = float(np.max(np.abs(Kt - state.K)))
            state.K = (1 - opts.theta) * state.K + opts.theta * Kt
            if table is not None:
                update_density(state, eos, constants, table, opts.u_central)
                if np.any(state.rho[:, -1] > 0) or np.any(state.rho[0] > 0) or np.any(state.rho[-1] > 0):
                    raise EosRangeError("matter reaches the outer boundary; enlarge the grid")
            if opts.equatorial_symmetry:
                _symmetrize(state)
            set_outer_boundary(state, constants, opts.multipole_order)
            apply_axis(state, "F")
            res_now = {n: float(np.max(np.abs(equation_residual(state, n, constants)))) for n in EQUATIONS}
        except (CausalLimitError, GaugeDegeneracyError, DivergenceError, EosRangeError) as exc:
            report.outer_iters = it
            report.message = f"{type(exc).__name__}: {exc}"
            return state, report
        delta = max(float(np.max(np.abs(getattr(state, n) - getattr(old, n)))) for n in ("F", "A", "Pi", "K", "rho"))
        lhs, rhs = consistency_defect_grid(state, constants)
        L = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
        entry = {"iter": it, "delta": delta, "K_mismatch": dK, **{f"r{n}": res_now[n] for n in EQUATIONS}}
        report.history.append(entry)
        report.defect_history.append(L)
        log.info("outer %d: delta=%.3e dK=%.3e res=%s", it, delta, dK, res_now)
        if callback is not None:
            callback(state, entry)
        report.outer_iters = it
        if max(delta, dK, *res_now.values()) <= opts.tol_outer:
            report.converged = True
            report.message = "converged"
            break
    else:
        report.message = f"not converged after {opts.max_outer} outer iterations"
    report.residuals = grid_residual_report(state, constants, eos, table)
    return state, report


def optimal_relaxation(grid: Grid2D) -> float:
    """SOR factor that is optimal for the model Poisson problem on ``grid``."""
    return 2 / (1 + np.sin(np.pi / max(grid.nw, grid.nz)))


def relax_to_fixed_K(state: FieldState, eos: EosSpec, constants: Constants = Constants(), tol: float = 1e-12,
                     relaxation: float | None = None, max_outer: int = 500, max_sweeps: int = 20000):
    """Solve the F, A, Pi equations and the first integral with K held fixed.

    All boundary values already stored in ``state`` are kept (Dirichlet); the
    first-integral constant must be set.  Used for manufactured interiors.
    Each pass reduces every residual by a factor of 100 before the density is
    refreshed, which keeps the work per pass proportional to the coupling.

    Returns
    -------
    state : FieldState
    passes : int
    """
    table = EnthalpyTable(eos, constants)
    omega = relaxation or optimal_relaxation(state.grid)
    for it in range(max_outer):
        old = state.copy()
        for name in ("Pi", "F", "A"):
            r0 = float(np.max(np.abs(equation_residual(state, name, constants))))
            relax_elliptic(state, name, max_sweeps, omega, max(0.1 * tol, 1e-2 * r0), constants)
        update_density(state, eos, constants, table, support="all")
        delta = max(float(np.max(np.abs(getattr(state, n) - getattr(old, n)))) for n in ("F", "A", "Pi", "rho"))
        res = max(float(np.max(np.abs(equation_residual(state, n, constants))))
                  - roundoff_floor(getattr(state, n), state.grid) for n in EQUATIONS)
        if max(delta, res) <= tol:
            return state, it + 1
    raise DivergenceError(f"fixed-K relaxation did not reach {tol:g} in {max_outer} iterations")


def unprimed_fields(state: FieldState, constants: Constants = Constants()):
    """(F, A, K) of the unprimed frame on every node."""
    if state.frame != "primed":
        return state.F, state.A, state.K
    F, A = primed_to_unprimed_values(state.F, state.A, state.Pi, state.omega_values(), constants)
    return F, A, state.K - state.F + F


def verify_corotation(state: FieldState, constants: Constants = Constants(), tol: float = 1e-10) -> dict:
    """Run the rigid-corotation checks on the interior nodes of a state."""
    from .corotating import verify_transform

    if not state.constant_omega:
        raise ValueError("corotation checks need a constant Omega")
    F, A, K = unprimed_fields(state, constants)
    g = state.grid
    jet = MetricJet(fd_jet(F, g), fd_jet(A, g), fd_jet(K, g), fd_jet(state.Pi, g))
    return verify_transform(jet, float(state.Omega), constants, tol)


FIELD_COLUMNS = ("w", "z", "F", "A", "K", "Pi", "rho", "P")


def fields_table(state: FieldState, constants: Constants = Constants()) -> np.ndarray:
    """Rows ``w, z, F, A, K, Pi, rho, P`` (unprimed potentials), z-outer order."""
    W, Z = state.grid.mesh()
    F, A, K = unprimed_fields(state, constants)
    return np.column_stack([a.ravel() for a in (W, Z, F, A, K, state.Pi, state.rho, state.P)])


def state_from_table(table: np.ndarray, Omega=0.0) -> FieldState:
    """Rebuild an unprimed :class:`FieldState` from :func:`fields_table` rows."""
    w = np.unique(table[:, 0])
    z = np.unique(table[:, 1])
    grid = Grid2D(float(w[-1]), float(z[-1]), len(w) - 1, len(z) - 1, wmin=float(w[0]), zmin=float(z[0]))
    cols = [table[:, i].reshape(grid.shape) for i in range(2, 8)]
    return FieldState(grid, *cols, frame="unprimed", Omega=Omega)


def equatorial_radius(state: FieldState, constants: Constants = Constants()) -> float:
    """Matter radius on the equatorial row, by linear interpolation of the enthalpy."""
    g = state.grid
    G = log_lorentz_values(state, constants)[g.j0]
    u = constants.c**2 * (state.first_integral_const - G)
    neg = np.nonzero(u <= 0)[0]
    if len(neg) == 0:
        return float(g.w[-1])
    i = int(neg[0])
    if i == 0:
        return 0.0
    return float(g.w[i - 1] + g.hw * u[i - 1] / (u[i - 1] - u[i]))
