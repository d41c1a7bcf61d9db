"""Grid-refinement studies: Ricci oracle and the K consistency defect.

Each study evaluates an error at a set of physical points shared by every
refinement level and reports observed orders ``log2(e_h / e_{h/2})``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .matter import EosSpec
from .sampling import fixture_metric, kerr_potentials, random_smooth_metric
from .solver import (
    FieldState,
    Grid2D,
    consistency_defect_grid,
    log_lorentz_values,
    relax_to_fixed_K,
    unprimed_to_primed_values,
    update_density,
)
from .tensor_core import Constants, ricci_brute_force, ricci_from_jet


def observed_orders(errors, hs):
    e, h = np.asarray(errors, dtype=float), np.asarray(hs, dtype=float)
    return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))


def ricci_convergence_study(h_list=(1e-2, 5e-3, 2.5e-3), n_fields: int = 20, seed: int = 0,
                            point=(1.1, 0.2), jobs: int = 1) -> dict:
    """Closed-form Ricci components against central-difference brute force.

    Returns per-h max discrepancy over ``n_fields`` random smooth metrics and
    the six components, the observed orders and their minimum.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 2 or any(a <= b for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h_list needs at least two strictly descending steps")
    rng = np.random.default_rng(seed)
    metrics = [random_smooth_metric(rng) for _ in range(n_fields)]

    def one(sm):
        exact = ricci_from_jet(sm.jet(*point)).as_array()
        return [float(np.max(np.abs(ricci_brute_force(sm.sampler, point, h).as_array() - exact))) for h in h_list]

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        rows = list(ex.map(one, metrics))
    errs = np.max(np.array(rows), axis=0)
    orders = observed_orders(errs, h_list)
    return {"h": h_list, "max_discrepancy": [float(e) for e in errs], "orders": [float(o) for o in orders],
            "min_order": float(min(orders)), "fields": n_fields, "seed": seed, "point": list(point)}


def minkowski_ricci_discrepancy(h_list=(1e-2, 5e-3, 2.5e-3), point=(1.0, 0.3)) -> list:
    """Brute-force Ricci of flat space (Pi = w), with Richardson extrapolation."""
    def flat(w, z):
        zero = 0 * np.asarray(w, dtype=float) * np.asarray(z, dtype=float)
        return zero, zero, zero, w + zero

    return [float(np.max(np.abs(ricci_brute_force(flat, point, h, richardson=True).as_array()))) for h in h_list]


def fixture_ricci(point=(1.0, 0.5)):
    """Closed-form Ricci components of the analytic fixture metric."""
    return ricci_from_jet(fixture_metric().jet(*point)).as_array()


# ---------------------------------------------------------------------------
# consistency defect


def manufactured_interior(n: int, frame: str = "unprimed", Omega: float = 0.2,
                          constants: Constants = Constants(), eos: EosSpec | None = None,
                          tol: float = 1e-11) -> FieldState:
    """Rigidly rotating fluid box away from the axis with prescribed K.

    Boundary values of F, A and Pi are fixed, K is a smooth prescribed field
    and the density follows from the first integral.  F, A and Pi are then
    solved so that the second-order equations and the first integral hold,
    which is all the consistency identity assumes.
    """
    eos = eos or EosSpec(kind="barotropic", gamma=5.0 / 3.0, Acoef=1.0)
    g = Grid2D(2.0, 1.0, n, n, wmin=0.5, zmin=-0.5)
    W, Z = g.mesh()
    st = FieldState.flat(g, frame, Omega, constants)
    st.Pi = W + 0.05 * W * Z**2
    F = 0.02 * np.exp(-(W**2) - Z**2) + 0.01 * Z
    A = 0.03 * W**2 * (1 + Z)
    if frame == "primed":
        F, A = unprimed_to_primed_values(F, A, st.Pi, Omega, constants)
    st.F, st.A = F, A
    st.K = 0.05 * np.sin(W) * np.cos(2 * Z) + 0.03 * Z
    st.first_integral_const = 0.05 / constants.c**2 + float(log_lorentz_values(st, constants).max())
    update_density(st, eos, constants, support="all")
    relax_to_fixed_K(st, eos, constants, tol=tol)
    return st


def kerr_vacuum_state(n: int, remap: float = 0.1) -> FieldState:
    """Kerr vacuum sampled on a box off the axis (no matter, K exact)."""
    g = Grid2D(2.0, 1.0, n, n, wmin=0.5, zmin=-0.5)
    W, Z = g.mesh()
    F, A, K, Pi = kerr_potentials(W, Z + 1.2, remap=remap)
    zero = np.zeros(g.shape)
    return FieldState(g, F, A, K, Pi, zero.copy(), zero.copy())


def _common(arr, n, n0):
    """Values at coarse nodes 4..n0-4 (the defect array starts at node 2)."""
    k = n // n0
    return arr[4 * k - 2:(n0 - 4) * k - 1:k, 4 * k - 2:(n0 - 4) * k - 1:k]


def consistency_refinement(levels=(16, 32, 64), kind: str = "unprimed", constants: Constants = Constants(),
                           jobs: int = 1) -> dict:
    """Defect ``|lhs - rhs|`` (and ``|lhs|``) at shared points under refinement.

    ``kind`` is ``unprimed`` or ``primed`` (manufactured rotating fluid) or
    ``vacuum`` (Kerr, where the right-hand side vanishes).
    """
    levels = [int(n) for n in levels]
    n0 = levels[0]
    if any(n % n0 for n in levels):
        raise ValueError("refinement levels must be multiples of the coarsest")

    def one(n):
        if kind == "vacuum":
            st = kerr_vacuum_state(n)
        else:
            st = manufactured_interior(n, kind, constants=constants)
        lhs, rhs = consistency_defect_grid(st, constants)
        return (float(np.max(np.abs(_common(lhs - rhs, n, n0)))), float(np.max(np.abs(_common(lhs, n, n0)))),
                float(np.max(np.abs(_common(rhs, n, n0)))), float(st.rho.min()))

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        rows = list(ex.map(one, levels))
    defect = [r[0] for r in rows]
    hs = [1.0 / n for n in levels]
    return {
        "kind": kind,
        "levels": levels,
        "defect": defect,
        "lhs": [r[1] for r in rows],
        "rhs": [r[2] for r in rows],
        "min_density": [r[3] for r in rows],
        "orders": [float(o) for o in observed_orders(defect, hs)],
    }
