import warnings

import numpy as np
import pytest

from astar.errors import EosRangeError, HypothesisWarning
from astar.matter import EnthalpyTable, EosSpec
from astar.solver import (
    FieldState,
    Grid2D,
    SolverOptions,
    equatorial_radius,
    fd_jet,
    fields_table,
    fixed_point_solve,
    grid_residual_report,
    integrate_gradient,
    optimal_relaxation,
    primed_to_unprimed_values,
    relax_elliptic,
    state_from_table,
    unprimed_fields,
    unprimed_to_primed_values,
    update_density,
    verify_corotation,
)
from astar.tensor_core import Constants

POLY = EosSpec(gamma=5 / 3, Acoef=1.0)


def test_grid_validation():
    g = Grid2D(4.0, 2.0, 16, 32)
    assert g.zmin == -2.0 and g.shape == (33, 17) and g.on_axis
    assert np.isclose(g.hw, 0.25) and g.z[g.j0] == 0.0
    W, Z = g.mesh()
    assert W.shape == g.shape and np.all(W[:, 0] == 0)
    for args in ((4.0, 2.0, 8, 32), (4.0, 2.0, 16, 15)):
        with pytest.raises(ValueError):
            Grid2D(*args)
    with pytest.raises(ValueError):
        Grid2D(1.0, 1.0, 16, 16, wmin=2.0)


def test_fd_jet_exact_for_quadratics():
    g = Grid2D(2.0, 1.0, 16, 16, wmin=0.5)
    W, Z = g.mesh()
    j = fd_jet(1 + 2 * W - Z + 0.5 * W**2 + 0.3 * W * Z - 0.7 * Z**2, g)
    Wi, Zi = W[1:-1, 1:-1], Z[1:-1, 1:-1]
    assert np.allclose(j.d1, 2 + Wi + 0.3 * Zi, atol=1e-12)
    assert np.allclose(j.d3, -1 + 0.3 * Wi - 1.4 * Zi, atol=1e-12)
    assert np.allclose([j.d11, j.d13, j.d33], [[[1.0]], [[0.3]], [[-1.4]]], atol=1e-10)


def test_integrate_gradient_second_order():
    errs = []
    for n in (16, 32, 64):
        g = Grid2D(2.0, 1.0, n, n)
        W, Z = g.mesh()
        K = np.sin(W) * np.cos(2 * Z) + 0.3 * Z
        Ki = integrate_gradient(np.cos(W) * np.cos(2 * Z), -2 * np.sin(W) * np.sin(2 * Z) + 0.3, g, K_O=0.0)
        errs.append(np.max(np.abs(Ki - K)))
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(np.abs(orders - 2) < 0.1)


def test_relax_keeps_flat_space_flat():
    st = FieldState.flat(Grid2D(4.0, 4.0, 16, 32))
    for name in ("Pi", "F", "A"):
        u, res = relax_elliptic(st, name, 50, 1.5)
        assert res == 0.0
    W, _ = st.grid.mesh()
    assert np.all(st.F == 0) and np.all(st.A == 0) and np.array_equal(st.Pi, W)
    with pytest.raises(ValueError):
        relax_elliptic(st, "K")


def test_relax_pi_reaches_discrete_harmonic():
    # quadratic harmonic functions are exact for the five-point stencil
    g = Grid2D(2.0, 0.5, 32, 32, wmin=0.5)
    W, Z = g.mesh()
    exact = W + 0.1 * (W**2 - Z**2)
    st = FieldState.flat(g)
    st.Pi = exact.copy()
    st.Pi[1:-1, 1:-1] = W[1:-1, 1:-1]
    _, res = relax_elliptic(st, "Pi", 20000, optimal_relaxation(g), 1e-12)
    assert np.max(np.abs(st.Pi - exact)) < 1e-11


def test_relax_f_second_order():
    # exterior point-mass potential of the axisymmetric Laplacian, off the axis
    errs = []
    for n in (16, 32):
        g = Grid2D(2.0, 0.5, n, n, wmin=0.5)
        W, Z = g.mesh()
        exact = -0.1 / np.hypot(W, Z + 1.5)
        st = FieldState.flat(g)
        st.F = exact.copy()
        st.F[1:-1, 1:-1] = 0.0
        relax_elliptic(st, "F", 20000, optimal_relaxation(g), 1e-13)
        errs.append(np.max(np.abs(st.F - exact)))
    assert 3.5 < errs[0] / errs[1] < 4.5


def test_update_density_cases():
    g = Grid2D(4.0, 4.0, 32, 32)
    st = FieldState.flat(g)
    W, Z = g.mesh()
    # weak potential well at the centre plus a separate well near the outer corner
    st.F = -0.01 * np.exp(-(W**2 + Z**2)) - 0.01 * np.exp(-((W - 3.5) ** 2 + (Z - 3.5) ** 2) * 4)
    tab = EnthalpyTable(POLY)
    rho, u = update_density(st, POLY, Constants(), tab, u_central=1e-3)
    assert np.isclose(u[g.j0, 0], 1e-3, rtol=1e-12)
    assert np.isclose(rho[g.j0, 0], tab.rho_from_u(1e-3), rtol=1e-12)
    assert np.all(rho[W**2 + Z**2 > 9] == 0)
    assert np.array_equal(st.P > 0, rho > 0)
    rho_all, _ = update_density(st, POLY, Constants(), tab, support="all")
    assert np.any(rho_all[(W > 3) & (Z > 3)] > 0)
    with pytest.raises(EosRangeError):
        update_density(st, EosSpec(kind="dust"), Constants(), u_central=1e-3)


def test_solver_options_validation():
    for kw in ({"theta": 0.0}, {"relaxation": 2.0}, {"tol_outer": 0.0}, {"u_central": -1.0}, {"frame": "x"}):
        with pytest.raises(ValueError):
            SolverOptions(**kw)


def test_vacuum_solve_returns_flat_space():
    g = Grid2D(4.0, 4.0, 32, 64)
    st, rep = fixed_point_solve(g, POLY, Constants(), SolverOptions(u_central=0.0, tol_outer=1e-10, max_outer=5))
    assert rep.converged and rep.outer_iters == 1
    W, _ = g.mesh()
    assert np.all(st.F == 0) and np.all(st.A == 0) and np.all(st.K == 0) and np.array_equal(st.Pi, W)
    for key in ("Q00", "Q13", "rF", "rKd", "K_mismatch", "consistency"):
        assert rep.residuals[key]["max_abs"] == 0.0, key


def test_causal_limit_reported():
    g = Grid2D(4.0, 4.0, 16, 16)
    st, rep = fixed_point_solve(g, POLY, Constants(), SolverOptions(), Omega=0.3)
    assert st is None and not rep.converged
    assert rep.message.startswith("causal limit")


def test_differential_rotation_needs_opt_in():
    g = Grid2D(4.0, 4.0, 16, 16)
    W, _ = g.mesh()
    prof = 0.01 / (1 + W**2)
    with pytest.raises(ValueError):
        fixed_point_solve(g, POLY, Constants(), SolverOptions(), Omega=prof)
    with pytest.warns(HypothesisWarning):
        _, rep = fixed_point_solve(g, POLY, Constants(), SolverOptions(allow_differential=True, max_outer=1),
                                   Omega=prof)
    assert not rep.hypotheses_satisfied


def test_flat_report_is_zero():
    st = FieldState.flat(Grid2D(4.0, 4.0, 16, 16), Omega=0.1)
    rep = grid_residual_report(st)
    assert all(v["max_abs"] == 0.0 for k, v in rep.items() if not k.startswith("Q"))
    assert all(v["max_abs"] == 0.0 for k, v in rep.items() if k.endswith("_scaled"))


def test_primed_flat_state_and_values_round_trip(rng):
    g = Grid2D(4.0, 4.0, 16, 16)
    st = FieldState.flat(g, "primed", 0.1)
    F, A, K = unprimed_fields(st)
    assert np.allclose(F, 0, atol=1e-14) and np.allclose(A, 0, atol=1e-14) and np.allclose(K, 0, atol=1e-14)
    assert verify_corotation(st)["passed"]
    F0, A0, Pi0 = rng.uniform(-0.2, 0.2, (2, 50)).tolist() + [rng.uniform(0.5, 2, 50)]
    Fp, Ap = unprimed_to_primed_values(np.array(F0), np.array(A0), Pi0, 0.15)
    F1, A1 = primed_to_unprimed_values(Fp, Ap, Pi0, 0.15)
    assert np.allclose(F1, F0, atol=1e-13) and np.allclose(A1, A0, atol=1e-13)


def test_fields_table_round_trip():
    g = Grid2D(3.0, 2.0, 16, 32)
    st = FieldState.flat(g)
    W, Z = g.mesh()
    st.F, st.K, st.rho = 0.01 * W * Z, 0.02 * Z**2, np.exp(-(W**2) - Z**2)
    tab = fields_table(st)
    assert tab.shape == ((g.nz + 1) * (g.nw + 1), 8)
    assert np.array_equal(tab[: g.nw + 1, 1], np.full(g.nw + 1, g.zmin))
    back = state_from_table(tab, 0.0)
    assert back.grid == g
    for n in ("F", "A", "K", "Pi", "rho", "P"):
        assert np.array_equal(getattr(back, n), getattr(st, n))


def test_equatorial_radius_flat():
    g = Grid2D(4.0, 4.0, 32, 32)
    st = FieldState.flat(g)
    st.first_integral_const = 0.0
    assert equatorial_radius(st) == 0.0
    st.first_integral_const = 1e-3
    assert equatorial_radius(st) == 4.0


@pytest.mark.slow
def test_star_report_and_history(weakstar_run):
    st, rep, history, _ = weakstar_run
    assert rep.converged and len(history) == rep.outer_iters == len(rep.defect_history)
    assert history[-1]["delta"] <= 1e-8 and history[-1]["K_mismatch"] <= 1e-8
    r = rep.residuals
    assert r["first_integral"]["max_abs"] < 1e-12
    assert r["consistency"]["max_abs"] < 1e-8
    assert set(r["Q22"]) == {"max_abs", "l2", "argmax"}
    # equatorial symmetry and the axis conditions hold on the output
    for name in ("F", "A", "K", "Pi", "rho"):
        u = getattr(st, name)
        assert np.array_equal(u, u[::-1]), name
    assert np.all(st.A[:, 0] == 0) and np.all(st.Pi[:, 0] == 0)
    assert st.F.min() < 0 and st.A.max() > 0


@pytest.mark.slow
def test_primed_frame_solve_agrees(weakstar_run, weakstar_config):
    st, _, _, _ = weakstar_run
    cfg = weakstar_config
    opts = cfg.solver_options()
    opts.frame = "primed"
    sp_, rep = fixed_point_solve(cfg.grid(), cfg.eos(), cfg.constants(), opts, cfg.omega())
    assert rep.converged
    F, A, K = unprimed_fields(sp_, cfg.constants())
    # the two frames discretize equivalent but different equations
    assert np.max(np.abs(F - st.F)) < 1e-9
    assert np.max(np.abs(A - st.A)) < 5e-8
    assert np.max(np.abs(K - st.K)) < 1e-9
    assert np.max(np.abs(sp_.rho - st.rho)) < 1e-9
    assert rep.residuals["K_mismatch"]["max_abs"] < 1e-8
