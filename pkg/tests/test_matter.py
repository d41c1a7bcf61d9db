import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from astar.errors import CausalLimitError, CausalityViolationError, EosRangeError
from astar.jets import Jet
from astar.matter import (
    EnthalpyTable,
    EosSpec,
    FluidPoint,
    enthalpy_u,
    eos_pressure,
    euler_residual,
    first_integral_residual,
    four_velocity,
    lorentz_G,
    rho_from_u,
    rho_max,
    source_components,
    stress_energy,
)
from astar.sampling import SmoothField, fixture_metric, random_state
from astar.tensor_core import Constants, MetricJet, covariant_divergence_brute_force

POLY = EosSpec(kind="barotropic", gamma=5 / 3, Acoef=1.0)


def minkowski(w):
    return MetricJet(Jet(0.0), Jet(0.0), Jet(0.0), Jet(w, 1.0))


def test_pressure_examples():
    assert eos_pressure(0.0, POLY)[0] == 0.0
    assert np.isclose(eos_pressure(1e-3, POLY)[0], 1e-5, rtol=1e-12)
    P, dP = eos_pressure(np.array([0.1, 2.0]), EosSpec(kind="dust"))
    assert np.all(P == 0) and np.all(dP == 0)


def test_pressure_derivative_and_causality():
    spec = EosSpec(gamma=1.5, Acoef=0.8, upsilon=(0.3, -0.1))
    r, h = 0.05, 1e-6
    dfd = (eos_pressure(r + h, spec)[0] - eos_pressure(r - h, spec)[0]) / (2 * h)
    assert np.isclose(eos_pressure(r, spec)[1], dfd, rtol=1e-8)
    with pytest.raises(CausalityViolationError):
        eos_pressure(10 * rho_max(POLY), POLY)


def test_spec_validation():
    for kw in ({"gamma": 2.0}, {"gamma": 1.0}, {"Acoef": 0.0}, {"kind": "stiff"}):
        with pytest.raises(ValueError):
            EosSpec(**kw)


def test_enthalpy_examples():
    assert enthalpy_u(0.0, POLY) == 0.0
    assert np.all(enthalpy_u(np.array([0.3, 1.0]), EosSpec(kind="dust")) == 0)
    big_c = Constants(c=1e6)
    newton = 1.0 * (5 / 3) / (2 / 3) * 0.1 ** (2 / 3)
    assert abs(enthalpy_u(0.1, POLY, big_c) / newton - 1) < 1e-4


def test_enthalpy_closed_form_without_upsilon():
    # Upsilon = 0: u = c^2 gamma/(gamma-1) log(1 + y), y = A rho^(gamma-1)/c^2
    rho = np.array([1e-6, 1e-3, 0.05, 0.3])
    y = rho ** (2 / 3)
    assert np.allclose(enthalpy_u(rho, POLY), 2.5 * np.log1p(y), rtol=1e-12)


@given(st.floats(1e-8, 0.9))
def test_enthalpy_round_trip(frac):
    spec = EosSpec(gamma=1.4, Acoef=0.7, upsilon=(0.2,))
    rho = frac * rho_max(spec)
    assert abs(rho_from_u(enthalpy_u(rho, spec), spec) - rho) <= 1e-10 * (1 + rho)


def test_enthalpy_table_matches_quadrature():
    spec = EosSpec(gamma=1.5, Acoef=1.0, upsilon=(0.3, -0.1))
    tab = EnthalpyTable(spec)
    rho = np.array([1e-9, 1e-5, 1e-3, 0.02, 0.5 * rho_max(spec)])
    assert np.allclose(tab.u_from_rho(rho), enthalpy_u(rho, spec), rtol=1e-12)
    assert np.allclose(tab.rho_from_u(enthalpy_u(rho, spec)), rho, rtol=1e-10)
    assert np.all(np.diff(tab.rho_from_u(np.linspace(0, 0.9 * tab.u_max, 50))) > 0)
    with pytest.raises(EosRangeError):
        tab.rho_from_u(2 * tab.u_max)
    with pytest.raises(EosRangeError):
        EnthalpyTable(EosSpec(kind="dust"))


def test_lorentz_examples():
    assert lorentz_G(minkowski(1.0), 0.0).v == 0.0
    assert np.isclose(lorentz_G(minkowski(1.0), 0.5).v, 0.5 * np.log(0.75))
    with pytest.raises(CausalLimitError):
        lorentz_G(minkowski(1.0), 1.0)


def test_four_velocity_examples(rng):
    U = four_velocity(minkowski(1.0), 0.0)
    assert np.allclose(U.U_upper, [1, 0, 0, 0]) and np.allclose(U.U_lower, [1, 0, 0, 0])
    U = four_velocity(minkowski(1.0), 0.5)
    G = 0.5 * np.log(0.75)
    assert np.isclose(U.U_lower[2], -np.exp(-G) * 0.5)
    jet, fl = random_state(rng, 200)
    U = four_velocity(jet, fl.Omega)
    assert np.allclose(np.einsum("m...,m...->...", U.U_upper, U.U_lower), 1.0, atol=1e-12)


def test_stress_energy_examples(rng):
    jet, fl = random_state(rng, 100)
    fl = FluidPoint(np.ones(100), 0.1 * np.ones(100), np.ones(100), np.zeros(100), fl.Omega)
    se = stress_energy(jet, fl)
    assert np.allclose(se.trace, 0.7, atol=1e-12)
    vac = stress_energy(jet, FluidPoint.vacuum(0.2, (100,)))
    assert np.all(vac.T_upper == 0) and np.all(vac.S_lower == 0)
    jet, fl = random_state(rng, 100)
    S00, S02, S22, S11 = source_components(jet, fl)
    S = stress_energy(jet, fl).S_lower
    assert np.allclose([S00, S02, S22, S11], [S[0, 0], S[0, 2], S[2, 2], S[1, 1]], atol=1e-12)
    assert np.array_equal(S[1, 1], S[3, 3])


def test_divergence_time_and_azimuthal_components_vanish():
    sm = fixture_metric()
    spec = EosSpec(gamma=1.8, Acoef=0.6)
    Om = SmoothField(np.array([[0.1, 0.05], [0.08, 0.0]]))
    rhoF = SmoothField(np.array([[0.2, 0.01], [0.03, 0.02]]))

    def T(w, z):
        r = rhoF.value(w, z)
        return stress_energy(sm.jet(w, z), FluidPoint(r, eos_pressure(r, spec)[0], r, 0 * r, Om.jet(w, z))).T_upper

    div = covariant_divergence_brute_force(sm.sampler, T, (1.0, 0.5), 1e-4)
    assert abs(div[0]) <= 1e-9 and abs(div[2]) <= 1e-9
    # the meridional components are the Euler residuals up to the factor e^{2F-2K}
    jet = sm.jet(1.0, 0.5)
    r = rhoF.jet(1.0, 0.5)
    P, dPdr = eos_pressure(r.v, spec)
    fl = FluidPoint(r.v, P, r.v, 0.0, Om.jet(1.0, 0.5))
    res = euler_residual(jet, fl, (dPdr * r.d1, dPdr * r.d3))
    fac = np.exp(2 * jet.F.v - 2 * jet.K.v)
    assert np.allclose([div[1], div[3]], [fac * res[0], fac * res[1]], atol=1e-8)


def _first_integral_fluid(spec, const, w, z, sm, Om):
    jet = sm.jet(w, z)
    G = lorentz_G(jet, Om).v
    u = const - G
    rho = rho_from_u(u, spec)
    return jet, FluidPoint(rho, eos_pressure(rho, spec)[0], rho, u, Jet.const(Om))


def test_euler_vanishes_on_first_integral():
    sm, spec, Om, const, h = fixture_metric(), EosSpec(gamma=1.6, Acoef=1.0), 0.3, 0.2, 1e-5
    jet, fl = _first_integral_fluid(spec, const, 1.0, 0.5, sm, Om)
    Pw = [_first_integral_fluid(spec, const, 1.0 + s, 0.5, sm, Om)[1].P for s in (h, -h)]
    Pz = [_first_integral_fluid(spec, const, 1.0, 0.5 + s, sm, Om)[1].P for s in (h, -h)]
    dP = ((Pw[0] - Pw[1]) / (2 * h), (Pz[0] - Pz[1]) / (2 * h))
    res = euler_residual(jet, fl, dP)
    assert max(abs(res[0]), abs(res[1])) <= 1e-9
    G = lorentz_G(jet, Om)
    assert abs(first_integral_residual(fl, G, const)) <= 1e-12


def test_euler_trivial_cases():
    jet = fixture_metric().jet(1.0, 0.5)
    vac = FluidPoint.vacuum(0.2)
    assert euler_residual(jet, vac, (0.0, 0.0)) == (0.0, 0.0)
    flat = minkowski(1.0)
    dust = FluidPoint(0.3, 0.0, 0.3, 0.0, Jet.const(0.0))
    assert euler_residual(flat, dust, (0.0, 0.0)) == (0.0, 0.0)
    assert first_integral_residual(FluidPoint.vacuum(), 0.4, 0.4) == 0.0
