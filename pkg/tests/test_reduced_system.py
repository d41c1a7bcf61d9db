import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from astar.errors import AxisSingularityError, GaugeDegeneracyError, HypothesisWarning
from astar.jets import Jet
from astar.matter import FluidPoint
from astar.reduced_system import (
    consistency_defect,
    einstein_from_reduced,
    einstein_residuals,
    equivalence_check,
    equivalence_map,
    field_operators,
    identity_suite,
    map_determinant,
    reduced_from_einstein,
    reduced_residuals,
    resolve_k_gradient,
)
from astar.sampling import random_jet, random_state
from astar.tensor_core import Constants, MetricJet, ricci_from_jet
from oracles import jet_field_sympy, kerr_sympy, vacuum_residuals_sympy

CONST = Constants()


def minkowski(w):
    return MetricJet(Jet(0.0), Jet(0.0), Jet(0.0), Jet(w, 1.0))


@pytest.fixture(scope="module")
def kerr_jets():
    coords, fields = kerr_sympy(remap=sp.Rational(1, 10))
    return coords, fields, jet_field_sympy(fields, coords)


def test_minkowski_residuals_vanish():
    red = reduced_residuals(minkowski(1.7), FluidPoint.vacuum(0.0))
    for name, v in red.as_dict().items():
        assert np.all(v == 0), name
    Q = einstein_residuals(minkowski(1.7), FluidPoint.vacuum(0.0))
    assert all(np.all(v == 0) for v in Q.as_dict().values())


def test_k_gradient_recombines(rng):
    jet = random_jet(rng, 50)
    RHd, RHe = rng.normal(size=(2, 50))
    kt1, kt3 = resolve_k_gradient(jet.Pi, RHd, RHe)
    P1, P3 = jet.Pi.d1, jet.Pi.d3
    assert np.allclose(P1 * kt1 - P3 * kt3, RHd, atol=1e-12)
    assert np.allclose(P3 * kt1 + P1 * kt3, RHe, atol=1e-12)


def test_k_residuals_vanish_at_resolved_gradient(rng):
    jet, fl = random_state(rng, 50)
    red = reduced_residuals(jet, fl)
    K = Jet(jet.K.v, red.kt1, red.kt3)
    red2 = reduced_residuals(MetricJet(jet.F, jet.A, K, jet.Pi), fl)
    assert np.max(np.abs(red2.rKd)) < 1e-12 and np.max(np.abs(red2.rKe)) < 1e-12


def test_manufactured_sources_static(rng):
    # choose P and eps so the Pi and F equations hold exactly for a static, A = 0 state
    base = random_jet(rng, 40)
    jet = MetricJet(base.F, Jet(np.zeros(40)), base.K, base.Pi)
    LF, LA, LPi = field_operators(jet)
    kappa = CONST.kappa
    conf = np.exp(2 * (jet.K.v - jet.F.v))
    P = LPi / (2 * kappa * conf * jet.Pi.v)
    eps = 2 * LF / (kappa * conf) - 3 * P
    fl = FluidPoint(np.abs(eps), P, eps, 0 * P, Jet(np.zeros(40)))
    red = reduced_residuals(jet, fl)
    assert np.max(np.abs(red.rF)) < 1e-12
    assert np.max(np.abs(red.rPi)) < 1e-12
    assert np.all(red.rA == 0)


def test_q13_is_r13(rng):
    jet, fl = random_state(rng, 30)
    assert np.array_equal(einstein_residuals(jet, fl).Q13, ricci_from_jet(jet).R13)


def test_map_determinant_example():
    jet = MetricJet(Jet(0.3), Jet(0.2, 0.1), Jet(0.1), Jet(1.2, 1.0))
    M, D = equivalence_map(jet)
    assert np.isclose(map_determinant(M), -np.exp(0.6), rtol=1e-13)
    assert np.all(np.diagonal(D) > 0)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=25)
def test_equivalence_round_trip(seed):
    jet, fl = random_state(np.random.default_rng(seed), 20)
    rep = equivalence_check(jet, fl)
    assert rep["det_error"] < 1e-12
    assert rep["map_error"] < 1e-11
    assert rep["inverse_error"] < 1e-11


def test_perturbation_maps_through(rng):
    # perturbing only Q02 changes rA by D11 * dQ02 and rPi by -2 k D22 dQ02, rF not at all
    jet, fl = random_state(rng, 10)
    Q = einstein_residuals(jet, fl)
    base = reduced_from_einstein(jet, Q)
    Q.Q02 = Q.Q02 + 1e-3
    pert = reduced_from_einstein(jet, Q)
    M, D = equivalence_map(jet)
    expect = np.einsum("ij...,j...->i...", D, M[:, 1]) * 1e-3
    assert np.allclose(pert - base, expect, atol=1e-14)
    assert np.all(pert[0] == base[0])
    back = einstein_from_reduced(jet, *pert)
    assert np.allclose(back[1], Q.Q02, atol=1e-12)


def test_identity_suite_values(rng):
    jet, fl = random_state(rng, 100)
    rep = identity_suite(jet, fl)
    assert rep["source_pi"] < 1e-12 and rep["curvature_pi"] < 1e-12
    dust = FluidPoint(fl.rho, 0 * fl.P, fl.eps, fl.u, fl.Omega)
    flat_pi = MetricJet(jet.F, jet.A, jet.K, Jet(jet.Pi.v, jet.Pi.d1, jet.Pi.d3, 0.2, 0.1, -0.2))
    assert identity_suite(flat_pi, dust)["harmonic_pi"] == 0.0
    assert identity_suite(jet, dust)["harmonic_pi"] == pytest.approx(np.max(np.abs(jet.Pi.lap)))


def test_kerr_reduced_residuals_match_symbolic(kerr_jets):
    coords, fields, jf = kerr_jets
    pts = [(1.1, 0.9), (0.7, 1.6), (1.5, -0.4)]
    for p in pts:
        sym = vacuum_residuals_sympy(fields, coords, p)
        assert max(abs(x) for x in sym) < 1e-20
        red = reduced_residuals(jf(*p), FluidPoint.vacuum())
        num = [red.rF, red.rA, red.rPi, red.rKd, red.rKe]
        assert max(abs(float(x)) for x in num) < 1e-10


def test_vacuum_consistency_defect_second_order(kerr_jets):
    _, _, jf = kerr_jets
    vac = lambda w, z: FluidPoint.vacuum(0.0, np.shape(w))  # noqa: E731
    lhs = []
    hs = (1e-2, 5e-3, 2.5e-3)
    for h in hs:
        lo, rhs = consistency_defect(jf, vac, (1.1, 0.9), h)
        assert rhs == 0.0
        lhs.append(abs(float(lo)))
    orders = np.log2(np.array(lhs[:-1]) / np.array(lhs[1:]))
    assert np.all(np.abs(orders - 2) < 0.1)
    assert lhs[-1] < 1e-5


def test_variable_omega_warns():
    jf = lambda w, z: MetricJet(Jet(0.01 * z), Jet(0.0), Jet(0.0), Jet(w, 1.0))  # noqa: E731
    fl = lambda w, z: FluidPoint(0.1, 0.01, 0.1, 0.0, Jet(0.2, 0.05))  # noqa: E731
    with pytest.warns(HypothesisWarning):
        consistency_defect(jf, fl, (1.0, 0.2), 1e-3)
    fl_const = lambda w, z: FluidPoint(0.1, 0.01, 0.1, 0.0, Jet(0.2))  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("error", HypothesisWarning)
        consistency_defect(jf, fl_const, (1.0, 0.2), 1e-3)


def test_gauge_and_axis_errors():
    with pytest.raises(GaugeDegeneracyError):
        reduced_residuals(MetricJet(Jet(0.0), Jet(0.0), Jet(0.0), Jet(1.0)), FluidPoint.vacuum())
    with pytest.raises(AxisSingularityError):
        reduced_residuals(minkowski(0.0), FluidPoint.vacuum())
