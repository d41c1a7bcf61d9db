"""Randomized identity suite shared by the CLI and the tests.

Every check maps a batch of random admissible states to a per-point error
array (already scaled by the size of the terms involved); the suite passes if
every error is at most ``tol``.
"""
from __future__ import annotations

import warnings

import numpy as np

from . import jets as J
from .corotating import correction_terms, from_primed, primed_equivalence_map, primed_reduced_residuals, to_primed
from .matter import FluidPoint, lorentz_G, source_components, stress_energy
from .reduced_system import (
    einstein_from_reduced,
    einstein_residuals,
    equivalence_map,
    map_determinant,
    reduced_from_einstein,
    reduced_residuals,
    scaled_err,
)
from .sampling import random_state
from .tensor_core import (
    Constants,
    MetricJet,
    christoffel_from_metric,
    christoffel_lanczos,
    christoffel_lewis,
    lanczos_to_lewis,
    metric_components,
    ricci_from_jet,
    sigma,
    sigma_from_lanczos,
)


def metric_gradient(jet: MetricJet) -> np.ndarray:
    """``dg[a, mu, nu]`` from the jets of the potentials (a = 1 or 3)."""
    e2F = J.exp(2 * jet.F)
    comps = {
        (0, 0): e2F,
        (0, 2): e2F * jet.A,
        (1, 1): -J.exp(2 * jet.K - 2 * jet.F),
        (3, 3): -J.exp(2 * jet.K - 2 * jet.F),
        (2, 2): e2F * jet.A * jet.A - jet.Pi * jet.Pi / e2F,
    }
    shape = np.broadcast(*(p for v in comps.values() for p in v.parts())).shape
    dg = np.zeros((4, 4, 4) + shape)
    for (a, b), v in comps.items():
        for d in (1, 3):
            dg[d, a, b] = dg[d, b, a] = v.d(d)
    return dg


def _tensor_err(a, b):
    """Per-point max of |a - b| / (1 + |b|) over leading tensor indices."""
    e = scaled_err(a, b)
    return e.reshape(-1, e.shape[-1]).max(axis=0)


def _checks(jet: MetricJet, fl: FluidPoint, constants: Constants) -> dict:
    ls = lanczos_to_lewis(jet)
    P = jet.Pi.v
    out = {}
    out["lewis_pi_square"] = scaled_err(ls.Pi2, P**2)
    out["sigma_lanczos_vs_lewis"] = scaled_err(sigma(ls), sigma_from_lanczos(jet))

    G_lan = christoffel_lanczos(jet)
    out["christoffel_lanczos_vs_lewis"] = _tensor_err(G_lan, christoffel_lewis(ls))
    _, gi = metric_components(jet)
    out["christoffel_lanczos_vs_generic"] = _tensor_err(G_lan, christoffel_from_metric(gi, metric_gradient(jet)))

    se = stress_energy(jet, fl, constants)
    out["stress_trace"] = scaled_err(se.trace, fl.eps - 3 * fl.P, fl.eps, fl.P)
    S00, S02, S22, S11 = source_components(jet, fl, constants)
    for name, a, b in (("S00", S00, se.S_lower[0, 0]), ("S02", S02, se.S_lower[0, 2]),
                       ("S22", S22, se.S_lower[2, 2]), ("S11", S11, se.S_lower[1, 1])):
        out[f"source_{name}"] = scaled_err(a, b)

    # Pi-isolating combinations of the source and of the curvature
    f, k, l, m = ls.f.v, ls.k.v, ls.l.v, ls.m.v
    S = se.S_lower
    comb_s = (l * S[0, 0], -2 * k * S[0, 2], -f * S[2, 2])
    out["source_pi_combination"] = scaled_err(sum(comb_s), 2 * fl.P * P**2, *comb_s)
    R = ricci_from_jet(jet)
    comb_r = tuple(np.exp(m) / P * t for t in (l * R.R00, -2 * k * R.R02, -f * R.R22))
    out["curvature_pi_combination"] = scaled_err(sum(comb_r), jet.Pi.lap, *comb_r, jet.Pi.lap)

    # equivalence maps (unprimed and corotating)
    M, _ = equivalence_map(jet)
    out["unprimed_map_determinant"] = scaled_err(map_determinant(M), -np.exp(2 * jet.F.v))
    Q = einstein_residuals(jet, fl, constants)
    red = reduced_residuals(jet, fl, constants)
    direct = np.stack(np.broadcast_arrays(red.rF, red.rA, red.rPi))
    out["reduced_from_einstein"] = _tensor_err(reduced_from_einstein(jet, Q), direct)
    qd = np.stack(np.broadcast_arrays(Q.Q00, Q.Q02, Q.Q22))
    out["einstein_from_reduced"] = _tensor_err(einstein_from_reduced(jet, red.rF, red.rA, red.rPi), qd)
    out["k_equations_vs_einstein"] = np.maximum(
        scaled_err(red.rKd, P / 2 * (Q.Q11 - Q.Q33)), scaled_err(red.rKe, P * Q.Q13))

    pr = to_primed(jet, fl.Omega, constants)
    Mp, _, fp = primed_equivalence_map(jet, fl.Omega, constants)
    out["primed_map_determinant"] = scaled_err(map_determinant(Mp), fp**2, fp**2)
    out["primed_pi_square"] = scaled_err(pr.fp.v * pr.lp.v + pr.kp.v**2, P**2)
    out["primed_l"] = scaled_err(pr.lp.v, -np.exp(2 * pr.Fp.v) * pr.Ap.v**2 + np.exp(-2 * pr.Fp.v) * P**2)
    corr = correction_terms(pr, fl.Omega, constants)
    out["sigma_split"] = scaled_err(sigma(ls), sigma(pr.lewis()) + corr.W1, sigma(pr.lewis()), corr.W1)
    back = from_primed(pr, fl.Omega, constants)
    out["primed_round_trip"] = np.max(
        [scaled_err(a, b) for x, y in zip((back.F, back.A, back.K, back.Pi), (jet.F, jet.A, jet.K, jet.Pi))
         for a, b in zip(x.broadcast().parts(), y.broadcast().parts())], axis=0)
    pres = primed_reduced_residuals(pr, fl, constants)
    om = np.asarray(fl.Omega.v) / constants.c
    em = np.exp(m)
    t1 = em / fp * (Q.Q00 + 2 * om * Q.Q02 + om**2 * Q.Q22)
    t2 = 2 * em / fp**2 * ((k + om * l) * Q.Q00 + (f + om**2 * l) * Q.Q02 + om * (f - om * k) * Q.Q22)
    out["primed_F_equation_vs_einstein"] = scaled_err(pres.rF, t1)
    out["primed_A_equation_vs_einstein"] = scaled_err(pres.rA, t2)

    # rigid-rotation relations, evaluated with the local value of Omega
    e2F, e2Fp = np.exp(2 * jet.F.v), np.exp(2 * pr.Fp.v)
    out["corotating_quadratic_invariant"] = scaled_err(
        e2Fp * pr.Ap.v**2 - P**2 / e2Fp, e2F * jet.A.v**2 - P**2 / e2F, e2Fp * pr.Ap.v**2, P**2 / e2Fp)
    out["lorentz_equals_primed_F"] = scaled_err(lorentz_G(jet, fl.Omega.v, constants).v, pr.Fp.v)
    return {k_: np.broadcast_to(np.asarray(v, dtype=float), np.shape(P)) for k_, v in out.items()}


def _point_inputs(jet: MetricJet, fl: FluidPoint, i: int) -> dict:
    part = lambda x: [float(np.broadcast_to(p, np.shape(jet.Pi.v))[i]) for p in x.parts()]  # noqa: E731
    n = np.shape(jet.Pi.v)
    at = lambda a: float(np.broadcast_to(a, n)[i])  # noqa: E731
    return {
        "F": part(jet.F), "A": part(jet.A), "K": part(jet.K), "Pi": part(jet.Pi),
        "rho": at(fl.rho), "P": at(fl.P), "eps": at(fl.eps), "Omega": part(fl.Omega),
    }


def run_identity_suite(seed: int = 42, points: int = 200, tol: float = 1e-10,
                       constants: Constants = Constants()) -> dict:
    """Evaluate every algebraic identity on ``points`` random states.

    Returns
    -------
    dict
        ``checks`` (max scaled error per identity), ``passed`` and, on
        failure, ``first_failure`` with the offending state so it can be
        replayed.
    """
    report = {"seed": int(seed), "points": int(points), "tol": float(tol),
              "constants": {"c": constants.c, "G": constants.Ggrav}}
    if points <= 0:
        warnings.warn("identity suite run on zero points: vacuous pass", UserWarning, stacklevel=2)
        report.update(checks={}, passed=True)
        return report
    rng = np.random.default_rng(seed)
    jet, fl = random_state(rng, points, constants)
    errs = _checks(jet, fl, constants)
    report["checks"] = {k: float(np.max(v)) for k, v in errs.items()}
    failing = [k for k, v in errs.items() if not np.all(v <= tol)]
    report["passed"] = not failing
    if failing:
        name = failing[0]
        i = int(np.argmax(np.where(np.isfinite(errs[name]), errs[name], np.inf)))
        report["first_failure"] = {"check": name, "index": i, "error": float(errs[name][i]),
                                   "inputs": _point_inputs(jet, fl, i)}
    return report
