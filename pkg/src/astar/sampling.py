"""Random admissible states and analytic smooth fields for verification."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npoly

from .jets import Jet
from .matter import FluidPoint
from .tensor_core import Constants, MetricJet


@dataclass
class SmoothField:
    """Polynomial plus Gaussian bumps plus plane waves, with exact jets.

    ``coef[i, j]`` multiplies ``w**i * z**j``.  Each bump is
    ``(amp, w0, z0, alpha)`` for ``amp exp(-alpha ((w-w0)^2 + (z-z0)^2))`` and
    each wave is ``(amp, kw, kz, phase)`` for ``amp sin(kw w + kz z + phase)``.
    """

    coef: np.ndarray
    bumps: list = field(default_factory=list)
    waves: list = field(default_factory=list)

    def __post_init__(self):
        self.coef = np.atleast_2d(np.asarray(self.coef, dtype=float))

    def _poly(self, w, z, dw, dz):
        c = self.coef
        if dw:
            c = npoly.polyder(c, dw, axis=0)
        if dz:
            c = npoly.polyder(c, dz, axis=1)
        return npoly.polyval2d(w, z, c)

    def value(self, w, z):
        return self.jet(w, z).v

    def jet(self, w, z) -> Jet:
        w = np.asarray(w, dtype=float)
        z = np.asarray(z, dtype=float)
        parts = [self._poly(w, z, a, b) for a, b in ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))]
        for amp, w0, z0, al in self.bumps:
            x, y = w - w0, z - z0
            g = amp * np.exp(-al * (x * x + y * y))
            parts[0] = parts[0] + g
            parts[1] = parts[1] - 2 * al * x * g
            parts[2] = parts[2] - 2 * al * y * g
            parts[3] = parts[3] + (4 * al * al * x * x - 2 * al) * g
            parts[4] = parts[4] + 4 * al * al * x * y * g
            parts[5] = parts[5] + (4 * al * al * y * y - 2 * al) * g
        for amp, kw, kz, ph in self.waves:
            arg = kw * w + kz * z + ph
            s, c = amp * np.sin(arg), amp * np.cos(arg)
            parts[0] = parts[0] + s
            parts[1] = parts[1] + kw * c
            parts[2] = parts[2] + kz * c
            parts[3] = parts[3] - kw * kw * s
            parts[4] = parts[4] - kw * kz * s
            parts[5] = parts[5] - kz * kz * s
        return Jet(*np.broadcast_arrays(*parts))


@dataclass
class SmoothMetric:
    """Four smooth fields giving a Lanczos metric on a region off the axis."""

    F: SmoothField
    A: SmoothField
    K: SmoothField
    Pi: SmoothField

    def jet(self, w, z) -> MetricJet:
        return MetricJet(self.F.jet(w, z), self.A.jet(w, z), self.K.jet(w, z), self.Pi.jet(w, z))

    def sampler(self, w, z):
        return (self.F.value(w, z), self.A.value(w, z), self.K.value(w, z), self.Pi.value(w, z))


def fixture_metric() -> SmoothMetric:
    """Gaussian F, cubic A, bilinear K and Pi = w."""
    coefA = np.zeros((3, 2))
    coefA[2, 1] = 0.05
    coefK = np.zeros((2, 2))
    coefK[1, 1] = 0.02
    return SmoothMetric(
        SmoothField(np.zeros((1, 1)), bumps=[(0.1, 0.0, 0.0, 1.0)]),
        SmoothField(coefA),
        SmoothField(coefK),
        SmoothField(np.array([[0.0], [1.0]])),
    )


def random_smooth_field(rng, scale=0.2, deg=2, n_waves=1):
    coef = rng.uniform(-scale, scale, (deg + 1, deg + 1))
    waves = [(rng.uniform(-scale, scale), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2 * np.pi))
             for _ in range(n_waves)]
    return SmoothField(coef, waves=waves)


def random_smooth_metric(rng, scale=0.2) -> SmoothMetric:
    """Random smooth metric, admissible on w in [0.8, 1.6], |z| <= 0.5."""
    F = random_smooth_field(rng, scale)
    A = random_smooth_field(rng, scale)
    K = random_smooth_field(rng, scale)
    pc = np.zeros((3, 3))
    pc[1, 0] = 1.0
    pc += rng.uniform(-0.05, 0.05, (3, 3)) * np.array([[0, 1, 1], [0, 1, 1], [1, 1, 1]])
    Pi = SmoothField(pc, waves=[(rng.uniform(-0.05, 0.05), rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0)])
    return SmoothMetric(F, A, K, Pi)


def random_jet(rng, n: int, scale: float = 0.4) -> MetricJet:
    """Batch of ``n`` random jets with Pi in [0.5, 2] and a nonzero grad Pi."""
    def rj(lo=-scale, hi=scale):
        return Jet(rng.uniform(lo, hi, n), *rng.uniform(-scale, scale, (5, n)))

    Pi = rj(0.5, 2.0)
    Pi.d1 = Pi.d1 + np.where(Pi.d1 >= 0, 0.3, -0.3)
    return MetricJet(rj(), rj(), rj(), Pi)


def random_omega(rng, n: int, scale: float = 0.3, varying: bool = True) -> Jet:
    if not varying:
        return Jet(rng.uniform(-scale, scale, n))
    return Jet(rng.uniform(-scale, scale, n), *rng.uniform(-scale, scale, (5, n)))


def random_state(rng, n: int, constants: Constants = Constants(), varying_omega: bool = True):
    """Random (jet, fluid) batch satisfying the timelike condition everywhere.

    Draws are repeated for the failing entries so the batch size is exact.
    """
    jet = random_jet(rng, n)
    Om = random_omega(rng, n, varying=varying_omega)
    for _ in range(100):
        om = Om.v / constants.c
        e2F = np.exp(2 * jet.F.v)
        e2G = e2F * (1 + om * jet.A.v) ** 2 - om**2 * jet.Pi.v**2 / e2F
        bad = e2G < 0.05
        if not bad.any():
            break
        Om.v = np.where(bad, 0.5 * Om.v, Om.v)
    rho = rng.uniform(0.0, 0.5, n)
    P = rho * rng.uniform(0.0, 0.3, n)
    eps = constants.c**2 * rho
    fluid = FluidPoint(rho, P, eps, np.zeros(n), Om)
    return jet, fluid


def kerr_potentials(w, z, M: float = 1.0, a: float = 0.6, remap: float = 0.0):
    """Kerr vacuum in Weyl-Papapetrou form as (F, A, K, Pi) values (G = c = 1).

    With ``remap != 0`` the fields are pulled back by the conformal map
    ``w + i z -> (w + i z) + remap (w + i z)^2``, which keeps the metric a
    vacuum solution but makes Pi differ from w.
    """
    w = np.asarray(w, dtype=float)
    z = np.asarray(z, dtype=float)
    if remap:
        W = w + remap * (w**2 - z**2)
        Z = z + 2 * remap * w * z
    else:
        W, Z = w, z
    s = np.sqrt(M**2 - a**2)
    p, q = s / M, a / M
    Rp = np.sqrt(W**2 + (Z + s) ** 2)
    Rm = np.sqrt(W**2 + (Z - s) ** 2)
    x = (Rp + Rm) / (2 * s)
    y = (Rp - Rm) / (2 * s)
    D = p**2 * x**2 + q**2 * y**2 - 1
    f = D / ((p * x + 1) ** 2 + q**2 * y**2)
    omega = -2 * M * q * (1 - y**2) * (p * x + 1) / D
    e2g = D / (p**2 * (x**2 - y**2))
    K = 0.5 * np.log(e2g)
    if remap:
        K = K + 0.5 * np.log((1 + 2 * remap * w) ** 2 + (2 * remap * z) ** 2)
    return 0.5 * np.log(f), -omega, K, W
