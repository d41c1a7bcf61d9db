"""Stationary rotating perfect-fluid spacetimes in Lanczos form.

Submodules
----------
tensor_core
    Metric, Christoffel symbols, closed-form and brute-force Ricci tensor.
matter
    Equation of state, enthalpy, four-velocity and stress-energy.
reduced_system
    Reduced field equations, their equivalence with the Einstein equations
    and the consistency defect of the first-order K system.
corotating
    Corotating-frame potentials and the corotating reduced system.
solver
    Finite-difference fixed-point solver for rotating equilibria.
"""
from .errors import (
    AstarError,
    AxisSingularityError,
    CausalLimitError,
    ConfigError,
    DivergenceError,
    EosRangeError,
    GaugeDegeneracyError,
    HypothesisWarning,
)
from .jets import Jet
from .matter import EosSpec, FluidPoint
from .tensor_core import Constants, MetricJet

__version__ = "0.1.0"

__all__ = [
    "AstarError", "AxisSingularityError", "CausalLimitError", "ConfigError", "DivergenceError", "EosRangeError",
    "GaugeDegeneracyError", "HypothesisWarning", "Jet", "EosSpec", "FluidPoint", "Constants", "MetricJet",
]
