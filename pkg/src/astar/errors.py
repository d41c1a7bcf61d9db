"""Exception and warning types raised across the package."""


class AstarError(Exception):
    """Base class for all package errors."""


class InvalidJetError(AstarError, ValueError):
    """Non-finite or otherwise malformed field data."""


class AxisSingularityError(AstarError, ValueError):
    """A formula dividing by Pi was evaluated at (or too near) the axis."""


class CausalLimitError(AstarError):
    """The fluid world line is not timelike (rotation reaches the light cylinder).

    Attributes
    ----------
    location : tuple or None
        Index (or coordinates) of the first offending point, if known.
    """

    def __init__(self, msg, location=None):
        super().__init__(msg)
        self.location = location


class CorotationBreakdownError(CausalLimitError):
    """The corotating frame has no timelike Killing combination at a point."""


class CausalityViolationError(AstarError):
    """Equation of state gives a sound speed outside (0, c)."""


class GaugeDegeneracyError(AstarError):
    """Gradient of Pi vanishes, so the first-order K system cannot be solved."""

    def __init__(self, msg, location=None):
        super().__init__(msg)
        self.location = location


class EosRangeError(AstarError, ValueError):
    """Enthalpy or density outside the tabulated / admissible range."""


class QuadratureError(AstarError):
    """Numerical integration failed to reach the requested accuracy."""


class DivergenceError(AstarError):
    """An iterative solve blew up."""


class ConfigError(AstarError, ValueError):
    """Invalid run configuration."""


class HypothesisWarning(UserWarning):
    """A check was requested outside the regime where its claim is proved."""
