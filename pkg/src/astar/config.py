"""Run configuration: flat ``key = value`` text with dotted section names.

Example::

    # weak-field star
    units.c = 1.0
    eos.kind = barotropic
    eos.gamma = 1.6666666666666667
    grid.nw = 64

Blank lines and ``#`` comments are ignored.  Unknown keys are rejected so
that typos cannot silently fall back to defaults.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field

from .errors import ConfigError
from .matter import EosSpec
from .solver import Grid2D, SolverOptions
from .tensor_core import Constants

_SECTION = "run"


@dataclass
class RunConfig:
    c: float = 1.0
    Ggrav: float = 1.0
    eos_kind: str = "barotropic"
    eos_gamma: float = 5.0 / 3.0
    eos_A: float = 1.0
    eos_upsilon: tuple = ()
    omega_kind: str = "constant"
    omega_value: float = 0.0
    omega_scale: float | None = None
    allow_differential: bool = False
    wmax: float = 4.0
    zmax: float = 4.0
    nw: int = 64
    nz: int = 128
    theta: float = 0.5
    relaxation: float = 1.6
    tol_outer: float = 1e-8
    max_outer: int = 500
    max_sweeps: int = 20000
    u_central: float = 0.0
    seed_radius: float | None = None
    frame: str = "unprimed"
    equatorial_symmetry: bool = True
    multipole_order: int = 2
    seed: int = 0

    # key in the file -> (attribute, parser)
    KEYS = {
        "units.c": ("c", float),
        "units.G": ("Ggrav", float),
        "eos.kind": ("eos_kind", str),
        "eos.gamma": ("eos_gamma", float),
        "eos.A": ("eos_A", float),
        "eos.upsilon_coeffs": ("eos_upsilon", lambda s: tuple(float(x) for x in s.replace(",", " ").split())),
        "omega.kind": ("omega_kind", str),
        "omega.value": ("omega_value", float),
        "omega.scale": ("omega_scale", float),
        "omega.allow_differential": ("allow_differential", lambda s: _bool(s)),
        "grid.wmax": ("wmax", float),
        "grid.zmax": ("zmax", float),
        "grid.nw": ("nw", int),
        "grid.nz": ("nz", int),
        "solver.theta": ("theta", float),
        "solver.relaxation": ("relaxation", float),
        "solver.tol_outer": ("tol_outer", float),
        "solver.max_outer": ("max_outer", int),
        "solver.max_sweeps": ("max_sweeps", int),
        "solver.u_central": ("u_central", float),
        "solver.seed_radius": ("seed_radius", float),
        "solver.frame": ("frame", str),
        "solver.equatorial_symmetry": ("equatorial_symmetry", lambda s: _bool(s)),
        "solver.multipole_order": ("multipole_order", int),
        "seed": ("seed", int),
    }

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Build every derived object once so range errors surface at parse time."""
        try:
            self.constants()
            self.eos()
            self.grid()
            self.solver_options()
            if self.omega_kind not in ("constant", "profile"):
                raise ValueError("omega.kind must be 'constant' or 'profile'")
            if self.omega_kind == "profile" and not (self.omega_scale and self.omega_scale > 0):
                raise ValueError("omega.scale must be positive for a profile")
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    def constants(self) -> Constants:
        if not (self.c > 0 and self.Ggrav > 0):
            raise ValueError("units.c and units.G must be positive")
        return Constants(self.c, self.Ggrav)

    def eos(self) -> EosSpec:
        return EosSpec(kind=self.eos_kind, gamma=self.eos_gamma, Acoef=self.eos_A, upsilon=tuple(self.eos_upsilon))

    def grid(self) -> Grid2D:
        return Grid2D(self.wmax, self.zmax, self.nw, self.nz)

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            theta=self.theta, relaxation=self.relaxation, tol_outer=self.tol_outer, max_outer=self.max_outer,
            max_sweeps=self.max_sweeps, u_central=self.u_central, seed_radius=self.seed_radius, frame=self.frame,
            equatorial_symmetry=self.equatorial_symmetry, allow_differential=self.allow_differential,
            multipole_order=self.multipole_order,
        )

    def omega(self):
        from .solver import omega_field

        return omega_field(self.grid(), self.omega_kind, self.omega_value, self.omega_scale)

    def echo(self) -> str:
        """All keys, defaults included, in file syntax (sorted)."""
        d = asdict(self)
        lines = []
        for key in sorted(self.KEYS):
            attr = self.KEYS[key][0]
            val = d[attr]
            if isinstance(val, tuple):
                val = " ".join(repr(float(x)) for x in val)
            elif isinstance(val, float):
                val = repr(val)
            elif val is None:
                continue
            lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` on any problem."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    kwargs = {}
    for key, raw in cp[_SECTION].items():
        if key not in RunConfig.KEYS:
            raise ConfigError(f"unknown key {key!r}")
        attr, conv = RunConfig.KEYS[key]
        try:
            kwargs[attr] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
