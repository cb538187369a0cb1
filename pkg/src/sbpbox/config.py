"""Run configuration: TOML parsing, validation, emission, spec building.

A config is a TOML document with known sections only; every key is
validated against the schema below and unknown keys fail with their
location.  Parsing fills in the documented defaults, so an emitted
config always round-trips to an equal one.

Charge profiles are named analytic built-ins with parameters, not
nodal data files; that keeps the level-set feasibility proxy meaningful
and runs reproducible from a few lines of text.  A nodal loader would
slot into ``charge_profile`` if ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from .charge import BUILTIN_PROFILES, ChargeProfile, profile_from_name
from .energy import P_MAX, P_MIN, ProblemSpec
from .exceptions import ConfigError, SbpError
from .grid import BoxDomain, Grid, make_grid
from .operators import BoundaryFlux, solve_chi
from .reduction import NAVIER, NEUMANN
from .solver import STEP_ADAPTIVE, STEP_FIXED, SolverOptions

_FACES = ("x1_lo", "x1_hi", "x2_lo", "x2_hi", "x3_lo", "x3_hi")

_COMMANDS = ("greens", "solve-navier", "solve-neumann", "excited",
             "verify", "gn-probe", "sweep")

# section -> key -> (python type, default); None marks free-form sections
_SCHEMA = {
    "domain": {
        "lengths": (list, [1.0, 1.0, 1.0]),
        "n": (int, 16),
    },
    "problem": {
        "case": (str, NAVIER),
        "p": (float, 2.5),
        "a": (float, 1.0),
        "alpha": (float, 0.0),
        "nonlinearity": (bool, True),
    },
    "solver": {
        "tol_grad": (float, 1e-6),
        "max_iter": (int, 2000),
        "step_rule": (str, STEP_ADAPTIVE),
        "backtrack": (float, 0.5),
        "armijo": (float, 1e-4),
        "seed": (int, 0),
        "multistart": (int, 1),
        "symmetry_axis": (int, -1),
        "precondition": (bool, True),
    },
    "probe": {
        "r": (float, 0.8),
        "samples": (int, 100),
        "seed": (int, 0),
    },
    "greens": {
        "a": (float, 1.0),
        "eps": (float, 1e-3),
        "r_max": (float, 60.0),
        "points": (int, 25),
    },
    "sweep": {
        "axis": (str, "p"),
        "values": (list, [2.2, 2.6, 3.0]),
        "classes": (list, [0]),
        "parallel": (int, 1),
    },
    "excited": {
        "classes": (list, [0]),
    },
    "output": {
        "dir": (str, "runs"),
    },
}


@dataclass
class RunConfig:
    """Validated, default-filled configuration; sections are plain dicts."""

    command: str | None = None
    domain: dict = field(default_factory=dict)
    problem: dict = field(default_factory=dict)
    charge: dict | None = None
    flux: dict | None = None
    solver: dict = field(default_factory=dict)
    probe: dict = field(default_factory=dict)
    greens: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    excited: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def make_domain(self) -> BoxDomain:
        return BoxDomain(tuple(self.domain["lengths"]))

    def make_grid(self) -> Grid:
        return make_grid(self.make_domain(), self.domain["n"])

    def make_charge(self) -> ChargeProfile | None:
        if self.charge is None:
            return None
        params = {k: v for k, v in self.charge.items() if k != "profile"}
        try:
            return profile_from_name(self.charge["profile"], self.make_domain(), **params)
        except (SbpError, TypeError) as exc:
            raise ConfigError(f"[charge] {exc}") from exc

    def make_flux(self) -> BoundaryFlux | None:
        if self.flux is None:
            return None
        h1 = dict(self.flux.get("h1", {}))
        h2 = dict(self.flux.get("h2", {}))
        try:
            return BoundaryFlux(self.make_domain(), h1=h1, h2=h2)
        except SbpError as exc:
            raise ConfigError(f"[flux] {exc}") from exc

    def make_solver_options(self, **overrides) -> SolverOptions:
        d = dict(self.solver)
        axis = d.pop("symmetry_axis")
        d["symmetry_axis"] = None if axis < 0 else axis
        d.update(overrides)
        try:
            return SolverOptions(**d)
        except SbpError as exc:
            raise ConfigError(f"[solver] {exc}") from exc

    def make_problem_spec(self) -> ProblemSpec:
        """Grid, charge, flux lift and exponent assembled into a ProblemSpec."""
        grid = self.make_grid()
        q = self.make_charge()
        case = self.problem["case"]
        chi = None
        alpha = self.problem["alpha"]
        if case == NEUMANN:
            flux = self.make_flux()
            if flux is not None and not flux.is_zero:
                chi = solve_chi(flux, grid)
                alpha = chi.alpha
        try:
            return ProblemSpec(p=self.problem["p"], a=self.problem["a"], case=case,
                               q=q, chi=chi, alpha=alpha,
                               nonlinearity_enabled=self.problem["nonlinearity"],
                               grid=grid)
        except SbpError as exc:
            raise ConfigError(f"[problem] {exc}") from exc


def _coerce(section: str, key: str, value, want):
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, bool):
        raise ConfigError(f"[{section}] key '{key}' must be an integer, got a boolean")
    if not isinstance(value, want):
        raise ConfigError(
            f"[{section}] key '{key}' must be {want.__name__}, got {type(value).__name__}")
    if want is list:
        return list(value)
    return value


def _validate_section(name: str, raw: dict) -> dict:
    schema = _SCHEMA[name]
    out = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"[{name}] unknown key '{key}'")
        out[key] = _coerce(name, key, value, schema[key][0])
    for key, (_, default) in schema.items():
        out.setdefault(key, default if not isinstance(default, list) else list(default))
    return out


def _validate_charge(raw: dict) -> dict:
    if "profile" not in raw:
        raise ConfigError("[charge] needs a 'profile' key naming a built-in")
    out = {"profile": _coerce("charge", "profile", raw["profile"], str)}
    if out["profile"] not in BUILTIN_PROFILES:
        raise ConfigError(
            f"[charge] unknown profile '{out['profile']}'; known: {sorted(BUILTIN_PROFILES)}")
    for key, value in raw.items():
        if key == "profile":
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"[charge] parameter '{key}' must be a number")
        out[key] = float(value)
    return out


def _validate_flux(raw: dict) -> dict:
    out = {}
    for side, table in raw.items():
        if side not in ("h1", "h2"):
            raise ConfigError(f"[flux] unknown key '{side}' (use h1 / h2 tables)")
        if not isinstance(table, dict):
            raise ConfigError(f"[flux] '{side}' must be a table of face values")
        faces = {}
        for face, value in table.items():
            if face not in _FACES:
                raise ConfigError(f"[flux] unknown face '{side}.{face}'")
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"[flux] face value '{side}.{face}' must be a number")
            faces[face] = float(value)
        out[side] = faces
    return out


def parse_config(text: str) -> RunConfig:
    """Validate a TOML document against the schema; unknown keys fail."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from exc
    cfg = RunConfig()
    for key, value in data.items():
        if key == "command":
            command = _coerce("top level", "command", value, str)
            if command not in _COMMANDS:
                raise ConfigError(
                    f"unknown command '{command}'; known: {list(_COMMANDS)}")
            cfg.command = command
        elif key == "charge":
            cfg.charge = _validate_charge(value)
        elif key == "flux":
            cfg.flux = _validate_flux(value)
        elif key in _SCHEMA:
            if not isinstance(value, dict):
                raise ConfigError(f"'{key}' must be a section, not a value")
            setattr(cfg, key, _validate_section(key, value))
        else:
            raise ConfigError(f"unknown section or key '{key}'")
    for name in _SCHEMA:
        if not getattr(cfg, name):
            setattr(cfg, name, _validate_section(name, {}))
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: RunConfig):
    lengths = cfg.domain["lengths"]
    if len(lengths) != 3 or any(isinstance(v, bool) or not isinstance(v, (int, float))
                                or v <= 0 for v in lengths):
        raise ConfigError("[domain] 'lengths' must be three positive numbers")
    cfg.domain["lengths"] = [float(v) for v in lengths]
    if cfg.domain["n"] < 4:
        raise ConfigError("[domain] resolution n must be at least 4")
    p = cfg.problem["p"]
    if not P_MIN < p < P_MAX:
        raise ConfigError(
            f"[problem] exponent p={p} outside the admissible open interval "
            f"({P_MIN}, {P_MAX:.6f})")
    if cfg.problem["a"] != 1.0:
        raise ConfigError("[problem] only the a=1 normalization is supported on the box")
    if cfg.problem["case"] not in (NAVIER, NEUMANN):
        raise ConfigError(f"[problem] unknown case '{cfg.problem['case']}'")
    if cfg.solver["step_rule"] not in (STEP_FIXED, STEP_ADAPTIVE):
        raise ConfigError(f"[solver] unknown step_rule '{cfg.solver['step_rule']}'")
    if cfg.solver["symmetry_axis"] not in (-1, 0, 1, 2):
        raise ConfigError("[solver] symmetry_axis must be -1 (off), 0, 1 or 2")
    if cfg.sweep["axis"] not in ("p", "symmetry"):
        raise ConfigError("[sweep] axis must be 'p' or 'symmetry'")
    if cfg.problem["case"] == NAVIER and cfg.flux is not None:
        raise ConfigError("[flux] flux data belongs to the neumann case")
    for ax in cfg.excited["classes"]:
        if ax not in (0, 1, 2):
            raise ConfigError("[excited] classes must list axes 0, 1 or 2")


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, list):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ConfigError(f"cannot emit value of type {type(value).__name__}")


def emit_config(cfg: RunConfig) -> str:
    """Deterministic TOML text; parse_config(emit_config(c)) == c."""
    lines = []
    if cfg.command is not None:
        lines.append(f"command = {_toml_scalar(cfg.command)}")
        lines.append("")
    for f in dc_fields(cfg):
        if f.name == "command":
            continue
        section = getattr(cfg, f.name)
        if section is None:
            continue
        if f.name == "flux":
            lines.append("[flux]")
            for side in sorted(section):
                for face in sorted(section[side]):
                    lines.append(f"{side}.{face} = {_toml_scalar(section[side][face])}")
        else:
            lines.append(f"[{f.name}]")
            for key in sorted(section):
                lines.append(f"{key} = {_toml_scalar(section[key])}")
        lines.append("")
    return "\n".join(lines)
