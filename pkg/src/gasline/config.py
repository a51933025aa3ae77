"""Run configuration: a TOML file with dotted sections, strictly validated.

Unknown keys are errors (fail fast on typos); every key has a default, so an
empty file is a valid certified configuration.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

from .model import PipeConfig
from .solver import SolverConfig

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

__all__ = ["ConfigError", "InitSpec", "OutputSpec", "FitSpec", "SweepSpec", "RunConfig", "load_config"]


class ConfigError(ValueError):
    """Malformed or unknown configuration content."""


@dataclass(frozen=True)
class InitSpec:
    """Smooth-bump initial deviation: support (center - width/2, center + width/2)."""

    center: float = 0.5
    width: float = 0.6
    amplitude: float = 1e-6


@dataclass(frozen=True)
class OutputSpec:
    trace_path: str = "trace.csv"
    report_path: str = "certificate.json"
    field_dump_every: int = 0
    plots: bool = True


@dataclass(frozen=True)
class FitSpec:
    """Decay-rate fit window as fractions of t_end (skips the transient)."""

    t_lo_frac: float = 0.1
    t_hi_frac: float = 1.0


@dataclass(frozen=True)
class SweepSpec:
    param: str = "k"
    values: tuple = ()

    def __post_init__(self):
        if self.param not in ("k", "amplitude"):
            raise ConfigError("sweep parameter must be 'k' or 'amplitude'")


@dataclass(frozen=True)
class RunConfig:
    """Everything one scenario needs: pipe, profile anchor, solver, outputs."""

    pipe: PipeConfig
    u_bar_0: float = 1e-5
    q_const: float = 1.0
    t_li_bound: float = 2e-5
    solver: SolverConfig = field(default_factory=SolverConfig)
    init: InitSpec = field(default_factory=InitSpec)
    outputs: OutputSpec = field(default_factory=OutputSpec)
    fit: FitSpec = field(default_factory=FitSpec)
    sweep: SweepSpec | None = None


_SCHEMA = {
    "pipe": {"a": 1.0, "theta": 1.0, "L": 1.0, "k": 20.0, "gamma": 0.5},
    "u_bar_0": 1e-5,
    "q_const": 1.0,
    "t_li_bound": 2e-5,
    "solver": {"n_cells": 256, "cfl": 0.8, "t_end": 10.0, "sample_dt": 0.05,
               "boundary_tol": 1e-9, "scheme": "richtmyer", "envelope_tol": 0.05},
    "init": {"center": 0.5, "width": 0.6, "amplitude": 1e-6},
    "outputs": {"trace_path": "trace.csv", "report_path": "certificate.json",
                "field_dump_every": 0, "plots": True},
    "fit": {"t_lo_frac": 0.1, "t_hi_frac": 1.0},
    "sweep": {"param": "k", "values": []},
}


def _merge(section: str, defaults: dict, given: dict) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        where = section or "top level"
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")
    out = dict(defaults)
    for key, val in given.items():
        want = defaults[key]
        if isinstance(want, bool):
            if not isinstance(val, bool):
                raise ConfigError(f"{section}.{key} must be a boolean")
        elif isinstance(want, float):
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{section}.{key} must be a number")
            val = float(val)
        elif isinstance(want, int):
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{section}.{key} must be an integer")
        elif isinstance(want, str):
            if not isinstance(val, str):
                raise ConfigError(f"{section}.{key} must be a string")
        elif isinstance(want, list):
            if not isinstance(val, list):
                raise ConfigError(f"{section}.{key} must be an array")
        out[key] = val
    return out


def parse_config(raw: dict) -> RunConfig:
    """Validate a parsed TOML document against the schema."""
    top_known = set(_SCHEMA)
    unknown = set(raw) - top_known
    if unknown:
        raise ConfigError(f"unknown key(s) at top level: {', '.join(sorted(unknown))}")
    sections = {}
    for name in ("pipe", "solver", "init", "outputs", "fit", "sweep"):
        given = raw.get(name, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{name}] must be a table")
        sections[name] = _merge(name, _SCHEMA[name], given)
    scalars = {}
    for name in ("u_bar_0", "q_const", "t_li_bound"):
        val = raw.get(name, _SCHEMA[name])
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{name} must be a number")
        scalars[name] = float(val)

    try:
        pipe = PipeConfig(**sections["pipe"])
        solver = SolverConfig(**sections["solver"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not 0.0 <= scalars["t_li_bound"] < pipe.a:
        raise ConfigError("t_li_bound must lie in [0, a)")
    sweep = None
    if "sweep" in raw:
        values = sections["sweep"]["values"]
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError("sweep.values must be numbers")
        sweep = SweepSpec(param=sections["sweep"]["param"],
                          values=tuple(float(v) for v in values))
    return RunConfig(
        pipe=pipe,
        u_bar_0=scalars["u_bar_0"],
        q_const=scalars["q_const"],
        t_li_bound=scalars["t_li_bound"],
        solver=solver,
        init=InitSpec(**sections["init"]),
        outputs=OutputSpec(**sections["outputs"]),
        fit=FitSpec(**sections["fit"]),
        sweep=sweep,
    )


def load_config(path: str) -> RunConfig:
    """Parse and validate a configuration file."""
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(raw)
