"""Line-based ``key = value`` run configuration.

Only magnitudes are user-supplied.  ω, t₁ and C₁ are derived so the
stitching consistency conditions hold by construction; the single expert
key ``override.C1_scale`` deliberately breaks that for negative controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigError, DomainError
from .model import PhysicalParams, cyclotron_frequency
from .stitching import fix_C1, magnet_exit_time

REQUIRED = ("mass", "charge", "field", "alpha_I", "periods")


@dataclass(frozen=True)
class Tolerances:
    interface: float = 1e-10
    uncertainty: float = 1e-12
    oracle: float = 1e-8
    grid_norm: float = 1e-6
    grid_residual: float = 1e-3
    grid_moment: float = 1e-3


@dataclass(frozen=True)
class RunConfig:
    params: PhysicalParams
    H: float
    alpha_I: float
    n_periods: int
    drift_duration: Optional[float] = None
    samples_per_region: int = 50
    tolerances: Tolerances = field(default_factory=Tolerances)
    oracle_dt: float = 1e-3
    grid_points: int = 256
    grid_half_width: float = 8.0
    output_dir: str = "out"
    trajectory_file: str = "trajectory.csv"
    summary_file: str = "summary.json"
    grid_check: bool = True
    oracle_check: bool = True
    C1_scale: float = 1.0

    beta_I = 0.0

    @property
    def omega(self) -> float:
        return cyclotron_frequency(self.params, self.H, 1)

    @property
    def t1(self) -> float:
        return magnet_exit_time(self.omega)

    @property
    def C1_fixed(self) -> float:
        return fix_C1(self.params, self.omega)

    @property
    def C1(self) -> float:
        return self.C1_fixed * self.C1_scale


def _positive(v):
    return math.isfinite(v) and v > 0


def _parse_bool(s):
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(s)


def _parse_int(s):
    v = float(s)
    if not v.is_integer():
        raise ValueError(s)
    return int(v)


# key -> (type name, parser, constraint or None, constraint text)
_KEYS = {
    "mass": ("float", float, _positive, "mass > 0"),
    "charge": ("float", float, _positive, "charge > 0"),
    "hbar": ("float", float, _positive, "hbar > 0"),
    "field": ("float", float, _positive, "field > 0"),
    "alpha_I": ("float", float, _positive, "α^I > 0"),
    "periods": ("int", _parse_int, lambda v: v >= 1, "periods >= 1"),
    "drift_duration": ("float", float, _positive, "drift_duration > 0"),
    "samples_per_region": ("int", _parse_int, lambda v: v >= 2, "samples_per_region >= 2"),
    "tol.interface": ("float", float, _positive, "tolerance > 0"),
    "tol.uncertainty": ("float", float, _positive, "tolerance > 0"),
    "tol.oracle": ("float", float, _positive, "tolerance > 0"),
    "tol.grid_norm": ("float", float, _positive, "tolerance > 0"),
    "tol.grid_residual": ("float", float, _positive, "tolerance > 0"),
    "tol.grid_moment": ("float", float, _positive, "tolerance > 0"),
    "oracle_dt": ("float", float, _positive, "oracle_dt > 0"),
    "grid_points": ("int", _parse_int, lambda v: v >= 16, "grid_points >= 16"),
    "grid_half_width": ("float", float, _positive, "grid_half_width > 0"),
    "output_dir": ("str", str, bool, "non-empty path"),
    "trajectory_file": ("str", str, bool, "non-empty path"),
    "summary_file": ("str", str, bool, "non-empty path"),
    "grid_check": ("bool", _parse_bool, None, ""),
    "oracle_check": ("bool", _parse_bool, None, ""),
    "override.C1_scale": ("float", float, _positive, "override.C1_scale > 0"),
}

_SIMPLE = {
    "drift_duration": "drift_duration",
    "samples_per_region": "samples_per_region",
    "oracle_dt": "oracle_dt",
    "grid_points": "grid_points",
    "grid_half_width": "grid_half_width",
    "output_dir": "output_dir",
    "trajectory_file": "trajectory_file",
    "summary_file": "summary_file",
    "grid_check": "grid_check",
    "oracle_check": "oracle_check",
    "override.C1_scale": "C1_scale",
}


def parse_config(text: str) -> RunConfig:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", line=lineno)
        tname, parser, check, text_ = _KEYS[key]
        try:
            v = parser(val)
        except ValueError:
            raise ConfigError(f"{key}: expected {tname}, got {val!r}", line=lineno) from None
        if check is not None and not check(v):
            raise ConfigError(f"{key}: constraint {text_} violated by {val!r}", line=lineno)
        values[key], lines[key] = v, lineno

    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"{key} required")

    tol = Tolerances(**{k[4:]: v for k, v in values.items() if k.startswith("tol.")})
    kwargs = {attr: values[key] for key, attr in _SIMPLE.items() if key in values}
    try:
        params = PhysicalParams(m=values["mass"], e=values["charge"], hbar=values.get("hbar", 1.0))
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(
        params=params,
        H=values["field"],
        alpha_I=values["alpha_I"],
        n_periods=values["periods"],
        tolerances=tol,
        **kwargs,
    )


def format_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config`; every set value is written out."""

    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        return repr(v) if isinstance(v, float) else str(v)

    out = [
        f"mass = {fmt(cfg.params.m)}",
        f"charge = {fmt(cfg.params.e)}",
        f"hbar = {fmt(cfg.params.hbar)}",
        f"field = {fmt(cfg.H)}",
        f"alpha_I = {fmt(cfg.alpha_I)}",
        f"periods = {cfg.n_periods}",
    ]
    for key, attr in _SIMPLE.items():
        v = getattr(cfg, attr)
        if v is not None:
            out.append(f"{key} = {fmt(v)}")
    for f in fields(Tolerances):
        out.append(f"tol.{f.name} = {fmt(getattr(cfg.tolerances, f.name))}")
    return "\n".join(out) + "\n"
