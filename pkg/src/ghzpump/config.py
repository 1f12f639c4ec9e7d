"""Run configuration: strict TOML schema, validation and canonical hashing.

Example::

    command = "simulate"
    seed = 0

    [system]
    n_qubits = 3
    g = 1.0

    [drive]
    source = "analytic-weak"      # analytic-strong | explicit | optimize
    error = 0.1                   # stationary error of the analytic assignment
    alpha = 1.0

    [model]
    kind = "effective"            # full-k1 | full-k2 | compartment

    [integrator]
    t_max = 2000.0
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

COMMANDS = ("simulate", "sweep", "optimize", "ratemodel", "params")
SOURCES = ("analytic-weak", "analytic-strong", "explicit", "optimize")
KINDS = ("effective", "full-k1", "full-k2", "compartment")
METHODS = ("auto", "rk45", "expm", "trotter")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class SystemSection:
    n_qubits: int = 3
    n_list: tuple[int, ...] = ()
    g: float = 1.0
    gamma_e: float | None = None
    gamma_f: float | None = None
    kappa_b: float = 0.0
    kappa_c: float = 0.0


@dataclass(frozen=True)
class DriveSection:
    source: str = "analytic-weak"
    error: float = 0.1
    dynamical: bool = False
    alpha: float = 1.0
    eta: float = 2.0
    omega_z: tuple[float, ...] = ()
    omega_x: tuple[float, ...] = ()


@dataclass(frozen=True)
class ModelSection:
    kind: str = "effective"
    power_broadening: bool = False
    broadening_factor: float = 2.0


@dataclass(frozen=True)
class TargetSection:
    fidelity: float = 0.9


@dataclass(frozen=True)
class IntegratorSection:
    t_max: float = 1000.0
    method: str = "auto"
    rtol: float = 1e-8
    atol: float = 1e-10
    initial_step: float | None = None
    sample_stride: float | None = None
    trotter_slice: float | None = None


@dataclass(frozen=True)
class OptimizerSection:
    max_evals: int = 500
    restarts: int = 3
    jitter: float = 0.1


@dataclass(frozen=True)
class RateModelSection:
    n_list: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8, 10, 20, 50, 100)
    gamma_minus_ratio: float = 0.01


@dataclass(frozen=True)
class OutputSection:
    prefix: str = "ghzpump"


@dataclass(frozen=True)
class RunConfig:
    command: str = "simulate"
    seed: int = 0
    system: SystemSection = field(default_factory=SystemSection)
    drive: DriveSection = field(default_factory=DriveSection)
    model: ModelSection = field(default_factory=ModelSection)
    target: TargetSection = field(default_factory=TargetSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    ratemodel: RateModelSection = field(default_factory=RateModelSection)
    output: OutputSection = field(default_factory=OutputSection)

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    @property
    def n_values(self) -> tuple[int, ...]:
        return self.system.n_list or (self.system.n_qubits,)


def _coerce(key: str, value, annotation: str):
    """Convert a TOML value to the type implied by the field annotation."""
    optional = "None" in annotation
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{key}: value required")
    if annotation.startswith("tuple"):
        items = value if isinstance(value, list) else [value]
        conv = int if "int" in annotation else float
        try:
            out = []
            for v in items:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise TypeError
                if conv is int and int(v) != v:
                    raise TypeError
                out.append(conv(v))
            return tuple(out)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a list of numbers, got {value!r}") from None
    if annotation.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if annotation.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if annotation.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite")
        return float(value)
    if annotation.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{key}: unsupported type")  # pragma: no cover


def _build_section(name: str, cls, raw) -> object:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a table")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"unknown key '{name}.{key}'")
        f = known[key]
        kwargs[key] = _coerce(f"{name}.{key}", value, str(f.type))
    return cls(**kwargs)


def from_dict(raw: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig` from a parsed document."""
    sections = {f.name: f for f in fields(RunConfig)}
    kwargs = {}
    for key, value in raw.items():
        if key not in sections:
            raise ConfigError(f"unknown key '{key}'")
        f = sections[key]
        if key in ("command", "seed"):
            kwargs[key] = _coerce(key, value, str(f.type))
        else:
            kwargs[key] = _build_section(key, type(f.default_factory()), value)
    cfg = RunConfig(**kwargs)
    validate(cfg)
    return cfg


def load(path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return from_dict(raw)


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def validate(cfg: RunConfig) -> None:
    """Check every module precondition that can be checked up front."""
    _require(cfg.command in COMMANDS, f"command: must be one of {', '.join(COMMANDS)}")
    _require(cfg.seed >= 0, "seed: must be non-negative")
    s, d, m = cfg.system, cfg.drive, cfg.model
    _require(s.n_qubits >= 2, "system.n_qubits: must be >= 2")
    _require(all(n >= 2 for n in s.n_list), "system.n_list: entries must be >= 2")
    _require(s.g > 0, "system.g: must be positive")
    for name in ("gamma_e", "gamma_f"):
        v = getattr(s, name)
        _require(v is None or v > 0, f"system.{name}: must be positive")
    _require(s.kappa_b >= 0 and s.kappa_c >= 0, "system.kappa_b/kappa_c: must be non-negative")
    _require(d.source in SOURCES, f"drive.source: must be one of {', '.join(SOURCES)}")
    _require(0 < d.error < 1, "drive.error: must lie in (0, 1)")
    _require(d.alpha > 0, "drive.alpha: must be positive")
    _require(d.eta > 0, "drive.eta: must be positive")
    _require(all(v >= 0 for v in d.omega_z + d.omega_x), "drive.omega_z/omega_x: must be >= 0")
    if d.source == "explicit":
        _require(s.gamma_e is not None, "system.gamma_e: required for drive.source = 'explicit'")
        for n in cfg.n_values:
            _require(len(d.omega_z) == n - 1,
                     f"drive.omega_z: need {n - 1} amplitudes for N = {n}")
            _require(len(d.omega_x) in (0, 1, n),
                     f"drive.omega_x: need 1 or {n} amplitudes for N = {n}")
    _require(m.kind in KINDS, f"model.kind: must be one of {', '.join(KINDS)}")
    _require(m.broadening_factor > 0, "model.broadening_factor: must be positive")
    if m.kind == "compartment":
        _require(all(n >= 3 for n in cfg.n_values) or d.source != "explicit",
                 "system.n_qubits: compartment rates from a schedule need N >= 3")
    _require(0 < cfg.target.fidelity < 1, "target.fidelity: must lie in (0, 1)")
    i = cfg.integrator
    _require(i.t_max > 0, "integrator.t_max: must be positive")
    _require(i.method in METHODS, f"integrator.method: must be one of {', '.join(METHODS)}")
    _require(i.rtol > 0 and i.atol > 0, "integrator.rtol/atol: must be positive")
    for name in ("initial_step", "sample_stride", "trotter_slice"):
        v = getattr(i, name)
        _require(v is None or v > 0, f"integrator.{name}: must be positive")
    o = cfg.optimizer
    _require(o.max_evals >= 1, "optimizer.max_evals: must be >= 1")
    _require(o.restarts >= 1, "optimizer.restarts: must be >= 1")
    _require(o.jitter >= 0, "optimizer.jitter: must be non-negative")
    r = cfg.ratemodel
    _require(len(r.n_list) > 0 and all(n >= 2 for n in r.n_list),
             "ratemodel.n_list: need entries >= 2")
    _require(r.gamma_minus_ratio >= 0, "ratemodel.gamma_minus_ratio: must be non-negative")


def with_overrides(cfg: RunConfig, command: str | None = None, seed: int | None = None) -> RunConfig:
    out = cfg
    if command is not None:
        out = replace(out, command=command)
    if seed is not None:
        out = replace(out, seed=seed)
    validate(out)
    return out
