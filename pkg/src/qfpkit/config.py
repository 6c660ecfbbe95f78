"""Run configuration: a single JSON document with strict validation.

Angles may be given as numbers (radians) or as strings in units of pi,
e.g. ``"pi"``, ``"pi/3"``, ``"2pi/3"``, ``"0.5pi"``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, fields

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


_PI_RE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d*\.?\d+))?\s*$")


def parse_angle(value, path: str = "angle") -> float:
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number or a multiple of pi")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value.lower())
        if m:
            coef = m.group(1)
            if coef in ("", "+"):
                c = 1.0
            elif coef == "-":
                c = -1.0
            else:
                c = float(coef)
            den = float(m.group(2)) if m.group(2) else 1.0
            if den == 0:
                raise ConfigError(path, "division by zero")
            return c * math.pi / den
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(path, f"cannot parse angle {value!r}")


@dataclass
class DeviceConfig:
    B: int = 6
    alpha: float = math.pi
    theta1: float = 0.8283
    theta2: float = 0.8283
    sign1: int = -1
    sign2: int = 1
    phases: list | None = None
    amplitudes: list | None = None
    bin_spacing_ghz: float = 3.0


@dataclass
class SweepTask:
    axis: str = "theta"
    values: list | None = None
    start: float | None = None
    stop: float | None = None
    step: float | None = None


@dataclass
class OptimizeTask:
    bracket: list = field(default_factory=lambda: [0.5, 1.1])
    objective: str = "fidelity"


@dataclass
class TaskConfig:
    n_inputs: int = 2
    target: str = "hadamard"
    sweep: SweepTask = field(default_factory=SweepTask)
    optimize: OptimizeTask = field(default_factory=OptimizeTask)


@dataclass
class NumericsConfig:
    tail_tol: float = 1e-16


@dataclass
class ProbeBlock:
    replicates: int = 5
    loss: float = 1.0
    sigma: float = 0.0
    sigma_common: float = 0.0
    phase_points: int = 16
    phi_i: float = 0.3
    seed: int = 0


@dataclass
class OutputConfig:
    format: str = "json"
    path: str | None = None
    precision: int = 6


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    device: DeviceConfig = field(default_factory=DeviceConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    probe: ProbeBlock = field(default_factory=ProbeBlock)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_ANGLE_KEYS = {"alpha", "phi_i", "start", "stop", "step"}
_ANGLE_LIST_KEYS = {"phases"}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _coerce(value, default, ftype, key: str, path: str):
    if key in _ANGLE_KEYS:
        if value is None and default is None:
            return None
        return parse_angle(value, path)
    if key in _ANGLE_LIST_KEYS:
        if value is None:
            return None
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list")
        return [parse_angle(x, f"{path}[{i}]") for i, x in enumerate(value)]
    if "int" in str(ftype) and "float" not in str(ftype):
        if not _is_int(value):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if "float" in str(ftype) and "list" not in str(ftype):
        if value is None and "None" in str(ftype):
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if "str" in str(ftype):
        if value is None and "None" in str(ftype):
            return None
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if "list" in str(ftype):
        if value is None and "None" in str(ftype):
            return None
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return value
    return value


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    obj = cls()
    for name, f in known.items():
        if name not in data:
            continue
        sub = f"{path}.{name}" if path else name
        default = getattr(obj, name)
        if hasattr(default, "__dataclass_fields__"):
            setattr(obj, name, _build(type(default), data[name], sub))
        else:
            setattr(obj, name, _coerce(data[name], default, f.type, name, sub))
    return obj


def _validate(cfg: RunConfig) -> None:
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {cfg.schema_version}")
    d = cfg.device
    if d.B < 2 or d.B % 2:
        raise ConfigError("device.B", "channel count must be an even integer >= 2")
    for key in ("theta1", "theta2"):
        if getattr(d, key) < 0:
            raise ConfigError(f"device.{key}", "modulation index must be >= 0")
    for key in ("sign1", "sign2"):
        if getattr(d, key) not in (1, -1):
            raise ConfigError(f"device.{key}", "must be +1 or -1")
    for key in ("phases", "amplitudes"):
        val = getattr(d, key)
        if val is not None and len(val) != d.B:
            raise ConfigError(f"device.{key}", f"expected {d.B} entries")
    if d.amplitudes is not None:
        for i, a in enumerate(d.amplitudes):
            if isinstance(a, bool) or not isinstance(a, (int, float)) or not 0 <= a <= 1:
                raise ConfigError(f"device.amplitudes[{i}]", "must be a number in [0, 1]")
        d.amplitudes = [float(a) for a in d.amplitudes]
    if not d.bin_spacing_ghz > 0:
        raise ConfigError("device.bin_spacing_ghz", "must be positive")
    t = cfg.task
    if t.n_inputs < 1:
        raise ConfigError("task.n_inputs", "must be >= 1")
    if t.target not in ("hadamard", "identity"):
        raise ConfigError("task.target", "must be 'hadamard' or 'identity'")
    if t.target == "hadamard" and t.n_inputs != 2:
        raise ConfigError("task.target", "the Hadamard target needs n_inputs = 2")
    s = t.sweep
    if s.axis not in ("B", "alpha", "theta"):
        raise ConfigError("task.sweep.axis", "must be one of B, alpha, theta")
    if s.values is not None:
        if s.axis == "B":
            for i, v in enumerate(s.values):
                if not _is_int(v):
                    raise ConfigError(f"task.sweep.values[{i}]", "channel counts must be integers")
        else:
            s.values = [parse_angle(v, f"task.sweep.values[{i}]") for i, v in enumerate(s.values)]
    if s.step is not None and not s.step > 0:
        raise ConfigError("task.sweep.step", "must be positive")
    o = t.optimize
    if len(o.bracket) != 2:
        raise ConfigError("task.optimize.bracket", "expected [lo, hi]")
    o.bracket = [parse_angle(v, f"task.optimize.bracket[{i}]") for i, v in enumerate(o.bracket)]
    if o.objective not in ("fidelity", "fidelity_times_success"):
        raise ConfigError("task.optimize.objective", "must be fidelity or fidelity_times_success")
    if not cfg.numerics.tail_tol > 0:
        raise ConfigError("numerics.tail_tol", "must be positive")
    p = cfg.probe
    if p.replicates < 2:
        raise ConfigError("probe.replicates", "must be >= 2")
    if not 0 < p.loss <= 1:
        raise ConfigError("probe.loss", "must lie in (0, 1]")
    if p.sigma < 0 or p.sigma_common < 0:
        raise ConfigError("probe.sigma", "must be >= 0")
    if p.phase_points < 8:
        raise ConfigError("probe.phase_points", "must be >= 8")
    if p.seed < 0:
        raise ConfigError("probe.seed", "must be >= 0")
    out = cfg.output
    if out.format not in ("json", "csv"):
        raise ConfigError("output.format", "must be json or csv")
    if not 0 <= out.precision <= 17:
        raise ConfigError("output.precision", "must be in [0, 17]")


def parse_config(data: dict) -> RunConfig:
    """Build and validate a :class:`RunConfig`; raises :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a JSON object")
    device = data.get("device")
    if isinstance(device, dict) and "theta" in device:
        # shorthand: common modulation index for both modulators
        if "theta1" in device or "theta2" in device:
            raise ConfigError("device.theta", "give either theta or theta1/theta2")
        device = dict(device)
        theta = device.pop("theta")
        device["theta1"] = device["theta2"] = theta
        data = {**data, "device": device}
    cfg = _build(RunConfig, data, "")
    _validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(str(path), str(exc)) from exc
    return parse_config(data)
