"""Run configuration: flat ``section.key=value`` text with presets.

Resolution order is defaults, then the scenario preset, then the config
file, then command-line overrides. Every value is validated by the object
that owns it, so errors always name a ``section.key`` path.
"""

from __future__ import annotations

import math
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from .control import ControllerConfig
from .errors import ConfigurationError
from .model import DisturbanceProfile, RopeParams
from .sim import SCENARIOS, ActuatorModel, Scenario, SensorModel, SimConfig


@dataclass(frozen=True)
class ScenarioSettings:
    name: str = "impulse"
    q0: tuple[float, ...] = (20.0,)
    qd0: tuple[float, ...] = (5.0,)
    zero_damping: bool = True
    duration: float = 200.0

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.name!r}; expected one of {SCENARIOS}",
                                     key="scenario.name")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ConfigurationError("must be > 0", key="scenario.duration")


@dataclass(frozen=True)
class DisturbanceSettings:
    kind: str = "zero"
    amplitude: float = 0.0
    frequency: float = 0.0
    file: str = ""  # two-column CSV (t, f1) for kind=sampled

    def __post_init__(self):
        if self.kind not in ("zero", "sinusoid", "sampled"):
            raise ConfigurationError(f"unknown disturbance kind {self.kind!r}",
                                     key="disturbance.kind")
        if self.kind == "sampled" and not self.file:
            raise ConfigurationError("sampled disturbance needs disturbance.file",
                                     key="disturbance.file")

    def build(self) -> DisturbanceProfile:
        if self.kind == "zero":
            return DisturbanceProfile.zero()
        if self.kind == "sinusoid":
            return DisturbanceProfile.sinusoid(self.amplitude, self.frequency)
        try:
            table = np.loadtxt(self.file, delimiter=",", ndmin=2, comments="#")
        except (OSError, ValueError) as exc:
            raise ConfigurationError(f"cannot read {self.file!r}: {exc}",
                                     key="disturbance.file") from exc
        if table.shape[1] < 2:
            raise ConfigurationError("expected two columns t,f1", key="disturbance.file")
        return DisturbanceProfile.sampled(table[:, 0], table[:, 1])


@dataclass(frozen=True)
class SimSettings:
    modes: int = 2
    dt: float = 1e-3
    control_period: float = 0.01
    probe_y: float = 195.0
    ideal_chain: bool = False
    record_every: int = 1
    steady_start: float | None = None
    basis_scale: float = 1.0


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    out: str = ""


@dataclass(frozen=True)
class _SensorSettings:
    noise_amplitude: float = 0.01
    positions: tuple[float, ...] = (195.0,)
    distribution: str = "uniform"


SECTIONS: dict[str, type] = {
    "rope": RopeParams,
    "controller": ControllerConfig,
    "actuator": ActuatorModel,
    "sensor": _SensorSettings,
    "scenario": ScenarioSettings,
    "disturbance": DisturbanceSettings,
    "sim": SimSettings,
    "run": RunSettings,
}

PRESETS: dict[str, dict[str, Any]] = {
    "impulse": {
        "scenario.name": "impulse", "scenario.q0": (20.0,), "scenario.qd0": (5.0,),
        "scenario.zero_damping": True, "scenario.duration": 200.0,
        "disturbance.kind": "zero", "controller.u_max": 1e9,
    },
    "sustained": {
        "scenario.name": "sustained", "scenario.q0": (), "scenario.qd0": (),
        "scenario.zero_damping": False, "scenario.duration": 600.0,
        "disturbance.kind": "sinusoid", "disturbance.amplitude": 0.2,
        "disturbance.frequency": 0.08,
        # u_max must cover u_max_p + v1_max + v2_max
        "controller.u_max": 1.0002e9, "controller.u_max_p": 1e9,
        "controller.v1_max": 1e5, "controller.v2_max": 1e5,
        "controller.F_max": 1.0, "controller.F_tilde_max": 1.0,
    },
    "zero": {
        "scenario.name": "zero", "scenario.q0": (), "scenario.qd0": (),
        "scenario.zero_damping": False, "scenario.duration": 200.0,
        "disturbance.kind": "zero",
    },
    "custom": {"scenario.name": "custom"},
}


def _hints(cls) -> dict[str, Any]:
    return typing.get_type_hints(cls)


def _keys(cls) -> list[str]:
    return [f.name for f in fields(cls) if f.init and not f.name.startswith("_")]


def known_keys() -> list[str]:
    return [f"{s}.{k}" for s, cls in SECTIONS.items() for k in _keys(cls)]


def _coerce(key: str, raw: Any, hint: Any) -> Any:
    """Convert ``raw`` (text or a Python value) to the declared field type."""
    args = typing.get_args(hint)
    optional = type(None) in args
    if optional:
        hint = next(a for a in args if a is not type(None))
    text = raw.strip() if isinstance(raw, str) else None
    if raw is None or (optional and text is not None and text.lower() in ("none", "")):
        if optional:
            return None
        raise ConfigurationError("value required", key=key)
    try:
        if typing.get_origin(hint) is tuple:
            if text is None:
                return tuple(float(v) for v in raw)
            return tuple(float(v) for v in text.split(",") if v.strip())
        if hint is bool:
            if isinstance(raw, bool):
                return raw
            if text is not None and text.lower() in ("true", "1", "yes", "on"):
                return True
            if text is not None and text.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(f"expected a boolean, got {raw!r}")
        if hint is int:
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError(f"expected an integer, got {raw!r}")
            return int(text) if text is not None else int(raw)
        if hint is float:
            if isinstance(raw, bool):
                raise ValueError(f"expected a number, got {raw!r}")
            return float(text) if text is not None else float(raw)
        return str(raw) if text is None else text
    except ValueError as exc:
        raise ConfigurationError(f"type mismatch: {exc}", key=key) from exc


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved, validated settings for one run."""

    rope: RopeParams = field(default_factory=RopeParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    actuator: ActuatorModel = field(default_factory=ActuatorModel)
    sensor: _SensorSettings = field(default_factory=_SensorSettings)
    scenario: ScenarioSettings = field(default_factory=ScenarioSettings)
    disturbance: DisturbanceSettings = field(default_factory=DisturbanceSettings)
    sim: SimSettings = field(default_factory=SimSettings)
    run: RunSettings = field(default_factory=RunSettings)

    def flat(self) -> dict[str, Any]:
        return {f"{s}.{k}": getattr(getattr(self, s), k)
                for s, cls in SECTIONS.items() for k in _keys(cls)}

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """Copy with ``section.key`` values replaced (text or typed values)."""
        grouped: dict[str, dict[str, Any]] = {}
        for key, raw in overrides.items():
            section, _, name = key.partition(".")
            cls = SECTIONS.get(section)
            if cls is None or name not in _keys(cls):
                raise ConfigurationError("unknown key", key=key)
            grouped.setdefault(section, {})[name] = _coerce(key, raw, _hints(cls)[name])
        changes = {s: replace(getattr(self, s), **vals) for s, vals in grouped.items()}
        return replace(self, **changes)

    def emit(self) -> str:
        return "".join(f"{k}={_format(v)}\n" for k, v in self.flat().items())

    def scenario_object(self) -> Scenario:
        s = self.scenario
        return Scenario(s.name, s.q0, s.qd0, self.disturbance.build(), s.zero_damping, s.duration)

    def to_sim_config(self) -> SimConfig:
        """Assemble and cross-validate the simulation configuration."""
        s = self.sim
        sensor = SensorModel(self.sensor.noise_amplitude, self.sensor.positions, self.run.seed,
                             self.sensor.distribution)
        cfg = SimConfig(self.rope, self.controller, self.actuator, sensor,
                        self.scenario_object(), s.modes, s.dt, s.control_period, s.probe_y,
                        s.ideal_chain, s.record_every, s.steady_start, s.basis_scale)
        cfg.validate()
        return cfg

    def validate(self) -> "RunConfig":
        self.to_sim_config()
        return self


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"{source}:{lineno}: expected key=value", key=key.strip() or None)
        out[key.strip()] = value.strip()
    return out


def parse_assignments(items: Iterable[str]) -> dict[str, str]:
    return parse_text("\n".join(items), "--set")


def parse_config(path: str | Path | None = None, scenario: str | None = None,
                 overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Resolve defaults, preset, file and overrides into a validated config."""
    file_values: dict[str, str] = {}
    if path is not None:
        try:
            file_values = parse_text(Path(path).read_text(), str(path))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file: {exc}", key="config") from exc
    overrides = dict(overrides or {})
    name = scenario or overrides.get("scenario.name") or file_values.get("scenario.name") or "impulse"
    if name not in PRESETS:
        raise ConfigurationError(f"unknown scenario {name!r}; expected one of {tuple(PRESETS)}",
                                 key="scenario.name")
    cfg = RunConfig().with_overrides(PRESETS[name])
    cfg = cfg.with_overrides(file_values)
    if scenario:
        overrides.setdefault("scenario.name", scenario)
    cfg = cfg.with_overrides(overrides)
    return cfg.validate()


def load_emitted(text: str) -> RunConfig:
    """Inverse of :meth:`RunConfig.emit`."""
    return RunConfig().with_overrides(parse_text(text)).validate()
