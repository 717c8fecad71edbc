"""Scenario files: everything one run needs, in one strict YAML document.

Sections mirror the simulator's config types one-to-one. Unknown keys are
errors (fail-fast against typos), and every error message carries the
dotted path of the offending field.
"""

import dataclasses
import math
from dataclasses import dataclass

import yaml

from .control import DEFAULT_GRASP_GAINS, DEFAULT_PULL_GAINS, PidGains
from .errors import ConfigError
from .forceps import ForcepsGeometry, SpringModel, TissueModel
from .plant import SimConfig
from .session import TractionParams

PULL_VARIANTS = ("decoupled", "pull_only")
TRACKING_MODES = ("grasp", "pull", "both")


@dataclass(frozen=True)
class GeometryConfig:
    """Linkage lengths in mm; angles in degrees for readability."""

    l1: float = 1.0
    l2: float = 2.0
    l3: float = 1.5
    alpha0_deg: float = 20.0
    theta_deg: float = 30.0
    l12: float | None = None
    theta_max_deg: float = 60.0

    def build(self) -> ForcepsGeometry:
        return ForcepsGeometry(
            l1=self.l1,
            l2=self.l2,
            l3=self.l3,
            alpha0=math.radians(self.alpha0_deg),
            theta=math.radians(self.theta_deg),
            l12=self.l12,
            theta_max=math.radians(self.theta_max_deg),
        )

    def with_theta(self, theta_deg: float) -> "GeometryConfig":
        return dataclasses.replace(self, theta_deg=theta_deg)


@dataclass(frozen=True)
class ControlConfig:
    pull_variant: str = "decoupled"
    grasp_gains: PidGains = DEFAULT_GRASP_GAINS
    pull_gains: PidGains = DEFAULT_PULL_GAINS
    v_max_lower: float = 5.0
    v_max_upper: float = 5.0

    def __post_init__(self):
        if self.pull_variant not in PULL_VARIANTS:
            raise ValueError(f"pull_variant must be one of {PULL_VARIANTS}")
        if self.v_max_lower <= 0.0 or self.v_max_upper <= 0.0:
            raise ValueError("driver speed limits must be positive")


@dataclass(frozen=True)
class GraspPreamble:
    """Grasp established before a pull-tracking run: ramp then hold."""

    target: float = 0.2
    ramp_end: float = 5.0
    pull_start: float = 8.0

    def __post_init__(self):
        if not 0.0 < self.ramp_end <= self.pull_start:
            raise ValueError("need 0 < ramp_end <= pull_start")


@dataclass(frozen=True)
class SimultaneousProfile:
    """Grasp-then-pull timeline for simultaneous-control runs."""

    fg_hold: float = 0.2
    grasp_ramp_end: float = 5.0
    pull_ramp_start: float = 8.0
    pull_ramp_end: float = 28.0
    hold_until: float = 33.0

    def __post_init__(self):
        ts = (0.0, self.grasp_ramp_end, self.pull_ramp_start, self.pull_ramp_end, self.hold_until)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("profile timings must be strictly increasing")


@dataclass(frozen=True)
class TrackingConfig:
    mode: str = "grasp"
    thetas_deg: tuple = (10.0, 30.0, 50.0)
    grasp_amplitudes: tuple = (0.2, 0.25, 0.3)
    pull_amplitude: float = 2.0
    frequencies: tuple = (1.0 / 30.0, 1.0 / 15.0, 1.0 / 10.0)
    repeat: int = 1
    periods: float = 1.5
    window_start_periods: float = 0.25
    preamble: GraspPreamble = GraspPreamble()
    simultaneous: SimultaneousProfile = SimultaneousProfile()

    def __post_init__(self):
        if self.mode not in TRACKING_MODES:
            raise ValueError(f"tracking mode must be one of {TRACKING_MODES}")
        if len(self.grasp_amplitudes) != len(self.thetas_deg):
            raise ValueError("grasp_amplitudes must pair one-to-one with thetas_deg")
        if self.repeat < 1:
            raise ValueError("repeat must be at least 1")


@dataclass(frozen=True)
class TractionConfig:
    params: TractionParams = TractionParams()
    approach_speed: float = 1.0
    settle_time: float = 1.0
    move_out_hold: float = 1.0
    max_duration: float = 400.0
    script: str | None = None
    disturbance_amplitude: float = 0.1
    disturbance_duration: float = 0.5
    grip_release: float = 0.06

    def __post_init__(self):
        if self.approach_speed <= 0.0:
            raise ValueError("approach_speed must be positive")
        if self.settle_time < 0.0 or self.move_out_hold < 0.0:
            raise ValueError("settle_time and move_out_hold must be non-negative")
        if self.max_duration <= 0.0:
            raise ValueError("max_duration must be positive")


@dataclass(frozen=True)
class ServeConfig:
    port: int = 8765
    time_scale: float = 1.0
    telemetry_decimation: int = 1

    def __post_init__(self):
        if self.time_scale <= 0.0:
            raise ValueError("time_scale must be positive")
        if self.telemetry_decimation < 1:
            raise ValueError("telemetry_decimation must be at least 1")


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    seed: int = 0
    geometry: GeometryConfig = GeometryConfig()
    spring: SpringModel = SpringModel(ks=1.0, ts_max=5.0)
    tissue: TissueModel = TissueModel(kt=0.1, ct=0.01)
    simulation: SimConfig = SimConfig()
    control: ControlConfig = ControlConfig()
    tracking: TrackingConfig | None = None
    traction: TractionConfig | None = None
    serve: ServeConfig = ServeConfig()


def _coerce_tuples(value):
    if isinstance(value, list):
        return tuple(_coerce_tuples(v) for v in value)
    return value


def _build(cls, data, path, nested=None):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{path}.{key}: unknown key")
        builder = (nested or {}).get(key)
        kwargs[key] = builder(value, f"{path}.{key}") if builder else _coerce_tuples(value)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build_gains(data, path):
    return _build(PidGains, data, path)


def _build_control(data, path):
    return _build(
        ControlConfig,
        data,
        path,
        nested={"grasp_gains": _build_gains, "pull_gains": _build_gains},
    )


def _build_tracking(data, path):
    return _build(
        TrackingConfig,
        data,
        path,
        nested={
            "preamble": lambda d, p: _build(GraspPreamble, d, p),
            "simultaneous": lambda d, p: _build(SimultaneousProfile, d, p),
        },
    )


def _build_traction(data, path):
    return _build(
        TractionConfig,
        data,
        path,
        nested={"params": lambda d, p: _build(TractionParams, d, p)},
    )


def scenario_from_dict(data: dict, path: str = "scenario") -> Scenario:
    return _build(
        Scenario,
        data,
        path,
        nested={
            "geometry": lambda d, p: _build(GeometryConfig, d, p),
            "spring": lambda d, p: _build(SpringModel, d, p),
            "tissue": lambda d, p: _build(TissueModel, d, p),
            "simulation": lambda d, p: _build(SimConfig, d, p),
            "control": _build_control,
            "tracking": _build_tracking,
            "traction": _build_traction,
            "serve": lambda d, p: _build(ServeConfig, d, p),
        },
    )


def _load_yaml(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML ({exc})") from exc


def load_scenario(path) -> Scenario:
    data = _load_yaml(path)
    if data is None:
        data = {}
    return scenario_from_dict(data, path="scenario")


def load_script(path) -> list[tuple[float, dict]]:
    """Operator command script: ordered records {t, command, args}.

    Returns a list of (t_offset_s, payload) sorted by time, where payload
    has the same shape as a live console command frame.
    """
    data = _load_yaml(path)
    if data is None:
        return []
    if not isinstance(data, list):
        raise ConfigError("script: expected a list of {t, command, args} records")
    out = []
    for idx, record in enumerate(data):
        if not isinstance(record, dict):
            raise ConfigError(f"script[{idx}]: expected a mapping")
        unknown = set(record) - {"t", "command", "args"}
        if unknown:
            raise ConfigError(f"script[{idx}].{sorted(unknown)[0]}: unknown key")
        if "t" not in record or "command" not in record:
            raise ConfigError(f"script[{idx}]: needs 't' and 'command'")
        args = record.get("args") or {}
        if not isinstance(args, dict):
            raise ConfigError(f"script[{idx}].args: expected a mapping")
        out.append((float(record["t"]), {"command": record["command"], "args": args}))
    out.sort(key=lambda item: item[0])
    return out
