"""Deterministic simulator and force-controller suite for tissue traction
with force-sensing forceps: plant model, grasp/pull/decoupled force
controllers, the resection operation flow, analytics, and a live session
service for an operator console."""

from .forceps import (
    ForcepsGeometry,
    ForceReadings,
    SpringModel,
    TissueModel,
    coupling_gain,
    grasping_force,
    linkage_angle,
    pulling_force,
    spring_force,
)
from .plant import Plant, PlantInput, PlantState, SimConfig, rank_checks
from .control import (
    ControlError,
    ControlMode,
    DecoupledController,
    GraspController,
    Pid,
    PidGains,
    PullController,
    build_controller,
    gain_schedule_factor,
    schedule_gains,
    tracking_errors,
)
from .metrics import (
    ErrorReport,
    ErrorStats,
    ForceProfile,
    TraceRecord,
    error_stats,
    generate_profile,
    worst_case,
)
from .session import OperatorCommand, TractionParams, TractionSession, hold_static
from .scenario import Scenario, load_scenario, load_script
from .runner import TractionRun, TrackingRun, run_tracking, run_traction

__version__ = "0.1.0"
