import math
import pathlib

import pytest

from traction_sim.forceps import ForcepsGeometry, SpringModel, TissueModel
from traction_sim.scenario import (
    ControlConfig,
    GeometryConfig,
    Scenario,
    SimultaneousProfile,
    TrackingConfig,
    TractionConfig,
)
from traction_sim.session import TractionParams

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"


@pytest.fixture
def geometry_g0():
    """Reference linkage: l1=1, l2=2, l3=1.5 mm, alpha0=20 deg, theta=10 deg."""
    return ForcepsGeometry(
        l1=1.0, l2=2.0, l3=1.5, alpha0=math.radians(20.0), theta=math.radians(10.0)
    )


@pytest.fixture
def spring_unit():
    return SpringModel(ks=1.0, ts_max=5.0)


@pytest.fixture
def tissue_soft():
    return TissueModel(kt=0.1, ct=0.01)


def bench_tissue(ct: float = 0.005) -> TissueModel:
    """Sensor-rig stand-in: nothing tears, slides, or breaks on the bench."""
    return TissueModel(
        kt=0.1,
        ct=ct,
        grip_limit_ratio=1000.0,
        split_force=1000.0,
        break_grasp_force=1000.0,
    )


def bench_scenario(mode: str, pull_variant: str = "decoupled", l3: float = 1.5) -> Scenario:
    """Tracking scenario on the bench rig; l3=10 selects the extension jaws."""
    return Scenario(
        geometry=GeometryConfig(l1=1.0, l2=2.0, l3=l3, alpha0_deg=20.0),
        spring=SpringModel(ks=2.0, ts_max=3.0),
        tissue=bench_tissue(),
        control=ControlConfig(pull_variant=pull_variant),
        tracking=TrackingConfig(
            mode=mode,
            simultaneous=SimultaneousProfile(
                fg_hold=0.2,
                grasp_ramp_end=5.0,
                pull_ramp_start=8.0,
                pull_ramp_end=28.0,
                hold_until=33.0,
            ),
        ),
    )


def traction_scenario(decouple: bool = True, seed: int = 7) -> Scenario:
    """Soft-tissue resection fixture used across the traction tests."""
    return Scenario(
        seed=seed,
        geometry=GeometryConfig(l1=1.0, l2=2.0, l3=1.5, alpha0_deg=20.0, theta_deg=30.0),
        spring=SpringModel(ks=1.0, ts_max=5.0),
        tissue=TissueModel(kt=0.03, ct=0.01),
        control=ControlConfig(
            pull_variant="decoupled" if decouple else "pull_only"
        ),
        traction=TractionConfig(
            params=TractionParams(decouple_during_pull=decouple)
        ),
    )


def four_cut_script(cut_fraction: float = 0.55):
    script = [
        (t, {"command": "cut", "args": {"cut_fraction": cut_fraction}})
        for t in (30.0, 60.0, 90.0, 120.0)
    ]
    script.append((150.0, {"command": "confirm_cutoff", "args": {}}))
    return script
