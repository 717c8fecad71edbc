"""Fixed-step simulation of the two-driver traction plant.

The mechanism is a pure double integrator: the state [d_p, d_s] (jaw and
spring-base displacements relative to the tissue body, mm) integrates the
driver speeds through xdot = B*u with B = [[1, 1], [1, 0]] and no drift
term, so explicit Euler is exact between input changes. The static output
map produces the pull force from the tissue spring-damper and the grasp
force from the cable equilibrium:

    Fp = kt_eff*d_p + ct*dp_dot
    Fs = ks*(d_p - d_s)
    Fd = Fp + Fs
    Fg = coupling_gain * max(Fd, 0)

Contact starts disengaged; commanded forward motion that would push d_p
below zero engages the tissue, after which pushing yields Fp < 0 (the
touch-detection signal). Failure (slide/split/break) latches: outputs drop
to zero and the jaw state stops responding to the upper driver.
"""

import math
import random
from dataclasses import dataclass

import numpy as np

from .errors import SimulationFault
from .forceps import (
    ForcepsGeometry,
    ForceReadings,
    SpringModel,
    TissueModel,
    coupling_gain,
    readings_from_drive,
    spring_force,
)

FAILURE_NONE = "none"
FAILURE_SLIDE = "slide"
FAILURE_SPLIT = "split"
FAILURE_BREAK = "break"

# Below this grip force there is no grip for a pull to slide against; the
# slide criterion only applies once a grasp is actually established.
SLIDE_MIN_FG = 0.02

_ZERO_READINGS = ForceReadings(Fd=0.0, Fs=0.0, Fp=0.0, Fg=0.0)


@dataclass
class PlantState:
    """Kinematic state plus tissue status of one simulated traction site."""

    d_p: float = 0.0
    d_s: float = 0.0
    d_l: float = 0.0
    d_u: float = 0.0
    engaged: bool = False
    kt_eff: float = 0.0
    failure: str = FAILURE_NONE
    # Remaining duration (s) of the cut-interaction disturbance on Fp.
    disturb_left: float = 0.0


@dataclass(frozen=True)
class PlantInput:
    """Driver speeds (mm/s): u1 lower driver, u2 upper driver."""

    u1: float
    u2: float


@dataclass(frozen=True)
class SimConfig:
    """Integration step, sensor period, output noise, and RNG seed.

    The sensor period must be an integer multiple of the plant step; the
    defaults give a 3 kHz plant under the 30 Hz sensor, 100 substeps per
    sample.
    """

    dt_plant: float = 1.0 / 3000.0
    dt_sensor: float = 1.0 / 30.0
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.dt_plant <= 0.0 or self.dt_sensor <= 0.0:
            raise ValueError("dt_plant and dt_sensor must be positive")
        if self.dt_plant > self.dt_sensor:
            raise ValueError("dt_plant must not exceed dt_sensor")
        ratio = self.dt_sensor / self.dt_plant
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValueError("dt_sensor must be an integer multiple of dt_plant")
        if self.noise_sd < 0.0:
            raise ValueError("noise_sd must be non-negative")

    @property
    def steps_per_sample(self) -> int:
        return round(self.dt_sensor / self.dt_plant)


class Plant:
    """Single-owner plant instance; step sequentially, never share mid-step."""

    def __init__(
        self,
        geometry: ForcepsGeometry,
        spring: SpringModel,
        tissue: TissueModel,
        config: SimConfig | None = None,
        engaged: bool = False,
        v_max_lower: float = 5.0,
        v_max_upper: float = 5.0,
        disturbance_amplitude: float = 0.1,
        disturbance_duration: float = 0.5,
        grip_release: float = 0.06,
    ):
        self.geometry = geometry
        self.spring = spring
        self.tissue = tissue
        self.config = config or SimConfig()
        self.v_max_lower = v_max_lower
        self.v_max_upper = v_max_upper
        self.disturbance_amplitude = disturbance_amplitude
        self.disturbance_duration = disturbance_duration
        # Fraction of the spring compression released by each cut's
        # scissor-tissue interaction (grip impairment; see apply_cut).
        self.grip_release = grip_release
        self.state = PlantState(engaged=engaged, kt_eff=tissue.kt)
        self._rng = random.Random(self.config.seed)
        self._events: list[str] = []
        self._last_truth = _ZERO_READINGS

    # ------------------------------------------------------------------
    # Integration
    # ------------------------------------------------------------------

    def _check_input(self, u: PlantInput):
        if abs(u.u1) > self.v_max_lower + 1e-12:
            raise ValueError(f"u1 {u.u1:.6g} exceeds lower-driver limit {self.v_max_lower:.6g}")
        if abs(u.u2) > self.v_max_upper + 1e-12:
            raise ValueError(f"u2 {u.u2:.6g} exceeds upper-driver limit {self.v_max_upper:.6g}")

    def step(self, u: PlantInput, dt: float) -> ForceReadings:
        """Advance one explicit-Euler substep and return the true readings."""
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self._check_input(u)
        s = self.state
        u1, u2 = u.u1, u.u2

        if s.failure != FAILURE_NONE:
            # Grip lost: the arm still translates but jaw motion is inert.
            s.d_p += u1 * dt
            s.d_s += u1 * dt
            s.d_l += u1 * dt
            self._last_truth = _ZERO_READINGS
            return self._last_truth

        dp_dot = u1 + u2
        if not s.engaged and s.d_p + dp_dot * dt < 0.0:
            s.engaged = True
            self._events.append("contact_engaged")

        s.d_p += dp_dot * dt
        s.d_s += u1 * dt
        s.d_l += u1 * dt
        s.d_u += u2 * dt
        if s.disturb_left > 0.0:
            s.disturb_left = max(0.0, s.disturb_left - dt)

        if not (math.isfinite(s.d_p) and math.isfinite(s.d_s)):
            raise SimulationFault("non-finite plant state")

        if not s.engaged:
            self._last_truth = _ZERO_READINGS
            return self._last_truth

        fs, _ = spring_force(s.d_p - s.d_s, self.spring)
        fp = s.kt_eff * s.d_p + self.tissue.ct * dp_dot + self._disturbance()
        fd = fp + fs
        self._last_truth = readings_from_drive(fd, fs, self.geometry, self.spring)
        self._detect_failure(self._last_truth)
        if s.failure != FAILURE_NONE:
            self._last_truth = _ZERO_READINGS
        return self._last_truth

    def advance(self, u: PlantInput, n_steps: int | None = None) -> ForceReadings:
        """Run one sensor period (or n_steps substeps) under a held input."""
        if n_steps is None:
            n_steps = self.config.steps_per_sample
        readings = self._last_truth
        for _ in range(n_steps):
            readings = self.step(u, self.config.dt_plant)
        return readings

    def _disturbance(self) -> float:
        left = self.state.disturb_left
        if left <= 0.0:
            return 0.0
        duration = self.disturbance_duration
        elapsed = duration - left
        # One full swing each way, decaying to zero by the end of the window.
        return (
            self.disturbance_amplitude
            * math.sin(2.0 * math.pi * elapsed / duration)
            * (1.0 - elapsed / duration)
        )

    def _detect_failure(self, truth: ForceReadings):
        s = self.state
        t = self.tissue
        if truth.Fg >= SLIDE_MIN_FG and truth.Fp > t.grip_limit_ratio * truth.Fg:
            s.failure = FAILURE_SLIDE
        elif truth.Fp > t.split_force:
            s.failure = FAILURE_SPLIT
        elif truth.Fg > t.break_grasp_force:
            s.failure = FAILURE_BREAK
        else:
            return
        s.engaged = False
        self._events.append(f"failure:{s.failure}")

    # ------------------------------------------------------------------
    # Events on the tissue
    # ------------------------------------------------------------------

    def apply_cut(self, cut_fraction: float):
        """Sever cut_fraction of the load path: kt_eff scales by (1 - fraction).

        The jaw pose d_p is untouched, so the stored tissue force drops by
        the same factor. The scissor interaction also bleeds a small
        fraction of the spring compression (grip impairment) and starts a
        transient disturbance on subsequent Fp outputs.
        """
        if not 0.0 < cut_fraction < 1.0:
            raise ValueError("cut_fraction must lie strictly between 0 and 1")
        s = self.state
        if not s.engaged or s.failure != FAILURE_NONE:
            self._events.append("cut_ignored_disengaged")
            return
        s.kt_eff *= 1.0 - cut_fraction
        s.d_s += self.grip_release * (s.d_p - s.d_s)
        s.disturb_left = self.disturbance_duration
        self._events.append("cut_applied")

    def drain_events(self) -> list[str]:
        events, self._events = self._events, []
        return events

    # ------------------------------------------------------------------
    # Sensor view
    # ------------------------------------------------------------------

    def sample(self) -> ForceReadings:
        """Sensor view of the current truth: noise, then Fs saturation, then
        the derived channels, mimicking the physical sensing chain."""
        truth = self._last_truth
        fd = truth.Fd
        fs = truth.Fs
        if self.config.noise_sd > 0.0:
            fd += self._rng.gauss(0.0, self.config.noise_sd)
            fs += self._rng.gauss(0.0, self.config.noise_sd)
        low, high = self.spring.fs_range
        saturated = not low <= fs <= high
        fs_clamped = min(max(fs, low), high)
        sensed = readings_from_drive(fd, fs_clamped, self.geometry, self.spring)
        if saturated:
            sensed = ForceReadings(
                Fd=sensed.Fd,
                Fs=sensed.Fs,
                Fp=sensed.Fp,
                Fg=sensed.Fg,
                fs_saturated=True,
                cable_slack=sensed.cable_slack,
            )
        return sensed

    @property
    def truth(self) -> ForceReadings:
        return self._last_truth


def output_matrices(
    tissue: TissueModel, spring: SpringModel, geometry: ForcepsGeometry
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """State-space matrices (A, B, C, D) of the engaged plant.

    Outputs are ordered [Fg, Fp]; inputs [u1, u2]; states [d_p, d_s].
    """
    g = coupling_gain(geometry)
    kt, ct, ks = tissue.kt, tissue.ct, spring.ks
    A = np.zeros((2, 2))
    B = np.array([[1.0, 1.0], [1.0, 0.0]])
    C = np.array([[g * (kt + ks), -g * ks], [kt, 0.0]])
    D = np.array([[g * ct, g * ct], [ct, ct]])
    return A, B, C, D


def rank_checks(
    tissue: TissueModel, spring: SpringModel, geometry: ForcepsGeometry
) -> dict[str, bool]:
    """Kalman rank tests on the plant's state-space matrices."""
    A, B, C, _ = output_matrices(tissue, spring, geometry)
    n = A.shape[0]
    controllability = np.hstack([B, A @ B])
    observability = np.vstack([C, C @ A])
    return {
        "controllable": int(np.linalg.matrix_rank(controllability)) == n,
        "observable": int(np.linalg.matrix_rank(observability)) == n,
    }
