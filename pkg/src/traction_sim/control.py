"""Discrete-time PID force controllers and the three traction control modes.

All controllers run at the sensor rate (the force estimates update no
faster than the camera), with commands zero-order-held between ticks.
Grasp regulation drives the upper driver, scaled by the grasp-angle
schedule so differently angled jaws respond alike, while the lower driver
cancels the resulting tip motion. Pull regulation drives the lower driver
with the upper driver locked. The decoupled mode runs both loops at once
with no shared state.
"""

import math
from dataclasses import dataclass, replace

from .errors import SchedulingError
from .forceps import ForceReadings
from .plant import PlantInput

# Lower-driver compensation guards: the ratio ts/d_u is undefined at grasp
# onset and must stay bounded against sensor glitches.
COMPENSATION_DU_MIN = 0.05  # mm
COMPENSATION_RATIO_CAP = 10.0

MODE_GRASP_HOLD = "GraspHold"
MODE_PULL_ONLY = "PullOnly"
MODE_DECOUPLED = "DecoupledPullGrasp"

DEFAULT_V_MAX = 5.0  # mm/s, both drivers


@dataclass(frozen=True)
class PidGains:
    """PID gains in mm/s per N (kp), per N*s (ki), per N/s (kd)."""

    kp: float
    ki: float
    kd: float
    integral_limit: float = 5.0
    derivative_filter_tc: float = 0.05

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0.0:
            raise ValueError("PID gains must be non-negative")
        if self.integral_limit <= 0.0:
            raise ValueError("integral_limit must be strictly positive")
        if self.derivative_filter_tc < 0.0:
            raise ValueError("derivative_filter_tc must be non-negative")


# Defaults found adequate on the physical prototype.
DEFAULT_GRASP_GAINS = PidGains(kp=20.0, ki=1.0, kd=1.0)
DEFAULT_PULL_GAINS = PidGains(kp=10.0, ki=2.0, kd=5.0)


@dataclass(frozen=True)
class ControlError:
    """Force-tracking errors: e1 grasp channel, e2 pull channel (N)."""

    e1: float
    e2: float


def tracking_errors(
    sensed: ForceReadings, fg_target: float, fp_target: float
) -> ControlError:
    """Target-minus-estimate errors for both force channels."""
    return ControlError(e1=fg_target - sensed.Fg, e2=fp_target - sensed.Fp)


@dataclass(frozen=True)
class ControlMode:
    """Which controller variant is active, with its gain sets and grasp angle."""

    variant: str
    grasp_gains: PidGains = DEFAULT_GRASP_GAINS
    pull_gains: PidGains = DEFAULT_PULL_GAINS
    theta: float = 0.0

    def __post_init__(self):
        if self.variant not in (MODE_GRASP_HOLD, MODE_PULL_ONLY, MODE_DECOUPLED):
            raise ValueError(f"unknown control mode {self.variant!r}")


def gain_schedule_factor(theta: float, alpha0: float) -> float:
    """Grasp-gain scaling sin(alpha0)/sin(theta/2 + alpha0).

    Equalizes the grasp-force response across grasp angles: wider jaws
    transmit more force per unit cable travel, so their gains shrink.
    """
    denom = math.sin(theta / 2.0 + alpha0)
    if denom <= 1e-6:
        raise SchedulingError(
            f"sin(theta/2 + alpha0) = {denom:.3g} too small to schedule against"
        )
    return math.sin(alpha0) / denom


def schedule_gains(base: PidGains, theta: float, alpha0: float) -> PidGains:
    """Scale all three gains by the grasp-angle schedule factor."""
    f = gain_schedule_factor(theta, alpha0)
    return replace(base, kp=base.kp * f, ki=base.ki * f, kd=base.kd * f)


class Pid:
    """One discrete PID loop: trapezoidal integral with clamping, derivative
    of first-order-filtered error, conditional integration while the output
    is saturated at the actuator speed limit."""

    def __init__(self, gains: PidGains, output_limit: float = DEFAULT_V_MAX):
        if output_limit <= 0.0:
            raise ValueError("output_limit must be strictly positive")
        self.gains = gains
        self.output_limit = output_limit
        self.fault = False
        self._i_term = 0.0
        self._prev_error = 0.0
        self._filtered = 0.0

    def reset(self):
        self.fault = False
        self._i_term = 0.0
        self._prev_error = 0.0
        self._filtered = 0.0

    def step(self, error: float, dt: float) -> float:
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if not math.isfinite(error):
            self.fault = True
            return 0.0
        g = self.gains

        tc = g.derivative_filter_tc
        blend = dt / (tc + dt) if tc > 0.0 else 1.0
        filtered = self._filtered + blend * (error - self._filtered)
        derivative = (filtered - self._filtered) / dt

        candidate = self._i_term + g.ki * 0.5 * (error + self._prev_error) * dt
        candidate = min(max(candidate, -g.integral_limit), g.integral_limit)

        unsaturated = g.kp * error + candidate + g.kd * derivative
        limit = self.output_limit
        if -limit <= unsaturated <= limit:
            self._i_term = candidate
            command = unsaturated
        else:
            # Freeze the integral while saturated so a sign flip in the
            # error brings the command off the rail within one step.
            held = g.kp * error + self._i_term + g.kd * derivative
            command = min(max(held, -limit), limit)

        self._prev_error = error
        self._filtered = filtered
        return command


class GraspController:
    """Grasp-force loop: scheduled PID on the upper driver, lower driver
    counter-moving to keep the jaw tip stationary on the tissue."""

    def __init__(
        self,
        gains: PidGains,
        theta: float,
        alpha0: float,
        v_max_lower: float = DEFAULT_V_MAX,
        v_max_upper: float = DEFAULT_V_MAX,
    ):
        self.pid = Pid(schedule_gains(gains, theta, alpha0), output_limit=v_max_upper)
        self.v_max_lower = v_max_lower
        self.events: list[str] = []

    def step(
        self, sensed: ForceReadings, ts: float, d_u: float, fg_target: float, dt: float
    ) -> PlantInput:
        u2 = self.pid.step(fg_target - sensed.Fg, dt)
        ratio = 0.0
        if abs(d_u) > COMPENSATION_DU_MIN:
            ratio = ts / d_u
            if abs(ratio) > COMPENSATION_RATIO_CAP:
                ratio = math.copysign(COMPENSATION_RATIO_CAP, ratio)
                self.events.append("compensation_clamped")
        u1 = -ratio * u2
        u1 = min(max(u1, -self.v_max_lower), self.v_max_lower)
        return PlantInput(u1=u1, u2=u2)


class PullController:
    """Pull-force loop on the lower driver; the upper driver stays locked."""

    def __init__(self, gains: PidGains, v_max_lower: float = DEFAULT_V_MAX):
        self.pid = Pid(gains, output_limit=v_max_lower)

    def step(self, sensed: ForceReadings, fp_target: float, dt: float) -> PlantInput:
        return PlantInput(u1=self.pid.step(fp_target - sensed.Fp, dt), u2=0.0)


class DecoupledController:
    """Simultaneous grasp + pull regulation during pulling.

    The pull loop owns the lower driver and the grasp loop the upper
    driver; the two share no state, so their evaluation order is
    irrelevant. No tip-motion compensation here: the lower driver is busy
    tracking the pull target.
    """

    def __init__(
        self,
        grasp_gains: PidGains,
        pull_gains: PidGains,
        theta: float,
        alpha0: float,
        v_max_lower: float = DEFAULT_V_MAX,
        v_max_upper: float = DEFAULT_V_MAX,
    ):
        self.grasp_pid = Pid(
            schedule_gains(grasp_gains, theta, alpha0), output_limit=v_max_upper
        )
        self.pull_pid = Pid(pull_gains, output_limit=v_max_lower)

    def step(
        self, sensed: ForceReadings, fg_target: float, fp_target: float, dt: float
    ) -> PlantInput:
        err = tracking_errors(sensed, fg_target, fp_target)
        u1 = self.pull_pid.step(err.e2, dt)
        u2 = self.grasp_pid.step(err.e1, dt)
        return PlantInput(u1=u1, u2=u2)


def build_controller(
    mode: ControlMode,
    alpha0: float,
    v_max_lower: float = DEFAULT_V_MAX,
    v_max_upper: float = DEFAULT_V_MAX,
):
    """Controller instance for one control mode (fresh loop state)."""
    if mode.variant == MODE_GRASP_HOLD:
        return GraspController(
            mode.grasp_gains, mode.theta, alpha0,
            v_max_lower=v_max_lower, v_max_upper=v_max_upper,
        )
    if mode.variant == MODE_PULL_ONLY:
        return PullController(mode.pull_gains, v_max_lower=v_max_lower)
    return DecoupledController(
        mode.grasp_gains, mode.pull_gains, mode.theta, alpha0,
        v_max_lower=v_max_lower, v_max_upper=v_max_upper,
    )
