"""Resection operation flow as an explicit finite state machine.

Flow: approach until touch is sensed (pull estimate at or below the
negative touch threshold), grasp to the grasp target, pull to the initial
pull target, then alternate operator-triggered cuts with pulls toward
geometrically reduced targets. Pull segments stop on target, on the
per-segment distance increment limit, or on the total distance limit.
After each cut the drivers hold still through the cut transient; if the
settled pull estimate falls below the cutoff threshold the flow stops
pulling and asks the operator to confirm cutoff.

Operator commands arrive through an ordered queue and are consumed at most
one per tick; a command the current phase does not accept is rejected with
an event. The session itself never touches the plant: each tick returns a
directive (control mode, targets, caps, optional cut) for the runner to
apply, which keeps replay deterministic.
"""

import math
from collections import deque
from dataclasses import dataclass, field

from .forceps import ForceReadings

PHASE_APPROACH = "Approach"
PHASE_GRASPING = "Grasping"
PHASE_INITIAL_PULL = "InitialPull"
PHASE_AWAIT_CUT = "AwaitCut"
PHASE_POST_CUT_PULL = "PostCutPull"
PHASE_OPERATOR_CHECK = "OperatorCheck"
PHASE_MOVE_OUT = "MoveOut"
PHASE_DONE = "Done"
PHASE_FAILED = "Failed"

TERMINAL_PHASES = (PHASE_DONE, PHASE_FAILED)

CMD_CUT = "cut"
CMD_CONFIRM_CUTOFF = "confirm_cutoff"
CMD_REQUEST_ANOTHER_CUT = "request_another_cut"
CMD_ABORT = "abort"
CMD_ADJUST_TARGETS = "adjust_targets"

COMMAND_KINDS = (
    CMD_CUT,
    CMD_CONFIRM_CUTOFF,
    CMD_REQUEST_ANOTHER_CUT,
    CMD_ABORT,
    CMD_ADJUST_TARGETS,
)

# Which phases accept which commands; mirrored by the operator console.
COMMAND_PHASES = {
    CMD_CUT: (PHASE_AWAIT_CUT, PHASE_OPERATOR_CHECK),
    CMD_CONFIRM_CUTOFF: (PHASE_OPERATOR_CHECK,),
    CMD_REQUEST_ANOTHER_CUT: (PHASE_OPERATOR_CHECK,),
    CMD_ADJUST_TARGETS: (
        PHASE_GRASPING,
        PHASE_INITIAL_PULL,
        PHASE_AWAIT_CUT,
        PHASE_POST_CUT_PULL,
        PHASE_OPERATOR_CHECK,
    ),
    CMD_ABORT: (
        PHASE_APPROACH,
        PHASE_GRASPING,
        PHASE_INITIAL_PULL,
        PHASE_AWAIT_CUT,
        PHASE_POST_CUT_PULL,
        PHASE_OPERATOR_CHECK,
        PHASE_MOVE_OUT,
    ),
}

# Control directives a tick can request from the runner.
MODE_APPROACH = "approach"
MODE_GRASP = "grasp"
MODE_PULL = "pull"
MODE_DECOUPLED = "decoupled"
MODE_GRASP_GUARDED = "grasp_guarded"
MODE_HOLD = "hold"

# Distance-guard trigger margin; sits above the speed-cap backoff so a
# capped pull still reaches the guard instead of stalling just short.
_GUARD_EPS = 2e-6


@dataclass(frozen=True)
class TractionParams:
    """Thresholds and limits of the operation flow (forces N, distances mm)."""

    Fp_touch: float = -0.05
    Fg_target: float = 0.3
    Fp_initial: float = 0.25
    rho: float = 0.8
    d_incr_limit: float = 20.0
    d_total_limit: float = 30.0
    Fp_cutoff: float = 0.05
    decouple_during_pull: bool = True

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")
        if self.Fp_touch >= 0.0:
            raise ValueError("Fp_touch must be negative (touch pushes)")
        if self.Fp_cutoff <= 0.0:
            raise ValueError("Fp_cutoff must be positive")
        if self.d_incr_limit <= 0.0 or self.d_total_limit <= 0.0:
            raise ValueError("distance limits must be positive")
        if self.Fg_target <= 0.0 or self.Fp_initial <= 0.0:
            raise ValueError("force targets must be positive")


@dataclass(frozen=True)
class OperatorCommand:
    kind: str
    cut_fraction: float = 0.55
    d_fg: float = 0.0
    d_fp: float = 0.0

    def __post_init__(self):
        if self.kind not in COMMAND_KINDS:
            raise ValueError(f"unknown operator command {self.kind!r}")
        if self.kind == CMD_CUT and not 0.0 < self.cut_fraction < 1.0:
            raise ValueError("cut_fraction must lie strictly between 0 and 1")


@dataclass
class TickDirective:
    """What the runner should do for the coming sensor period."""

    phase: str
    mode: str
    fg_target: float
    fp_target: float
    # Cap on the commanded jaw speed u1 + u2 (mm/s) so the distance limits
    # cannot be overshot within the period; None = unconstrained.
    dp_speed_cap: float | None = None
    cut: float | None = None
    phase_changed: bool = False
    acks: list[tuple[OperatorCommand, bool, str]] = field(default_factory=list)
    events: list[str] = field(default_factory=list)


def hold_static(phase: str):
    """Zero driver speeds while cutting: the forceps provide a constant
    cutting surface and cut transients are observed, not corrected."""
    if phase != PHASE_AWAIT_CUT:
        raise ValueError(f"hold_static applies to {PHASE_AWAIT_CUT}, not {phase}")
    return 0.0, 0.0


class TractionSession:
    """One operation-flow instance. Single-owner; advanced tick by tick.

    Commands may be submitted from another thread of control; they join an
    ordered queue consumed at most once per tick.
    """

    def __init__(
        self,
        params: TractionParams,
        approach_speed: float = 1.0,
        settle_time: float = 1.0,
        move_out_hold: float = 1.0,
    ):
        self.params = params
        self.approach_speed = approach_speed
        self.settle_time = settle_time
        self.move_out_hold = move_out_hold

        self.phase = PHASE_APPROACH
        self.cut_index = 0
        self.failure_reason = ""
        self.fg_target = params.Fg_target
        self.fp_target = params.Fp_initial
        # Fp target history: index i is the target after the i-th cut.
        self.target_schedule: list[float] = [params.Fp_initial]
        self.phase_log: list[tuple[float, str]] = [(0.0, PHASE_APPROACH)]

        self._queue: deque[OperatorCommand] = deque()
        self._segment_start_dp = 0.0
        # Post-cut hold, counted in ticks; the cut lands after the tick that
        # starts it, so the count always spans at least one post-cut sample
        # before the cutoff comparison runs.
        self._settle_ticks = 0
        self._move_out_left = 0.0
        self._cutoff_pending = False

    # ------------------------------------------------------------------

    def submit(self, command: OperatorCommand):
        self._queue.append(command)

    @property
    def cuts_performed(self) -> int:
        return self.cut_index

    def _change_phase(self, new_phase: str, t: float, directive: TickDirective):
        directive.events.append(f"phase:{self.phase}->{new_phase}")
        self.phase = new_phase
        self.phase_log.append((t, new_phase))
        directive.phase_changed = True

    # ------------------------------------------------------------------

    def tick(
        self,
        sensed: ForceReadings,
        d_p: float,
        failure: str,
        t: float,
        dt: float,
    ) -> TickDirective:
        """Advance the flow one sensor period; returns the control directive."""
        d = TickDirective(
            phase=self.phase,
            mode=MODE_HOLD,
            fg_target=self.fg_target if self.phase != PHASE_APPROACH else 0.0,
            fp_target=self._display_fp_target(),
        )

        if self.phase not in TERMINAL_PHASES:
            if failure != "none":
                self.failure_reason = failure
                self._change_phase(PHASE_FAILED, t, d)
            elif not (math.isfinite(sensed.Fp) and math.isfinite(sensed.Fg)):
                self.failure_reason = "sensor"
                self._change_phase(PHASE_FAILED, t, d)

        self._consume_command(t, dt, d)
        self._auto_transitions(sensed, d_p, t, dt, d)
        self._fill_directive(d_p, dt, d)
        d.phase = self.phase
        d.fg_target = self.fg_target if self.phase != PHASE_APPROACH else 0.0
        d.fp_target = self._display_fp_target()
        return d

    def _display_fp_target(self) -> float:
        if self.phase in (PHASE_APPROACH, PHASE_GRASPING):
            return 0.0
        return self.fp_target

    # ------------------------------------------------------------------

    def _consume_command(self, t: float, dt: float, d: TickDirective):
        if not self._queue or self.phase in TERMINAL_PHASES:
            return
        cmd = self._queue.popleft()
        if self.phase not in COMMAND_PHASES[cmd.kind]:
            reason = f"{cmd.kind} not accepted in phase {self.phase}"
            d.acks.append((cmd, False, reason))
            d.events.append(f"command_rejected:{cmd.kind}")
            return

        if cmd.kind == CMD_CUT:
            self.cut_index += 1
            self.fp_target = self.params.rho * self.fp_target
            self.target_schedule.append(self.fp_target)
            d.cut = cmd.cut_fraction
            self._settle_ticks = 1 + max(1, math.ceil(self.settle_time / dt - 1e-9))
            self._cutoff_pending = True
            self._change_phase(PHASE_POST_CUT_PULL, t, d)
        elif cmd.kind == CMD_CONFIRM_CUTOFF:
            self._move_out_left = self.move_out_hold
            self._change_phase(PHASE_MOVE_OUT, t, d)
        elif cmd.kind == CMD_REQUEST_ANOTHER_CUT:
            self._change_phase(PHASE_AWAIT_CUT, t, d)
        elif cmd.kind == CMD_ADJUST_TARGETS:
            self.fg_target = max(0.0, self.fg_target + cmd.d_fg)
            self.fp_target = max(0.0, self.fp_target + cmd.d_fp)
            d.events.append(
                f"targets_adjusted:Fg={self.fg_target:.6g},Fp={self.fp_target:.6g}"
            )
        elif cmd.kind == CMD_ABORT:
            self.failure_reason = "operator_abort"
            self._change_phase(PHASE_FAILED, t, d)

        d.acks.append((cmd, True, ""))
        d.events.append(f"command_accepted:{cmd.kind}")

    # ------------------------------------------------------------------

    def _auto_transitions(
        self, sensed: ForceReadings, d_p: float, t: float, dt: float, d: TickDirective
    ):
        params = self.params
        if self.phase == PHASE_APPROACH:
            if sensed.Fp <= params.Fp_touch:
                d.events.append("touch_detected")
                self._change_phase(PHASE_GRASPING, t, d)
        elif self.phase == PHASE_GRASPING:
            if sensed.Fg >= self.fg_target:
                d.events.append("grasp_established")
                self._segment_start_dp = d_p
                self._change_phase(PHASE_INITIAL_PULL, t, d)
        elif self.phase in (PHASE_INITIAL_PULL, PHASE_POST_CUT_PULL):
            if self._settle_ticks > 0:
                self._settle_ticks -= 1
                if self._settle_ticks > 0:
                    return
                # Transient settled: decide between pulling on and cutoff.
                self._segment_start_dp = d_p
                if self._cutoff_pending and sensed.Fp < params.Fp_cutoff:
                    self._cutoff_pending = False
                    d.events.append("cutoff_detected")
                    self._change_phase(PHASE_OPERATOR_CHECK, t, d)
                    return
                self._cutoff_pending = False
            if sensed.Fp >= self.fp_target:
                d.events.append("pull_target_reached")
                self._change_phase(PHASE_AWAIT_CUT, t, d)
            elif d_p - self._segment_start_dp >= params.d_incr_limit - _GUARD_EPS:
                d.events.append("incr_limit_reached")
                self._change_phase(PHASE_AWAIT_CUT, t, d)
            elif d_p >= params.d_total_limit - _GUARD_EPS:
                d.events.append("total_limit_reached")
                self._change_phase(PHASE_AWAIT_CUT, t, d)
        elif self.phase == PHASE_MOVE_OUT:
            self._move_out_left -= dt
            if self._move_out_left <= 0.0:
                d.events.append("moved_out")
                self._change_phase(PHASE_DONE, t, d)

    # ------------------------------------------------------------------

    def _fill_directive(self, d_p: float, dt: float, d: TickDirective):
        params = self.params
        if self.phase == PHASE_APPROACH:
            d.mode = MODE_APPROACH
        elif self.phase == PHASE_GRASPING:
            d.mode = MODE_GRASP
        elif self.phase in (PHASE_INITIAL_PULL, PHASE_POST_CUT_PULL):
            if self._settle_ticks > 0:
                d.mode = MODE_HOLD
                return
            d.mode = MODE_DECOUPLED if params.decouple_during_pull else MODE_PULL
            # Forward-speed cap so neither distance limit can be overshot
            # within the coming period (backed off one nanometre so float
            # rounding cannot land past the limit).
            remaining_total = params.d_total_limit - d_p
            remaining_incr = params.d_incr_limit - (d_p - self._segment_start_dp)
            d.dp_speed_cap = max(0.0, (min(remaining_total, remaining_incr) - 1e-6) / dt)
        elif self.phase == PHASE_OPERATOR_CHECK:
            # The pull is over, but a decoupled session keeps the grasp
            # regulated (never pulling forward) while the operator inspects
            # the cut; the zero speed cap pins the jaws in place.
            d.mode = MODE_GRASP_GUARDED if params.decouple_during_pull else MODE_HOLD
            d.dp_speed_cap = 0.0
        else:
            d.mode = MODE_HOLD
