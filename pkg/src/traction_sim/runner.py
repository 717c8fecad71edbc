"""Simulation loops binding the plant, the controllers, and the operation
flow, producing sensor-rate traces.

Two loop shapes exist: profile-tracking runs (fixed mode timeline, used by
the tracking experiments) and traction runs (driven by the operation-flow
state machine, used headless and by the live session service). Both tick
at the sensor period and hold controller commands between ticks.
"""

import dataclasses
import json
import math
import os
import pathlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .control import (
    MODE_DECOUPLED as CTRL_DECOUPLED,
    MODE_GRASP_HOLD as CTRL_GRASP,
    MODE_PULL_ONLY as CTRL_PULL,
    ControlMode,
    build_controller,
)
from .errors import ConfigError, SimulationFault
from .forceps import ForceReadings
from .metrics import (
    REPORT_PAIRS,
    ErrorReport,
    ErrorStats,
    ForceProfile,
    TraceRecord,
    error_stats,
    generate_profile,
    write_report,
    write_trace,
)
from .plant import Plant, PlantInput, FAILURE_NONE
from .scenario import Scenario
from .session import (
    MODE_APPROACH,
    MODE_DECOUPLED,
    MODE_GRASP,
    MODE_GRASP_GUARDED,
    MODE_HOLD,
    MODE_PULL,
    PHASE_DONE,
    PHASE_FAILED,
    TERMINAL_PHASES,
    OperatorCommand,
    TickDirective,
    TractionSession,
)

THREADS_ENV = "TRACTION_SIM_THREADS"

_HOLD = PlantInput(u1=0.0, u2=0.0)


def command_from_payload(payload: dict) -> OperatorCommand:
    """Build an OperatorCommand from a script/wire record {command, args}."""
    if not isinstance(payload, dict) or "command" not in payload:
        raise ValueError("command payload needs a 'command' field")
    kind = payload["command"]
    args = payload.get("args") or {}
    known = {"cut_fraction", "d_fg", "d_fp"}
    unknown = set(args) - known
    if unknown:
        raise ValueError(f"unknown command args: {sorted(unknown)}")
    kwargs = {key: float(value) for key, value in args.items()}
    return OperatorCommand(kind=kind, **kwargs)


class TractionRun:
    """One operation-flow run over a scenario's plant, tick by tick."""

    def __init__(self, scenario: Scenario, script: list[tuple[float, dict]] | None = None):
        if scenario.traction is None:
            raise ConfigError("scenario.traction: section required for traction runs")
        self.scenario = scenario
        cfg = scenario.traction
        self.geometry = scenario.geometry.build()
        self.plant = Plant(
            geometry=self.geometry,
            spring=scenario.spring,
            tissue=scenario.tissue,
            config=scenario.simulation,
            engaged=False,
            v_max_lower=scenario.control.v_max_lower,
            v_max_upper=scenario.control.v_max_upper,
            disturbance_amplitude=cfg.disturbance_amplitude,
            disturbance_duration=cfg.disturbance_duration,
            grip_release=cfg.grip_release,
        )
        self.session = TractionSession(
            params=cfg.params,
            approach_speed=min(cfg.approach_speed, scenario.control.v_max_lower),
            settle_time=cfg.settle_time,
            move_out_hold=cfg.move_out_hold,
        )
        self.dt = scenario.simulation.dt_sensor
        self.max_ticks = int(math.ceil(cfg.max_duration / self.dt))
        self.records: list[TraceRecord] = []
        self._script = [
            (t, command_from_payload(payload)) for t, payload in (script or [])
        ]
        self._script.sort(key=lambda item: item[0])
        self._script_pos = 0
        self._tick_index = 0
        self._mode = None
        self._controller = None

    # ------------------------------------------------------------------

    @property
    def t(self) -> float:
        return self._tick_index * self.dt

    @property
    def phase(self) -> str:
        return self.session.phase

    @property
    def done(self) -> bool:
        return self.session.phase in TERMINAL_PHASES

    def submit_command(self, command: OperatorCommand):
        self.session.submit(command)

    def _release_script(self, t: float):
        while self._script_pos < len(self._script) and self._script[self._script_pos][0] <= t:
            self.session.submit(self._script[self._script_pos][1])
            self._script_pos += 1

    def _controller_for(self, mode: str):
        variant = {
            MODE_GRASP: CTRL_GRASP,
            MODE_GRASP_GUARDED: CTRL_GRASP,
            MODE_PULL: CTRL_PULL,
            MODE_DECOUPLED: CTRL_DECOUPLED,
        }.get(mode)
        if variant is None:
            return None
        control = self.scenario.control
        return build_controller(
            ControlMode(
                variant=variant,
                grasp_gains=control.grasp_gains,
                pull_gains=control.pull_gains,
                theta=self.geometry.theta,
            ),
            self.geometry.alpha0,
            v_max_lower=control.v_max_lower,
            v_max_upper=control.v_max_upper,
        )

    def _command_for(self, d: TickDirective, sensed: ForceReadings) -> PlantInput:
        if d.mode != self._mode:
            self._mode = d.mode
            self._controller = self._controller_for(d.mode)
        if d.mode == MODE_HOLD:
            return _HOLD
        if d.mode == MODE_APPROACH:
            return PlantInput(u1=-self.session.approach_speed, u2=0.0)

        state = self.plant.state
        dt = self.dt
        if d.mode in (MODE_GRASP, MODE_GRASP_GUARDED):
            ts_est = sensed.Fs / self.scenario.spring.ks
            u = self._controller.step(sensed, ts_est, state.d_u, d.fg_target, dt)
            if d.mode == MODE_GRASP_GUARDED and u.u1 > 0.0:
                # Never pull forward while the operator inspects the cut.
                u = PlantInput(u1=0.0, u2=u.u2)
        elif d.mode == MODE_PULL:
            u = self._controller.step(sensed, d.fp_target, dt)
        else:  # MODE_DECOUPLED
            u = self._controller.step(sensed, d.fg_target, d.fp_target, dt)
        if d.dp_speed_cap is not None and u.u1 + u.u2 > d.dp_speed_cap:
            control = self.scenario.control
            u1 = max(d.dp_speed_cap - u.u2, -control.v_max_lower)
            u = PlantInput(u1=u1, u2=u.u2)
        return u

    def tick(self) -> tuple[TraceRecord, TickDirective]:
        """Advance one sensor period; returns the trace row and directive."""
        t = self.t
        sensed = self.plant.sample()
        truth = self.plant.truth
        self._release_script(t)
        d = self.session.tick(
            sensed, self.plant.state.d_p, self.plant.state.failure, t, self.dt
        )
        if d.cut is not None:
            self.plant.apply_cut(d.cut)
        u = self._command_for(d, sensed)
        events = tuple(d.events) + tuple(self.plant.drain_events())
        state = self.plant.state
        record = TraceRecord(
            t=t,
            Fg_target=d.fg_target,
            Fg_est=sensed.Fg,
            Fg_true=truth.Fg,
            Fp_target=d.fp_target,
            Fp_est=sensed.Fp,
            Fp_true=truth.Fp,
            Fd=sensed.Fd,
            Fs=sensed.Fs,
            d_p=state.d_p,
            d_s=state.d_s,
            d_l=state.d_l,
            d_u=state.d_u,
            phase=d.phase,
            events=events,
        )
        self.records.append(record)
        if not self.done:
            self.plant.advance(u)
        self._tick_index += 1
        return record, d

    def run(self) -> str:
        """Run to a terminal phase (or the duration cap); returns the phase."""
        while not self.done and self._tick_index < self.max_ticks:
            self.tick()
        if not self.done:
            self.session.failure_reason = "timeout"
            self.session.phase = PHASE_FAILED
        return self.session.phase

    def summary(self) -> dict:
        return {
            "result": self.session.phase,
            "cuts": self.session.cuts_performed,
            "duration_s": round(self.t, 6),
            "failure": self.session.failure_reason,
            "target_schedule": self.session.target_schedule,
        }


# ----------------------------------------------------------------------
# Profile-tracking runs
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrackingCell:
    """One grid point of a tracking experiment."""

    mode: str
    theta_deg: float
    amplitude: float
    frequency: float | None
    repeat_index: int
    seed: int

    def trace_name(self) -> str:
        freq = f"_f{self.frequency:.6g}" if self.frequency is not None else ""
        return f"trace_{self.mode}_th{self.theta_deg:g}{freq}_r{self.repeat_index}.csv"


class TrackingRun:
    """Fixed mode-timeline run: profiles in, trace out."""

    def __init__(
        self,
        scenario: Scenario,
        theta_deg: float,
        fg_profile: ForceProfile,
        fp_profile: ForceProfile | None,
        mode_schedule: list[tuple[float, str]],
        duration: float,
        seed: int,
    ):
        self.scenario = scenario
        self.geometry = scenario.geometry.with_theta(theta_deg).build()
        self.plant = Plant(
            geometry=self.geometry,
            spring=scenario.spring,
            tissue=scenario.tissue,
            config=dataclasses.replace(scenario.simulation, seed=seed),
            engaged=True,
            v_max_lower=scenario.control.v_max_lower,
            v_max_upper=scenario.control.v_max_upper,
        )
        self.fg_profile = fg_profile
        self.fp_profile = fp_profile
        self.mode_schedule = sorted(mode_schedule)
        self.duration = duration
        self.dt = scenario.simulation.dt_sensor
        self.records: list[TraceRecord] = []

    def run(self) -> list[TraceRecord]:
        control = self.scenario.control
        variants = {MODE_GRASP: CTRL_GRASP, MODE_PULL: CTRL_PULL, MODE_DECOUPLED: CTRL_DECOUPLED}
        n_ticks = int(round(self.duration / self.dt))
        schedule = list(self.mode_schedule)
        mode = None
        controller = None
        for k in range(n_ticks):
            t = k * self.dt
            while schedule and t >= schedule[0][0] - 1e-12:
                mode = schedule.pop(0)[1]
                if mode not in variants:
                    raise ConfigError(f"tracking mode schedule: unknown mode {mode!r}")
                controller = build_controller(
                    ControlMode(
                        variant=variants[mode],
                        grasp_gains=control.grasp_gains,
                        pull_gains=control.pull_gains,
                        theta=self.geometry.theta,
                    ),
                    self.geometry.alpha0,
                    v_max_lower=control.v_max_lower,
                    v_max_upper=control.v_max_upper,
                )

            sensed = self.plant.sample()
            truth = self.plant.truth
            fg_target = generate_profile(self.fg_profile, t)
            fp_target = (
                generate_profile(self.fp_profile, t) if self.fp_profile else 0.0
            )
            if mode == MODE_GRASP:
                ts_est = sensed.Fs / self.scenario.spring.ks
                u = controller.step(sensed, ts_est, self.plant.state.d_u, fg_target, self.dt)
            elif mode == MODE_PULL:
                u = controller.step(sensed, fp_target, self.dt)
            else:
                u = controller.step(sensed, fg_target, fp_target, self.dt)

            state = self.plant.state
            self.records.append(
                TraceRecord(
                    t=t,
                    Fg_target=fg_target,
                    Fg_est=sensed.Fg,
                    Fg_true=truth.Fg,
                    Fp_target=fp_target,
                    Fp_est=sensed.Fp,
                    Fp_true=truth.Fp,
                    Fd=sensed.Fd,
                    Fs=sensed.Fs,
                    d_p=state.d_p,
                    d_s=state.d_s,
                    d_l=state.d_l,
                    d_u=state.d_u,
                    phase=mode,
                    events=tuple(self.plant.drain_events()),
                )
            )
            if state.failure != FAILURE_NONE:
                break
            self.plant.advance(u)
        return self.records


def run_stats(records: list[TraceRecord], window: tuple[float, float]) -> dict[str, ErrorStats]:
    """Tracking-error statistics for every reported comparison pair."""
    times = [r.t for r in records]
    series = {
        "Fg_target": [r.Fg_target for r in records],
        "Fg_est": [r.Fg_est for r in records],
        "Fg_true": [r.Fg_true for r in records],
        "Fp_target": [r.Fp_target for r in records],
        "Fp_est": [r.Fp_est for r in records],
        "Fp_true": [r.Fp_true for r in records],
    }
    return {
        ErrorReport.pair_key(a, b): error_stats(series[a], series[b], times, window)
        for a, b in REPORT_PAIRS
    }


def tracking_cells(scenario: Scenario, repeat: int | None = None) -> list[TrackingCell]:
    cfg = scenario.tracking
    if cfg is None:
        raise ConfigError("scenario.tracking: section required for tracking runs")
    repeats = repeat if repeat is not None else cfg.repeat
    cells = []
    index = 0
    for theta_deg, grasp_amp in zip(cfg.thetas_deg, cfg.grasp_amplitudes):
        frequencies = cfg.frequencies if cfg.mode in ("grasp", "pull") else (None,)
        for frequency in frequencies:
            for rep in range(1, repeats + 1):
                amplitude = grasp_amp if cfg.mode == "grasp" else cfg.pull_amplitude
                cells.append(
                    TrackingCell(
                        mode=cfg.mode,
                        theta_deg=theta_deg,
                        amplitude=amplitude,
                        frequency=frequency,
                        repeat_index=rep,
                        seed=scenario.seed + index,
                    )
                )
                index += 1
    return cells


def build_tracking_run(scenario: Scenario, cell: TrackingCell) -> tuple[TrackingRun, tuple[float, float]]:
    """TrackingRun plus the analysis window for one grid cell."""
    cfg = scenario.tracking
    if cell.mode == "grasp":
        duration = cfg.periods / cell.frequency
        fg = ForceProfile(kind="sinusoid", amplitude=cell.amplitude, frequency=cell.frequency)
        run = TrackingRun(
            scenario,
            cell.theta_deg,
            fg_profile=fg,
            fp_profile=None,
            mode_schedule=[(0.0, MODE_GRASP)],
            duration=duration,
            seed=cell.seed,
        )
        window = (cfg.window_start_periods / cell.frequency, duration)
        return run, window

    if cell.mode == "pull":
        pre = cfg.preamble
        duration = pre.pull_start + cfg.periods / cell.frequency
        fg = ForceProfile(
            kind="ramp_hold", amplitude=pre.target, t_start=0.0, t_end=pre.ramp_end
        )
        # Sinusoid starts at the pull switch; zero before it.
        fp = ForceProfile(
            kind="sinusoid",
            amplitude=cell.amplitude,
            frequency=cell.frequency,
            t_start=pre.pull_start,
        )
        run = TrackingRun(
            scenario,
            cell.theta_deg,
            fg_profile=fg,
            fp_profile=fp,
            mode_schedule=[(0.0, MODE_GRASP), (pre.pull_start, MODE_PULL)],
            duration=duration,
            seed=cell.seed,
        )
        window = (pre.pull_start + cfg.window_start_periods / cell.frequency, duration)
        return run, window

    # simultaneous grasp + pull
    sim = cfg.simultaneous
    pull_mode = MODE_DECOUPLED if scenario.control.pull_variant == "decoupled" else MODE_PULL
    fg = ForceProfile(
        kind="ramp_hold", amplitude=sim.fg_hold, t_start=0.0, t_end=sim.grasp_ramp_end
    )
    fp = ForceProfile(
        kind="traction_phase",
        points=(
            (0.0, 0.0),
            (sim.pull_ramp_start, 0.0),
            (sim.pull_ramp_end, cell.amplitude),
            (sim.hold_until, cell.amplitude),
        ),
    )
    run = TrackingRun(
        scenario,
        cell.theta_deg,
        fg_profile=fg,
        fp_profile=fp,
        mode_schedule=[(0.0, MODE_GRASP), (sim.pull_ramp_start, pull_mode)],
        duration=sim.hold_until,
        seed=cell.seed,
    )
    return run, (sim.pull_ramp_start, sim.hold_until)


def max_workers() -> int:
    value = os.environ.get(THREADS_ENV, "")
    if value.strip():
        try:
            return max(1, int(value))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from exc
    return min(8, os.cpu_count() or 1)


def run_tracking(
    scenario: Scenario,
    out_dir,
    repeat: int | None = None,
) -> int:
    """Execute the tracking grid; write per-cell traces and the worst-case
    report. Returns a process exit code (0 = all cells completed)."""
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = tracking_cells(scenario, repeat)

    def execute(cell: TrackingCell):
        run, window = build_tracking_run(scenario, cell)
        records = run.run()
        return records, run_stats(records, window), run.plant.state.failure

    results = []
    workers = max_workers()
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute, cells))
    else:
        results = [execute(cell) for cell in cells]

    per_theta: dict[float, list[dict[str, ErrorStats]]] = {}
    failed = False
    for cell, (records, stats, failure) in zip(cells, results):
        write_trace(out / cell.trace_name(), records)
        per_theta.setdefault(cell.theta_deg, []).append(stats)
        if failure != FAILURE_NONE:
            failed = True
    report = ErrorReport.from_runs(per_theta)
    write_report(out / "report.csv", report)
    return 1 if failed else 0


def run_traction(
    scenario: Scenario,
    out_dir,
    script: list[tuple[float, dict]] | None = None,
) -> int:
    """Execute the operation flow headless; write trace, phase log, summary.

    Returns 0 iff the flow reached Done. A simulation fault still flushes
    the partial trace before the nonzero exit.
    """
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    run = TractionRun(scenario, script=script)
    fault = ""
    try:
        run.run()
    except SimulationFault as exc:
        fault = str(exc)
        run.session.failure_reason = f"sim_fault:{fault}"
        run.session.phase = PHASE_FAILED

    write_trace(out / "trace.csv", run.records)
    with open(out / "phases.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,phase\n")
        for t, phase in run.session.phase_log:
            fh.write(f"{t:.6g},{phase}\n")
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(run.summary(), fh, indent=2)
        fh.write("\n")
    return 0 if run.session.phase == PHASE_DONE else 1
