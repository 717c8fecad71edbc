"""Target-force profiles, tracking-error analytics, and trace export.

Profiles are pure functions of time. Error statistics are taken on the
absolute difference of two aligned series, optionally restricted to an
analysis window (by default the pulling phase of a run is what gets
reported). Worst-case reports take the element-wise maximum of each
statistic across repeated runs, grouped by grasp angle.
"""

import math
from dataclasses import dataclass, field

from .errors import AnalysisError

PROFILE_KINDS = ("sinusoid", "step", "ramp_hold", "traction_phase")

# Comparison pairs reported per run, in table order.
REPORT_PAIRS = (
    ("Fg_target", "Fg_est"),
    ("Fg_est", "Fg_true"),
    ("Fp_target", "Fp_est"),
    ("Fp_est", "Fp_true"),
)


@dataclass(frozen=True)
class ForceProfile:
    """One target-force channel over time.

    sinusoid: raised cosine offset + amplitude*(1 - cos(2*pi*f*(t-t_start)))/2
        from t_start on (zero before), so the target rises from zero instead
        of jumping.
    step: 0 before t_step, amplitude after.
    ramp_hold: 0 until t_start, linear to amplitude at t_end, held after.
    traction_phase: piecewise-linear through `points` [(t, value), ...],
        holding the first value before and the last value after.
    """

    kind: str
    amplitude: float = 0.0
    frequency: float = 0.0
    offset: float = 0.0
    t_step: float = 0.0
    t_start: float = 0.0
    t_end: float = 0.0
    points: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be non-negative")
        if self.kind == "sinusoid" and self.frequency <= 0.0:
            raise ValueError("sinusoid profiles need frequency > 0")
        if self.kind == "ramp_hold" and self.t_end <= self.t_start:
            raise ValueError("ramp_hold needs t_end > t_start")
        if self.kind == "traction_phase":
            times = [t for t, _ in self.points]
            if len(times) < 2 or any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("traction_phase needs >= 2 points with increasing times")


def generate_profile(profile: ForceProfile, t: float) -> float:
    """Target force (N) of `profile` at time t >= 0."""
    if t < 0.0:
        raise ValueError("t must be non-negative")
    if profile.kind == "sinusoid":
        if t < profile.t_start:
            return 0.0
        phase = 2.0 * math.pi * profile.frequency * (t - profile.t_start)
        return profile.offset + profile.amplitude * 0.5 * (1.0 - math.cos(phase))
    if profile.kind == "step":
        return profile.amplitude if t >= profile.t_step else 0.0
    if profile.kind == "ramp_hold":
        if t <= profile.t_start:
            return 0.0
        if t >= profile.t_end:
            return profile.amplitude
        frac = (t - profile.t_start) / (profile.t_end - profile.t_start)
        return profile.amplitude * frac
    # traction_phase
    points = profile.points
    if t <= points[0][0]:
        return points[0][1]
    for (t0, v0), (t1, v1) in zip(points, points[1:]):
        if t <= t1:
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    return points[-1][1]


@dataclass(frozen=True)
class ErrorStats:
    """Mean absolute, RMS, and max of |a - b| over the analysis window."""

    mean: float
    rms: float
    max: float


def error_stats(
    a: list[float],
    b: list[float],
    times: list[float] | None = None,
    window: tuple[float, float] | None = None,
) -> ErrorStats:
    """Statistics of |a - b|, optionally restricted to times within window.

    `mean` is the mean absolute error, which keeps max >= rms >= mean for
    any pair of series.
    """
    if len(a) != len(b):
        raise AnalysisError(f"series length mismatch: {len(a)} vs {len(b)}")
    if len(a) == 0:
        raise AnalysisError("series must contain at least one sample")
    if window is not None:
        if times is None:
            raise AnalysisError("a window requires aligned timestamps")
        if len(times) != len(a):
            raise AnalysisError("timestamps length mismatch")
        lo, hi = window
        diffs = [abs(x - y) for t, x, y in zip(times, a, b) if lo <= t <= hi]
        if not diffs:
            raise AnalysisError(f"analysis window [{lo}, {hi}] contains no samples")
    else:
        diffs = [abs(x - y) for x, y in zip(a, b)]
    n = len(diffs)
    return ErrorStats(
        mean=sum(diffs) / n,
        rms=math.sqrt(sum(d * d for d in diffs) / n),
        max=max(diffs),
    )


def worst_case(run_stats: list[ErrorStats]) -> ErrorStats:
    """Element-wise maximum of each statistic over repeated runs."""
    if not run_stats:
        raise AnalysisError("worst_case needs at least one run")
    return ErrorStats(
        mean=max(s.mean for s in run_stats),
        rms=max(s.rms for s in run_stats),
        max=max(s.max for s in run_stats),
    )


@dataclass(frozen=True)
class ErrorReport:
    """Worst-case tracking errors per (grasp angle, comparison pair)."""

    # {theta_deg: {"Fg_target:Fg_est": ErrorStats, ...}}
    groups: dict[float, dict[str, ErrorStats]] = field(default_factory=dict)

    @staticmethod
    def pair_key(a: str, b: str) -> str:
        return f"{a}:{b}"

    @classmethod
    def from_runs(
        cls, per_run: dict[float, list[dict[str, ErrorStats]]]
    ) -> "ErrorReport":
        """Aggregate per-run stats into worst-case cells per theta group."""
        groups: dict[float, dict[str, ErrorStats]] = {}
        for theta_deg, runs in per_run.items():
            if not runs:
                raise AnalysisError(f"empty run group for theta={theta_deg}")
            pairs = runs[0].keys()
            groups[theta_deg] = {
                pair: worst_case([run[pair] for run in runs]) for pair in pairs
            }
        return cls(groups=groups)

    def rows(self) -> list[tuple[float, str, str, float]]:
        out = []
        for theta_deg in sorted(self.groups):
            cells = self.groups[theta_deg]
            for pair in cells:
                stats = cells[pair]
                out.append((theta_deg, pair, "mean", stats.mean))
                out.append((theta_deg, pair, "rms", stats.rms))
                out.append((theta_deg, pair, "max", stats.max))
        return out


@dataclass(frozen=True)
class TraceRecord:
    """One sensor-rate sample of the full simulation state."""

    t: float
    Fg_target: float
    Fg_est: float
    Fg_true: float
    Fp_target: float
    Fp_est: float
    Fp_true: float
    Fd: float
    Fs: float
    d_p: float
    d_s: float
    d_l: float
    d_u: float
    phase: str
    events: tuple[str, ...] = ()


TRACE_HEADER = (
    "t,Fg_target,Fg_est,Fg_true,Fp_target,Fp_est,Fp_true,"
    "Fd,Fs,d_p,d_s,d_l,d_u,phase,events"
)

_FLOAT_FIELDS = (
    "t",
    "Fg_target",
    "Fg_est",
    "Fg_true",
    "Fp_target",
    "Fp_est",
    "Fp_true",
    "Fd",
    "Fs",
    "d_p",
    "d_s",
    "d_l",
    "d_u",
)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def trace_line(record: TraceRecord) -> str:
    values = [_fmt(getattr(record, name)) for name in _FLOAT_FIELDS]
    values.append(record.phase)
    values.append(";".join(record.events))
    return ",".join(values)


def write_trace(path, records: list[TraceRecord]):
    """Comma-separated trace export: header row, 6-significant-digit floats,
    UTF-8, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        for record in records:
            fh.write(trace_line(record) + "\n")


def read_trace(path) -> list[TraceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != TRACE_HEADER:
            raise AnalysisError(f"unexpected trace header in {path}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(_FLOAT_FIELDS) + 2:
                raise AnalysisError(f"malformed trace row in {path}")
            floats = [float(x) for x in parts[: len(_FLOAT_FIELDS)]]
            phase = parts[-2]
            events = tuple(parts[-1].split(";")) if parts[-1] else ()
            records.append(TraceRecord(*floats, phase, events))
    return records


def write_report(path, report: ErrorReport):
    """Error-report export: one row per (theta, pair, statistic)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("theta_deg,pair,stat,value\n")
        for theta_deg, pair, stat, value in report.rows():
            fh.write(f"{_fmt(theta_deg)},{pair},{stat},{_fmt(value)}\n")
