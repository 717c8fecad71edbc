"""Forceps linkage geometry, sensing spring, tissue parameters, and the
closed-form force relations used by both the plant and the controllers.

Axial convention: pulling forces are positive, pushing negative. The cable
drive force Fd splits into the tissue reaction Fp and the sensing-spring
support Fs, so Fd = Fp + Fs at all times. The grasp force is the cable force
scaled through the jaw linkage: Fg = Fd * l2 * sin(alpha) / (2 * l3).
"""

import math
from dataclasses import dataclass

from .errors import DeformationError, GeometryError

DEFAULT_THETA_MAX = math.radians(60.0)

# Alpha consistency tolerance when the joint-to-joint distance is supplied.
ALPHA_CROSSCHECK_TOL = 1e-9


@dataclass(frozen=True)
class ForcepsGeometry:
    """Linkage lengths (mm) and angles (rad) of the jaw drive mechanism.

    l1, l2 are the drive-linkage lengths, l3 the effective jaw lever length
    (extension jaws are modelled by configuring a longer l3). alpha0 is the
    base linkage angle and theta the grasping half-open angle, fixed per
    session. l12, when known, is the joint-to-joint distance and enables a
    consistency cross-check of alpha.
    """

    l1: float
    l2: float
    l3: float
    alpha0: float
    theta: float = 0.0
    l12: float | None = None
    theta_max: float = DEFAULT_THETA_MAX

    def __post_init__(self):
        for name in ("l1", "l2", "l3"):
            if getattr(self, name) <= 0.0:
                raise GeometryError(f"{name} must be strictly positive")
        if self.l12 is not None and self.l12 <= 0.0:
            raise GeometryError("l12 must be strictly positive")
        if not 0.0 <= self.theta <= self.theta_max:
            raise GeometryError(
                f"theta {self.theta:.6g} outside [0, {self.theta_max:.6g}]"
            )
        alpha = self.alpha0 + self.theta
        if not 0.0 < alpha < math.pi:
            raise GeometryError(f"alpha = alpha0 + theta = {alpha:.6g} outside (0, pi)")
        if self.l12 is not None and abs(self._cos_alpha_from_links()) > 1.0:
            raise GeometryError("l1, l2, l12 violate the triangle inequality")

    def _cos_alpha_from_links(self) -> float:
        return (self.l12**2 + self.l2**2 - self.l1**2) / (2.0 * self.l1 * self.l12)


@dataclass(frozen=True)
class SpringModel:
    """Axial sensing-spring: stiffness ks (N/mm), travel limit, sensing range."""

    ks: float
    ts_max: float
    fs_range: tuple[float, float] = (0.0, 5.0)

    def __post_init__(self):
        if self.ks <= 0.0:
            raise ValueError("ks must be strictly positive")
        if self.ts_max <= 0.0:
            raise ValueError("ts_max must be strictly positive")
        low, high = self.fs_range
        if not (low == 0.0 < high):
            raise ValueError("fs_range must be (0, high) with high > 0")


@dataclass(frozen=True)
class TissueModel:
    """Spring-damper tissue abstraction plus failure-threshold fixtures.

    kt/ct are the elastic stiffness (N/mm) and viscous damping (N*s/mm) of
    the grasped tissue. The failure fields are simulation fixtures: slide
    when the pull exceeds grip_limit_ratio times the grasp force, split on
    tensile overload, break on grasp overload.
    """

    kt: float
    ct: float
    grip_limit_ratio: float = 1.2
    split_force: float = 0.45
    break_grasp_force: float = 0.5

    def __post_init__(self):
        if self.kt < 0.0 or self.ct < 0.0:
            raise ValueError("kt and ct must be non-negative")
        for name in ("grip_limit_ratio", "split_force", "break_grasp_force"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class ForceReadings:
    """One coherent set of axial forces (N): drive, spring, pull, grasp."""

    Fd: float
    Fs: float
    Fp: float
    Fg: float
    fs_saturated: bool = False
    cable_slack: bool = False


def linkage_angle(geometry: ForcepsGeometry) -> float:
    """Jaw linkage angle alpha = alpha0 + theta (rad).

    When l12 is supplied, the closed-form triangle solution must agree with
    alpha0 + theta to within ALPHA_CROSSCHECK_TOL, else the configured
    geometry is inconsistent.
    """
    alpha = geometry.alpha0 + geometry.theta
    if geometry.l12 is not None:
        cos_alpha = geometry._cos_alpha_from_links()
        if abs(cos_alpha) > 1.0:
            raise GeometryError("l1, l2, l12 violate the triangle inequality")
        alpha_links = math.acos(cos_alpha)
        if abs(alpha_links - alpha) > ALPHA_CROSSCHECK_TOL:
            raise GeometryError(
                f"alpha0 + theta = {alpha:.12g} rad disagrees with the "
                f"link-derived angle {alpha_links:.12g} rad"
            )
    return alpha


def coupling_gain(geometry: ForcepsGeometry) -> float:
    """Transmission ratio l2*sin(alpha)/(2*l3) from cable force to grasp force.

    Also the sensitivity of Fg to Fp at fixed Fs, i.e. the structural
    grasp/pull coupling the decoupled controller works against.
    """
    return geometry.l2 * math.sin(linkage_angle(geometry)) / (2.0 * geometry.l3)


def spring_force(ts: float, spring: SpringModel) -> tuple[float, bool]:
    """Spring force Fs = ks*ts for deformation ts (mm).

    Returns (Fs, saturated) where saturated flags Fs outside the sensing
    range. Deformation beyond ts_max raises DeformationError: the physical
    spring cannot travel that far.
    """
    if abs(ts) > spring.ts_max:
        raise DeformationError(
            f"spring deformation {ts:.6g} mm exceeds travel limit {spring.ts_max:.6g} mm"
        )
    fs = spring.ks * ts
    low, high = spring.fs_range
    return fs, not low <= fs <= high


def pulling_force(Fd: float, Fs: float) -> float:
    """Pull force from the axial equilibrium Fp = Fd - Fs (negative = pushing)."""
    return Fd - Fs


def grasping_force(Fd: float, geometry: ForcepsGeometry) -> tuple[float, bool]:
    """Grasp force Fg = Fd*l2*sin(alpha)/(2*l3) for cable force Fd >= 0.

    Returns (Fg, slack). A negative drive force cannot be transmitted by a
    cable, so it clamps to zero grasp with the slack flag set.
    """
    if Fd < 0.0:
        return 0.0, True
    return Fd * coupling_gain(geometry), False


def readings_from_drive(
    Fd: float,
    Fs: float,
    geometry: ForcepsGeometry,
    spring: SpringModel,
) -> ForceReadings:
    """Assemble a consistent ForceReadings record from the two measured channels.

    Mirrors the physical sensing chain: Fd and Fs are the independently
    sensed quantities, Fp and Fg are derived.
    """
    fp = pulling_force(Fd, Fs)
    fg, slack = grasping_force(Fd, geometry)
    low, high = spring.fs_range
    return ForceReadings(
        Fd=Fd,
        Fs=Fs,
        Fp=fp,
        Fg=fg,
        fs_saturated=not low <= Fs <= high,
        cable_slack=slack,
    )
