"""Serial-chain pose math, gait generation, joint hysteresis, screw drivetrain.

Angles are radians internally; the hysteresis interface works in degrees
because that is the domain the measured loop widths live in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# Measured peak tangential force envelope at the screw shell, at full motor
# torque: (commanded speed rad/s, force N).  Linear in between.
MEASURED_FORCE_CURVE = ((10.0, 40.0), (50.0, 75.9))
MAX_SCREW_SPEED_RAD_S = 50.0

# Loop widths of the joint transmission at increasing tip loads:
# (load lbs, width deg).
MEASURED_HYSTERESIS_WIDTHS = ((0.0, 2.0), (6.25, 4.0), (11.25, 6.0))


class GaitError(ValueError):
    """Gait parameters violate joint limits or the drivetrain envelope."""


@dataclass(frozen=True)
class JointSpec:
    """Per-axis travel limits of one U-joint."""

    pitch_limit_rad: float = math.pi / 2
    yaw_limit_rad: float = math.pi / 2

    def __post_init__(self) -> None:
        if self.pitch_limit_rad <= 0 or self.yaw_limit_rad <= 0:
            raise ValueError("joint limits must be positive")


@dataclass(frozen=True)
class DrivetrainSpec:
    """Screw and U-joint transmission constants.

    The effective screw radius is back-derived from the measured force/torque
    pairs (both give 0.09 m); the U-joint ratios are stored for reference and
    for the power budget, not used in the force model.
    """

    motor_max_torque_nm: float = 1.5
    gear_ratio: float = 7.0
    effective_screw_radius_m: float = 0.09
    ujoint_internal_ratio: float = 5.0
    ujoint_external_ratio: float = 1.8

    def __post_init__(self) -> None:
        for name in (
            "motor_max_torque_nm",
            "gear_ratio",
            "effective_screw_radius_m",
            "ujoint_internal_ratio",
            "ujoint_external_ratio",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def ideal_shell_torque_nm(self) -> float:
        """Lossless shell torque at full motor torque: motor max x gear ratio."""
        return self.motor_max_torque_nm * self.gear_ratio


@dataclass(frozen=True)
class HysteresisModel:
    """Load-dependent play width: w(load) = intercept + slope * load_lbs."""

    width_intercept_deg: float = 1.94
    width_slope_deg_per_lb: float = 0.354

    def __post_init__(self) -> None:
        if self.width_intercept_deg < 0 or self.width_slope_deg_per_lb < 0:
            raise ValueError("width model must be nonnegative for all loads >= 0")

    def width_deg(self, load_lbs: float) -> float:
        if load_lbs < 0:
            raise ValueError("load must be >= 0")
        return self.width_intercept_deg + self.width_slope_deg_per_lb * load_lbs


@dataclass
class PlayState:
    """Mutable play-operator memory for one joint axis (last actual angle)."""

    actual_deg: float = 0.0


@dataclass
class JointState:
    """Commanded pitch/yaw of one U-joint plus per-axis play memory."""

    pitch_rad: float = 0.0
    yaw_rad: float = 0.0
    pitch_play: PlayState = field(default_factory=PlayState)
    yaw_play: PlayState = field(default_factory=PlayState)


class Frame(NamedTuple):
    position: np.ndarray
    rotation: np.ndarray


class GaitCommand(NamedTuple):
    """Joint targets (rad) and screw speeds (rad/s) at one instant."""

    pitch_rad: tuple[float, ...]
    yaw_rad: tuple[float, ...]
    screw_speeds_rad_s: tuple[float, ...]
    t_s: float


class ScrewOutput(NamedTuple):
    shell_torque_nm: float
    tangential_force_n: float
    efficiency: float
    extrapolated: bool


def _rot_yaw_pitch(yaw: float, pitch: float) -> np.ndarray:
    cy, sy = math.cos(yaw), math.sin(yaw)
    cp, sp = math.cos(pitch), math.sin(pitch)
    yaw_m = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    pitch_m = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    return yaw_m @ pitch_m


def _joint_angles(joint_states: Iterable) -> list[tuple[float, float]]:
    out = []
    for js in joint_states:
        if isinstance(js, JointState):
            out.append((js.pitch_rad, js.yaw_rad))
        else:
            pitch, yaw = js
            out.append((float(pitch), float(yaw)))
    return out


def forward_kinematics(joint_states: Iterable, segment_length_m: float) -> list[Frame]:
    """Chain pose: frame i+1 = frame i advanced one segment, then bent by joint i.

    For n-1 joints the chain has n segments; n+1 frames come back (each
    segment base plus the tail tip), so consecutive frames are exactly one
    segment length apart.
    """
    angles = _joint_angles(joint_states)
    if segment_length_m <= 0:
        raise ValueError("segment length must be positive")
    pos = np.zeros(3)
    rot = np.eye(3)
    frames = [Frame(pos.copy(), rot.copy())]
    for i in range(len(angles) + 1):
        pos = pos + rot @ np.array([segment_length_m, 0.0, 0.0])
        if i < len(angles):
            pitch, yaw = angles[i]
            rot = rot @ _rot_yaw_pitch(yaw, pitch)
        frames.append(Frame(pos.copy(), rot.copy()))
    return frames


def segment_midpoints(frames: Sequence[Frame], segment_length_m: float) -> list[np.ndarray]:
    """Midpoint of each segment, from the frames forward_kinematics returns."""
    mids = []
    for i in range(len(frames) - 1):
        base = frames[i]
        mids.append(base.position + base.rotation @ np.array([segment_length_m / 2, 0.0, 0.0]))
    return mids


def _check_screw_speed(speed_rad_s: float) -> None:
    if not 0.0 <= speed_rad_s <= MAX_SCREW_SPEED_RAD_S:
        raise GaitError(
            f"screw speed must be within [0, {MAX_SCREW_SPEED_RAD_S:.0f}] rad/s"
        )


def turn_radius_from_angle(theta_rad: float, segment_length_m: float) -> float:
    """Arc radius of the common-angle chain: R = l / (2 tan(theta/2))."""
    if theta_rad == 0:
        return math.inf
    return segment_length_m / (2.0 * math.tan(theta_rad / 2.0))


def angle_from_turn_radius(turn_radius_m: float, segment_length_m: float) -> float:
    """Inverse of :func:`turn_radius_from_angle` (signed)."""
    if math.isinf(turn_radius_m):
        return 0.0
    return 2.0 * math.atan(segment_length_m / (2.0 * turn_radius_m))


def gait_screwing(
    turn_radius_m: float,
    screw_speed_rad_s: float,
    assembly,
    t_s: float = 0.0,
) -> GaitCommand:
    """All yaw joints at the common arc angle, all screws at the commanded speed.

    An infinite (or None) radius encodes a straight line.
    """
    n_joints = len(assembly.segments) - 1
    n_screws = len(assembly.segments)
    _check_screw_speed(screw_speed_rad_s)
    if turn_radius_m is None:
        turn_radius_m = math.inf
    if turn_radius_m != math.inf:
        limit = assembly.joints.yaw_limit_rad
        min_radius = assembly.segment_length_m / (2.0 * math.tan(limit / 2.0))
        if abs(turn_radius_m) < min_radius:
            raise GaitError(
                f"turn radius {turn_radius_m:.3f} m below feasible minimum "
                f"{min_radius:.3f} m set by the {math.degrees(limit):.0f} deg yaw limit"
            )
    theta = angle_from_turn_radius(turn_radius_m, assembly.segment_length_m)
    return GaitCommand(
        pitch_rad=(0.0,) * n_joints,
        yaw_rad=(theta,) * n_joints,
        screw_speeds_rad_s=(screw_speed_rad_s,) * n_screws,
        t_s=t_s,
    )


def gait_sidewinding(
    amplitude_pitch_rad: float,
    amplitude_yaw_rad: float,
    frequency_hz: float,
    phase_lag_rad: float,
    t_s: float,
    n_joints: int,
    joints: JointSpec = JointSpec(),
) -> GaitCommand:
    """Quadrature traveling wave: yaw lags pitch by 90 degrees along the body."""
    if abs(amplitude_pitch_rad) > joints.pitch_limit_rad:
        raise GaitError("pitch amplitude exceeds joint limit")
    if abs(amplitude_yaw_rad) > joints.yaw_limit_rad:
        raise GaitError("yaw amplitude exceeds joint limit")
    if n_joints < 1:
        raise GaitError("need at least one joint")
    base = 2.0 * math.pi * frequency_hz * t_s
    pitch = tuple(
        amplitude_pitch_rad * math.sin(base + i * phase_lag_rad) for i in range(n_joints)
    )
    yaw = tuple(
        amplitude_yaw_rad * math.sin(base + i * phase_lag_rad + math.pi / 2.0)
        for i in range(n_joints)
    )
    return GaitCommand(pitch, yaw, (0.0,) * (n_joints + 1), t_s)


def gait_wheeling(
    ground_speed_m_s: float,
    drivetrain: DrivetrainSpec,
    n_joints: int,
    slip: float = 0.0,
    t_s: float = 0.0,
) -> GaitCommand:
    """Straight chain, screws spun for the requested ground speed."""
    if ground_speed_m_s < 0:
        raise GaitError("ground speed must be >= 0")
    if not 0.0 <= slip < 1.0:
        raise GaitError("slip must be in [0, 1)")
    speed = ground_speed_m_s / (drivetrain.effective_screw_radius_m * (1.0 - slip))
    if speed > MAX_SCREW_SPEED_RAD_S:
        raise GaitError(
            f"ground speed {ground_speed_m_s} m/s needs {speed:.1f} rad/s, "
            f"above the {MAX_SCREW_SPEED_RAD_S:.0f} rad/s commanded range"
        )
    return GaitCommand(
        (0.0,) * n_joints, (0.0,) * n_joints, (speed,) * (n_joints + 1), t_s
    )


def apply_hysteresis(
    commanded_deg: float,
    load_lbs: float,
    model: HysteresisModel,
    state: PlayState,
) -> float:
    """Classical play (backlash) operator with load-dependent width.

    The output holds still inside the play band and follows the command once
    the command drags the band edge past it.  ``state`` is updated in place
    and must be owned by a single simulation session.
    """
    half = model.width_deg(load_lbs) / 2.0
    actual = min(max(state.actual_deg, commanded_deg - half), commanded_deg + half)
    state.actual_deg = actual
    return actual


def hysteresis_sweep(
    model: HysteresisModel,
    load_lbs: float,
    amplitude_deg: float = 90.0,
    step_deg: float = 0.5,
) -> list[tuple[float, float]]:
    """One saturated loop (-A up to +A, back down to -A) of (command, actual).

    A preconditioning leg down to -A is run first so both recorded branches
    are fully saturated, matching how the loop widths were measured.
    """
    if amplitude_deg <= 0 or step_deg <= 0:
        raise ValueError("amplitude and step must be positive")
    n = max(1, int(round(amplitude_deg / step_deg)))
    state = PlayState(0.0)
    for k in range(n + 1):
        apply_hysteresis(-amplitude_deg * k / n, load_lbs, model, state)
    ascent = [-amplitude_deg + amplitude_deg * k / n for k in range(2 * n + 1)]
    sweep = []
    for cmd in ascent + ascent[-2::-1]:
        sweep.append((cmd, apply_hysteresis(cmd, load_lbs, model, state)))
    return sweep


def loop_width_deg(sweep: Sequence[tuple[float, float]]) -> float:
    """Widest actual-angle separation between the two branches at equal command."""
    by_cmd: dict[float, list[float]] = {}
    for cmd, actual in sweep:
        by_cmd.setdefault(round(cmd, 9), []).append(actual)
    widths = [max(v) - min(v) for v in by_cmd.values() if len(v) > 1]
    return max(widths) if widths else 0.0


def loop_area_deg2(sweep: Sequence[tuple[float, float]]) -> float:
    """Enclosed loop area (shoelace over the command/actual polygon)."""
    area = 0.0
    pts = list(sweep)
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        area += x0 * y1 - x1 * y0
    return abs(area) / 2.0


def fit_hysteresis_model(
    points: Sequence[tuple[float, float]] = MEASURED_HYSTERESIS_WIDTHS,
) -> HysteresisModel:
    """Least-squares (load, width) fit of the play-width line."""
    loads = [p[0] for p in points]
    widths = [p[1] for p in points]
    n = len(points)
    mean_x = sum(loads) / n
    mean_y = sum(widths) / n
    sxx = sum((x - mean_x) ** 2 for x in loads)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in points)
    slope = sxy / sxx
    return HysteresisModel(mean_y - slope * mean_x, slope)


def screw_output(
    motor_torque_nm: float,
    commanded_speed_rad_s: float,
    drivetrain: DrivetrainSpec = DrivetrainSpec(),
) -> ScrewOutput:
    """Shell torque/force/efficiency from the measured speed-force curve.

    The measured curve is the full-torque envelope; commanded motor torque
    below max scales the output linearly.  Speeds below the measured 10 rad/s
    point come back flagged ``extrapolated``.
    """
    if not 0.0 <= commanded_speed_rad_s <= MAX_SCREW_SPEED_RAD_S:
        raise ValueError(
            f"commanded speed must be within [0, {MAX_SCREW_SPEED_RAD_S:.0f}] rad/s"
        )
    if not 0.0 <= motor_torque_nm <= drivetrain.motor_max_torque_nm:
        raise ValueError("motor torque must be within [0, motor max]")
    (s0, f0), (s1, f1) = MEASURED_FORCE_CURVE
    force_full = f0 + (f1 - f0) * (commanded_speed_rad_s - s0) / (s1 - s0)
    scale = motor_torque_nm / drivetrain.motor_max_torque_nm
    force = force_full * scale
    torque = force * drivetrain.effective_screw_radius_m
    efficiency = torque / drivetrain.ideal_shell_torque_nm
    return ScrewOutput(torque, force, efficiency, commanded_speed_rad_s < s0)
