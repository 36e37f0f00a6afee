"""Pouring by gradual Cartesian twists, and upright transport checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .kinematics import CartesianPose, tilt_from_vertical

DEFAULT_MAX_INCREMENT = 12.2  # deg per twist; 122 deg pours in 10 twists
STIR_BAR_FACTOR = 0.5

# Relative float noise in total/increment tolerated before rounding up a step.
_RATIO_SLACK = 1e-9


@dataclass(frozen=True)
class TwistProfile:
    total_angle: float                  # deg
    total_dx: float                     # mm toward the cartridge
    max_angle_increment: float = DEFAULT_MAX_INCREMENT
    stir_bar: bool = False

    def __post_init__(self):
        if not (self.total_angle >= 0 and self.total_dx >= 0):
            raise ValueError("pour totals must be non-negative")
        if not self.max_angle_increment > 0:
            raise ValueError(f"max_angle_increment must be > 0, got {self.max_angle_increment}")

    def step_count(self) -> int:
        if self.total_angle == 0:
            return 1 if self.total_dx > 0 else 0
        ratio = self.total_angle / self.max_angle_increment
        n = max(1, math.ceil(ratio))  # ratio underflows to 0 for subnormal angles
        if n > 1 and ratio - (n - 1) <= _RATIO_SLACK * ratio:
            n -= 1
        return n

    def as_dict(self) -> dict:
        return {
            "total_angle": self.total_angle,
            "total_dx": self.total_dx,
            "max_angle_increment": self.max_angle_increment,
            "stir_bar": self.stir_bar,
        }


@dataclass(frozen=True)
class UprightConstraint:
    max_tilt: float = 15.0  # deg

    def __post_init__(self):
        if not 0 <= self.max_tilt <= 180:
            raise ValueError(f"max_tilt must lie in [0, 180], got {self.max_tilt}")


def generate_pour_waypoints(profile: TwistProfile) -> list[tuple[float, float]]:
    """Cumulative (angle deg, dx mm) after each twist.

    Twists are equal-sized; translation advances in proportion to rotation.
    The last waypoint is the profile totals exactly.
    """
    if not profile.max_angle_increment > 0:
        raise ValueError("max_angle_increment must be > 0")
    n = profile.step_count()
    waypoints = [
        (profile.total_angle * k / n, profile.total_dx * k / n) for k in range(1, n)
    ]
    if n:
        waypoints.append((profile.total_angle, profile.total_dx))
    return waypoints


def stir_bar_profile(base: TwistProfile, factor: float = STIR_BAR_FACTOR) -> TwistProfile:
    """A more gradual variant of ``base`` for a vial holding a stir bar."""
    if not 0 < factor < 1:
        raise ValueError("factor must be in (0, 1)")
    return replace(base, stir_bar=True, max_angle_increment=base.max_angle_increment * factor)


def pour_duration(profile: TwistProfile, twist_rate: float) -> float:
    """Seconds to execute the pour at ``twist_rate`` deg/s."""
    return profile.total_angle / twist_rate


def pour_poses(rim: CartesianPose, profile: TwistProfile, axis=(0.0, 1.0, 0.0)) -> list[CartesianPose]:
    """End-effector poses for a pour that starts upright at ``rim``.

    Rotation is about ``axis`` (world frame) and translation along world +x.
    """
    ax = np.asarray(axis, dtype=float)
    ax = ax / np.linalg.norm(ax)
    w0, x0, y0, z0 = rim.orientation
    poses = []
    for angle, dx in generate_pour_waypoints(profile):
        half = math.radians(angle) / 2.0
        w1, (x1, y1, z1) = math.cos(half), math.sin(half) * ax
        # world-frame twist: q = q_twist * q_rim
        quat = np.array([
            w1 * w0 - x1 * x0 - y1 * y0 - z1 * z0,
            w1 * x0 + x1 * w0 + y1 * z0 - z1 * y0,
            w1 * y0 - x1 * z0 + y1 * w0 + z1 * x0,
            w1 * z0 + x1 * y0 - y1 * x0 + z1 * w0,
        ])
        pos = np.array(rim.position) + np.array([dx, 0.0, 0.0])
        poses.append(CartesianPose(tuple(pos), tuple(quat / np.linalg.norm(quat))))
    return poses


@dataclass(frozen=True)
class UprightCheck:
    accepted: bool
    index: Optional[int] = None
    tilt: Optional[float] = None

    def __bool__(self):
        return self.accepted


def validate_upright(trajectory: Sequence[CartesianPose], c: UprightConstraint) -> UprightCheck:
    """Accept when every waypoint tilts at most ``c.max_tilt`` from vertical."""
    if len(trajectory) == 0:
        raise ValueError("trajectory is empty")
    for i, pose in enumerate(trajectory):
        tilt = tilt_from_vertical(pose)
        if tilt > c.max_tilt:
            return UprightCheck(False, i, tilt)
    return UprightCheck(True)
