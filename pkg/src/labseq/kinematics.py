"""Joint-space configurations, the motion-time metric and pose utilities.

The motion metric is time-optimal synchronized point-to-point motion: every
joint travels at most at its speed limit and all joints arrive together, so
the move takes as long as the slowest joint needs,

    duration(a, b) = max_j |a_j - b_j| / v_j

which is a weighted Chebyshev distance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 6


class ContractError(ValueError):
    """Raised when inputs violate an operation's preconditions."""


def _as_vector(values, n: int, what: str) -> tuple[float, ...]:
    vec = tuple(float(v) for v in values)
    if len(vec) != n:
        raise ContractError(f"{what} needs exactly {n} entries, got {len(vec)}")
    if not all(math.isfinite(v) for v in vec):
        raise ContractError(f"{what} entries must be finite: {vec}")
    return vec


@dataclass(frozen=True)
class JointConfig:
    """Six joint angles in radians."""

    q: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "q", _as_vector(self.q, N_JOINTS, "JointConfig"))

    def __iter__(self):
        return iter(self.q)

    def __len__(self):
        return N_JOINTS

    def __getitem__(self, j):
        return self.q[j]

    @property
    def array(self) -> np.ndarray:
        return np.array(self.q)

    def tolist(self) -> list[float]:
        return list(self.q)


@dataclass(frozen=True)
class VelocityLimits:
    """Maximum joint speeds in rad/s."""

    v: tuple[float, ...] = (1.0,) * N_JOINTS

    def __post_init__(self):
        v = _as_vector(self.v, N_JOINTS, "VelocityLimits")
        if any(x <= 0 for x in v):
            raise ContractError(f"velocity limits must be > 0: {v}")
        object.__setattr__(self, "v", v)

    def scaled(self, c: float) -> "VelocityLimits":
        return VelocityLimits(tuple(x * c for x in self.v))


@dataclass(frozen=True)
class JointLimits:
    """Per-joint closed position intervals, default [-pi, pi]."""

    lower: tuple[float, ...] = (-math.pi,) * N_JOINTS
    upper: tuple[float, ...] = (math.pi,) * N_JOINTS

    def __post_init__(self):
        lo = _as_vector(self.lower, N_JOINTS, "JointLimits.lower")
        hi = _as_vector(self.upper, N_JOINTS, "JointLimits.upper")
        if any(l > h for l, h in zip(lo, hi)):
            raise ContractError("joint lower limits must not exceed upper limits")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def contains(self, c: JointConfig) -> bool:
        return all(l <= x <= h for x, l, h in zip(c.q, self.lower, self.upper))

    def check(self, c: JointConfig, what: str = "configuration") -> None:
        if not self.contains(c):
            raise ContractError(f"{what} {c.q} is outside joint limits")


def motion_duration(a, b, limits: VelocityLimits) -> float:
    """Seconds needed to move from ``a`` to ``b`` with synchronized joints."""
    qa = a.q if isinstance(a, JointConfig) else tuple(a)
    qb = b.q if isinstance(b, JointConfig) else tuple(b)
    if len(qa) != len(qb) or len(qa) != len(limits.v):
        raise ContractError(
            f"dimension mismatch: {len(qa)} vs {len(qb)} joints, {len(limits.v)} limits"
        )
    return max(abs(x - y) / v for x, y, v in zip(qa, qb, limits.v))


def interpolate(a: JointConfig, b: JointConfig, n: int) -> list[JointConfig]:
    """``n`` joint-space waypoints on the straight line from ``a`` to ``b``.

    The endpoints are returned unchanged, not recomputed.
    """
    if n < 2:
        raise ValueError(f"need at least 2 waypoints, got {n}")
    qa, qb = np.array(a.q), np.array(b.q)
    inner = [JointConfig(qa + (k / (n - 1)) * (qb - qa)) for k in range(1, n - 1)]
    return [a, *inner, b]


@dataclass(frozen=True)
class CartesianPose:
    """End-effector pose: position in mm, orientation as a unit quaternion
    in scalar-first order ``(w, x, y, z)``."""

    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    orientation: tuple[float, float, float, float] = field(default=(1.0, 0.0, 0.0, 0.0))

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vector(self.position, 3, "position"))
        quat = _as_vector(self.orientation, 4, "orientation")
        norm = math.sqrt(sum(c * c for c in quat))
        if abs(norm - 1.0) > 1e-9:
            raise ContractError(f"orientation quaternion must be unit length, norm={norm!r}")
        object.__setattr__(self, "orientation", quat)

    @classmethod
    def from_axis_angle(cls, axis, angle_deg: float, position=(0.0, 0.0, 0.0)) -> "CartesianPose":
        ax = np.asarray(axis, dtype=float)
        ax = ax / np.linalg.norm(ax)
        half = math.radians(angle_deg) / 2.0
        s = math.sin(half)
        quat = np.array([math.cos(half), *(s * ax)])
        return cls(tuple(position), tuple(quat / np.linalg.norm(quat)))


def tilt_from_vertical(p: CartesianPose) -> float:
    """Angle in degrees between the gripper's local +Z (its up-axis) and world +Z."""
    w, x, y, z = p.orientation
    # third row, third column of the rotation matrix
    cos_tilt = 1.0 - 2.0 * (x * x + y * y)
    return math.degrees(math.acos(min(1.0, max(-1.0, cos_tilt))))
