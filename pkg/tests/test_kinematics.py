import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from labseq.kinematics import (
    CartesianPose,
    ContractError,
    JointConfig,
    JointLimits,
    VelocityLimits,
    interpolate,
    motion_duration,
    tilt_from_vertical,
)

angles = st.floats(-math.pi, math.pi, allow_nan=False)
configs = st.tuples(*[angles] * 6).map(JointConfig)
speeds = st.tuples(*[st.floats(0.1, 5.0)] * 6).map(VelocityLimits)

UNIT = VelocityLimits()


def test_joint_config_shape_and_finiteness():
    with pytest.raises(ContractError):
        JointConfig((0.0,) * 5)
    with pytest.raises(ContractError):
        JointConfig((0, 0, 0, 0, 0, float("nan")))
    assert JointConfig(np.zeros(6)).q == (0.0,) * 6


def test_joint_limits_default_to_pi():
    lim = JointLimits()
    assert lim.contains(JointConfig((math.pi, -math.pi, 0, 0, 0, 0)))
    assert not lim.contains(JointConfig((3.2, 0, 0, 0, 0, 0)))


def test_velocity_limits_must_be_positive():
    with pytest.raises(ContractError):
        VelocityLimits((1, 1, 1, 0, 1, 1))


def test_motion_duration_identity():
    a = JointConfig((0.3, -1, 2, 0, 0.5, 1))
    assert motion_duration(a, a, UNIT) == 0.0


def test_motion_duration_single_joint():
    a = JointConfig((0,) * 6)
    b = JointConfig((0.5, 0, 0, 0, 0, 0))
    assert motion_duration(a, b, UNIT) == 0.5


def test_motion_duration_slowest_joint_dominates():
    a = JointConfig((0,) * 6)
    b = JointConfig((0.2, 0.6, 0, 0, 0, 0))
    limits = VelocityLimits((1.0, 2.0, 1, 1, 1, 1))
    # max(0.2/1, 0.6/2) by hand
    assert motion_duration(a, b, limits) == pytest.approx(0.3, abs=1e-15)


def test_motion_duration_dimension_mismatch():
    with pytest.raises(ContractError):
        motion_duration((0, 0, 0), (0, 0, 0, 0, 0, 0), UNIT)


@given(configs, configs, configs, speeds)
def test_motion_duration_is_a_metric(a, b, c, v):
    ab = motion_duration(a, b, v)
    assert ab >= 0
    assert ab == motion_duration(b, a, v)
    assert (ab == 0) == (a == b)
    assert motion_duration(a, c, v) <= ab + motion_duration(b, c, v) + 1e-12


@given(configs, st.lists(configs, min_size=1, max_size=5), speeds, st.floats(0.1, 10))
def test_scaling_speeds_scales_durations_not_argmin(a, cands, v, c):
    before = [motion_duration(a, b, v) for b in cands]
    after = [motion_duration(a, b, v.scaled(c)) for b in cands]
    for x, y in zip(before, after):
        assert y == pytest.approx(x / c, rel=1e-12, abs=1e-15)
    # the faster robot picks a candidate that was already optimal
    assert before[int(np.argmin(after))] == pytest.approx(min(before), rel=1e-12, abs=1e-15)


def test_interpolate_endpoints_and_midpoint():
    a = JointConfig((0,) * 6)
    b = JointConfig((1,) * 6)
    assert interpolate(a, a, 2) == [a, a]
    mid = interpolate(a, b, 3)[1]
    assert mid.q == (0.5,) * 6


@given(configs, configs)
def test_interpolate_closed_form(a, b):
    pts = interpolate(a, b, 5)
    assert pts[0] is a and pts[-1] is b
    for k, p in enumerate(pts[1:-1], start=1):
        expected = np.array(a.q) + k / 4 * (np.array(b.q) - np.array(a.q))
        np.testing.assert_allclose(p.q, expected, atol=1e-12)


def test_interpolate_needs_two_points():
    a = JointConfig((0,) * 6)
    with pytest.raises(ValueError):
        interpolate(a, a, 1)


def test_pose_requires_unit_quaternion():
    with pytest.raises(ContractError):
        CartesianPose((0, 0, 0), (1.0, 0.1, 0, 0))


@pytest.mark.parametrize(
    "axis,angle,expected",
    [((1, 0, 0), 0.0, 0.0), ((1, 0, 0), 180.0, 180.0), ((0, 1, 0), 90.0, 90.0), ((0, 0, 1), 70.0, 0.0)],
)
def test_tilt_from_vertical(axis, angle, expected):
    pose = CartesianPose.from_axis_angle(axis, angle)
    assert tilt_from_vertical(pose) == pytest.approx(expected, abs=1e-6)


@given(st.tuples(*[st.floats(-1, 1)] * 4).filter(lambda q: sum(x * x for x in q) > 1e-3))
def test_tilt_range(q):
    n = math.sqrt(sum(x * x for x in q))
    pose = CartesianPose((0, 0, 0), tuple(x / n for x in q))
    assert 0.0 <= tilt_from_vertical(pose) <= 180.0
