import math
import random
from dataclasses import replace

import numpy as np
import pytest
from shapely.geometry import LineString, Point

from linefollower.agents import PControllerConfig, p_control
from linefollower.environment import (
    COMPLETED, LEFT, LOST_TRACK, RIGHT, RUNNING, TIMEOUT, WRONG_DIRECTION, EpisodeStatus,
    LineFollowerEnv, SensorArray, SensorReading, Termination, error_angle, randomize_direction,
    reward, score, score_value, sense, state_key, update_progress,
)
from linefollower.kinematics import Pose, RobotGeometry, StepConfig, WheelSpeeds, step
from linefollower.track import Track, load_track

ARRAY = SensorArray()
STRAIGHT = Track([[0.0, 0.0], [0.0, 3.0]], line_width=0.02, segment_marks=[1.0, 2.0, 3.0])


def test_array_defaults_match_geometry():
    a = SensorArray.for_geometry(RobotGeometry())
    assert (a.count, a.span, a.forward_offset) == (32, 0.2, 0.125)
    assert a.e_max == pytest.approx(0.674741, abs=1e-6)
    assert a.n_states == 34


def test_centred_robot_sees_middle_sensors():
    r = sense(Pose(0.0, 0.5, 0.0), STRAIGHT, ARRAY)
    assert r.active == frozenset({14, 15, 16, 17})
    assert error_angle(r, ARRAY) == pytest.approx(0.0, abs=1e-15)
    assert state_key(r, ARRAY) == 16


@pytest.mark.parametrize("shift, sign", [(0.05, 1), (-0.05, -1)])
def test_error_sign_follows_line_side(shift, sign):
    # robot shifted right of the line sees it on its left: positive error
    r = sense(Pose(shift, 0.5, 0.0), STRAIGHT, ARRAY)
    e = error_angle(r, ARRAY)
    assert math.copysign(1, e) == sign
    # the centroid snaps to the sensor grid, so allow half a pitch of lateral slack
    slack = 0.5 * ARRAY.pitch / ARRAY.forward_offset
    assert abs(e) == pytest.approx(math.atan(0.05 / 0.125), abs=slack)


def test_heading_error_reads_as_rotation():
    # rotating the robot clockwise (negative delta) puts the line to its left
    e = error_angle(sense(Pose(0.0, 0.5, -0.2), STRAIGHT, ARRAY), ARRAY)
    assert e > 0.15


def test_lost_reading_keeps_last_side():
    seen = sense(Pose(0.05, 0.5, 0.0), STRAIGHT, ARRAY)
    lost = sense(Pose(0.5, 0.5, 0.0), STRAIGHT, ARRAY, previous=seen)
    assert not lost.active and lost.lost_side == LEFT
    assert error_angle(lost, ARRAY) == ARRAY.e_max
    assert state_key(lost, ARRAY) == 32
    again = sense(Pose(0.6, 0.5, 0.0), STRAIGHT, ARRAY, previous=lost)
    assert again.lost_side == LEFT
    right = SensorReading(frozenset(), RIGHT)
    assert error_angle(right, ARRAY) == -ARRAY.e_max and state_key(right, ARRAY) == 33
    none = SensorReading()
    assert error_angle(none, ARRAY) == 0.0 and state_key(none, ARRAY) == 33


def test_reading_rejects_side_while_seeing():
    with pytest.raises(ValueError):
        SensorReading(frozenset({3}), LEFT)


def test_sense_against_shapely():
    track = load_track("complex_01")
    line = LineString(track.points)
    rng = np.random.default_rng(3)
    for _ in range(150):
        x, y = track.point_at(rng.uniform(0, track.length))
        pose = Pose(x + rng.normal(0, 0.05), y + rng.normal(0, 0.05), rng.uniform(-3, 3))
        got = sense(pose, track, ARRAY).active
        for i, (px, py) in enumerate(ARRAY.positions(pose)):
            d = line.distance(Point(px, py))
            if abs(d - 0.5 * track.line_width) > 1e-12:
                assert (i in got) == (d <= 0.5 * track.line_width)


def test_sensing_is_rigid_motion_invariant():
    rng = np.random.default_rng(1)
    base = load_track("oval_simple")
    for _ in range(20):
        th, tx, ty = rng.uniform(-3, 3), rng.uniform(-2, 2), rng.uniform(-2, 2)
        c, s = math.cos(th), math.sin(th)
        moved = Track(base.points @ np.array([[c, s], [-s, c]]) + [tx, ty], base.line_width,
                      base.closed)
        x, y = base.point_at(rng.uniform(0, base.length))
        x += rng.normal(0, 0.03)
        d = rng.uniform(-3, 3)
        p2 = Pose(c * x - s * y + tx, s * x + c * y + ty, d + th)
        assert sense(Pose(x, y, d), base, ARRAY).active == sense(p2, moved, ARRAY).active


@pytest.mark.parametrize("e_prev, e_now, w, expected", [
    (0.2, 0.1, (1.0, 1.0), 0.1 + 1.0 - 0.01 * 0.1),
    (0.0, 0.0, (0.0, 0.0), 0.0),
    (0.1, -0.3, (-1.0, 0.5), -0.2 - 0.25 - 0.003),
    (0.0, 0.0, (-1.0, -1.0), -1.0),
])
def test_reward_examples(e_prev, e_now, w, expected):
    g = RobotGeometry()
    speeds = WheelSpeeds(w[0] * g.w_max, w[1] * g.w_max)
    assert reward(e_prev, e_now, speeds, g, StepConfig(0.01)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("n, t, expected", [
    (8, 20.0, 77.5), (10, 25.0, 97.5), (8, 10.0, 78.75), (0, 5.0, 0.0), (1, 200.0, -190.0), (32, 12.8, 319.6),
])
def test_score_examples(n, t, expected):
    assert score_value(n, t) == pytest.approx(expected, abs=1e-12)


def test_score_from_status():
    st = EpisodeStatus(t_s=0.01, segments_done=4, step_count=800)
    assert score(st) == pytest.approx(40 - 8 / 4)


def _walk(status, ys, lost=False, rules=Termination(), x=0.0):
    for y in ys:
        update_progress(status, Pose(x, y, 0.0), STRAIGHT, lost, rules)
        if status.outcome != RUNNING:
            break
    return status


def test_segments_and_completion():
    st = _walk(EpisodeStatus(), np.arange(0.1, 2.01, 0.1))
    assert st.outcome == RUNNING and st.segments_done == 2
    assert st.progress == pytest.approx(2.0)
    _walk(st, np.arange(2.1, 3.001, 0.1))
    assert st.outcome == COMPLETED and st.segments_done == 3


def test_segments_never_uncount():
    st = _walk(EpisodeStatus(), np.arange(0.1, 1.21, 0.1))
    _walk(st, np.arange(1.1, 0.5, -0.1))
    assert st.segments_done == 1


def test_lost_track_after_k_steps():
    st = _walk(EpisodeStatus(), [0.0] * 49, lost=True)
    assert st.outcome == RUNNING
    _walk(st, [0.0], lost=True)
    assert st.outcome == LOST_TRACK and st.step_count == 50


def test_lost_counter_resets_on_contact():
    st = _walk(EpisodeStatus(), [0.0] * 49, lost=True)
    _walk(st, [0.0])
    _walk(st, [0.0] * 49, lost=True)
    assert st.outcome == RUNNING and st.lost_steps == 49


def test_wrong_direction_after_k_reverse_steps():
    st = EpisodeStatus(s_proj=2.5, progress=2.5, best_progress=2.5)
    _walk(st, 2.5 - 0.001 * np.arange(1, 100))
    assert st.outcome == RUNNING
    _walk(st, [2.5 - 0.1])
    assert st.outcome == WRONG_DIRECTION and st.reverse_steps == 100


def test_timeout_and_finished_guard():
    st = _walk(EpisodeStatus(), [0.0] * 10, rules=Termination(max_steps=5))
    assert st.outcome == TIMEOUT and st.step_count == 5
    with pytest.raises(ValueError):
        update_progress(st, Pose(0, 0, 0), STRAIGHT, False)


def test_closed_track_progress_wraps():
    oval = load_track("oval_simple")
    st = EpisodeStatus()
    for s in np.arange(0.05, oval.length + 0.3, 0.05):
        update_progress(st, Pose(*oval.point_at(s % oval.length), 0.0), oval, False)
        if st.outcome != RUNNING:
            break
    assert st.outcome == COMPLETED
    assert st.progress == pytest.approx(oval.length, abs=0.06)


def test_randomize_direction_is_fair():
    t = load_track("oval_simple")
    rng = random.Random(0)
    flips = sum(randomize_direction(t, rng) is not t for _ in range(10_000))
    assert 0.48 <= flips / 10_000 <= 0.52
    assert randomize_direction(t, 7) is randomize_direction(t, 7)


def test_env_matches_reference_functions():
    """Each fused step reproduces the separate sense/reward/progress path."""
    track = load_track("complex_01")
    env = LineFollowerEnv(track)
    g, cfg, arr = env.geom, env.cfg, env.array
    env.reset()
    rng = random.Random(9)
    done = False
    n = 0
    while not done and n < 4000:
        pose, prev, status, side = env.pose, env.reading(), env.status, env.last_side
        e_prev = env.error
        y = p_control(e_prev, PControllerConfig(kp=2.0, base_fraction=0.8))
        y = (y[0] + rng.uniform(-0.4, 0.4), y[1] + rng.uniform(-0.4, 0.4))
        res = env.step(*y)
        speeds = WheelSpeeds.clamped(y[0] * g.w_max, y[1] * g.w_max, g)
        ref_pose = step(pose, speeds, g, cfg)
        assert env.pose.x == pytest.approx(ref_pose.x, abs=1e-12)
        assert env.pose.y == pytest.approx(ref_pose.y, abs=1e-12)
        reading = sense(env.pose, track, arr, previous=prev, last_side=side)
        assert env.reading() == reading
        e = error_angle(reading, arr)
        assert res.error == pytest.approx(e, abs=1e-15)
        assert res.state == state_key(reading, arr)
        assert res.reward == pytest.approx(reward(e_prev, e, speeds, g, cfg), abs=1e-12)
        update_progress(status, env.pose, track, not reading.active, env.rules)
        assert env.status == status
        done = res.done
        n += 1
    assert n > 200


def test_env_reset_and_track_swap():
    oval = load_track("oval_simple")
    env = LineFollowerEnv(oval)
    s = env.reset()
    assert 0 <= s < 32 and not env.done and env.status.step_count == 0
    twin = oval.reversed()
    env.reset(track=twin)
    assert env.track is twin and env.pose.delta == pytest.approx(twin.start_heading)
    env.reset(track=oval)
    assert env.core is env._core_for(oval)


def test_start_pose_lateral_is_to_the_right():
    env = LineFollowerEnv(STRAIGHT)
    p = env.start_pose(0.03)
    assert (p.x, p.y) == pytest.approx((0.03, 0.0))


def test_stationary_robot_times_out():
    env = LineFollowerEnv(STRAIGHT, rules=Termination(max_steps=30))
    env.reset(Pose(0.0, 0.5, 0.0))
    for _ in range(30):
        res = env.step(0.0, 0.0)
        assert res.reward == pytest.approx(0.0, abs=1e-15)
    assert res.done and env.status.outcome == TIMEOUT and score(env.status) == 0.0


def test_spinning_off_the_line_is_lost():
    env = LineFollowerEnv(STRAIGHT)
    env.reset(Pose(0.0, 0.5, 0.0))
    k = 0
    while not env.done:
        env.step(1.0, 0.3)
        k += 1
    assert env.status.outcome in (LOST_TRACK, WRONG_DIRECTION)
    if env.status.outcome == LOST_TRACK:
        assert env.status.lost_steps == 50


def test_actuator_noise_bounds():
    env = LineFollowerEnv(STRAIGHT, noise=0.1)
    rng = random.Random(2)
    m = env.geom.w_max
    for _ in range(1000):
        w_l, w_r = env.wheel_speeds(0.5, -0.5, rng)
        assert 0.45 * m <= w_l <= 0.55 * m and -0.55 * m <= w_r <= -0.45 * m
    assert LineFollowerEnv(STRAIGHT).wheel_speeds(0.5, 0.5, rng) == (0.5 * m, 0.5 * m)
