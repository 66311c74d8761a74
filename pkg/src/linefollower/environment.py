"""Line-track world: sensing, error angle, reward, progress and scoring."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kinematics import Pose, RobotGeometry, StepConfig, WheelSpeeds
from .track import Track

RUNNING = "running"
COMPLETED = "completed"
LOST_TRACK = "lost_track"
WRONG_DIRECTION = "wrong_direction"
TIMEOUT = "timeout"
OUTCOMES = (RUNNING, COMPLETED, LOST_TRACK, WRONG_DIRECTION, TIMEOUT)

LEFT = "left"
RIGHT = "right"


@dataclass(frozen=True)
class SensorArray:
    """A straight row of ``count`` IR sensors ahead of the tracked point.

    Index 0 is the leftmost sensor.
    """

    count: int = 32
    span: float = 0.20
    forward_offset: float = 0.125

    def __post_init__(self):
        if self.count < 3:
            raise ValueError("sensor count must be at least 3")
        if not (self.span > 0.0 and self.forward_offset > 0.0):
            raise ValueError("span and forward_offset must be positive")

    @classmethod
    def for_geometry(cls, geom: RobotGeometry, count: int = 32) -> "SensorArray":
        # bar as wide as the wheel track, mounted on the front edge
        return cls(count=count, span=geom.a, forward_offset=geom.b / 2.0)

    @property
    def pitch(self) -> float:
        return self.span / (self.count - 1)

    @property
    def e_max(self) -> float:
        return math.atan((self.span / 2.0) / self.forward_offset)

    @property
    def n_states(self) -> int:
        return self.count + 2

    def lateral(self, index: float) -> float:
        """Robot-frame x of a (possibly fractional) sensor index; +x is right."""
        return -0.5 * self.span + index * self.pitch

    def positions(self, pose: Pose) -> np.ndarray:
        cd, sd = math.cos(pose.delta), math.sin(pose.delta)
        xi = np.array([self.lateral(i) for i in range(self.count)])
        fwd = self.forward_offset
        return np.column_stack(
            (pose.x + (xi * cd - fwd * sd), pose.y + (xi * sd + fwd * cd))
        )


@dataclass(frozen=True)
class SensorReading:
    active: frozenset = frozenset()
    lost_side: str | None = None

    def __post_init__(self):
        if self.active and self.lost_side is not None:
            raise ValueError("lost_side must be None while the line is in view")

    @property
    def centroid(self) -> float | None:
        if not self.active:
            return None
        return sum(self.active) / len(self.active)


def side_of(centroid: float, array: SensorArray, previous: str | None = None) -> str | None:
    offset = array.lateral(centroid)
    if offset < 0.0:
        return LEFT
    if offset > 0.0:
        return RIGHT
    return previous


def sense(
    pose: Pose, track: Track, array: SensorArray, previous: SensorReading | None = None,
    last_side: str | None = None,
) -> SensorReading:
    """Which sensors sit over the line.

    When nothing is in view the side of the last contact is carried over,
    taken from ``previous`` (or ``last_side`` if given).
    """
    mask = np.zeros(array.count, dtype=np.uint8)
    kernels.sense(pose.x, pose.y, pose.delta, track.xs, track.ys, array.count,
                  array.span, array.forward_offset, 0.5 * track.line_width, mask)
    active = frozenset(int(i) for i in np.flatnonzero(mask))
    if active:
        return SensorReading(active, None)
    side = last_side
    if previous is not None:
        if previous.active:
            side = side_of(previous.centroid, array, last_side)
        else:
            side = previous.lost_side
    return SensorReading(frozenset(), side)


def error_from_centroid(centroid: float, array: SensorArray) -> float:
    return math.atan(-array.lateral(centroid) / array.forward_offset)


def error_angle(reading: SensorReading, array: SensorArray) -> float:
    """Signed angle at M between the body axis and the line; positive = line on the left."""
    if reading.active:
        return error_from_centroid(reading.centroid, array)
    if reading.lost_side == LEFT:
        return array.e_max
    if reading.lost_side == RIGHT:
        return -array.e_max
    return 0.0


def state_key(reading: SensorReading, array: SensorArray) -> int:
    """Nearest sensor to the active centroid, or one of the two lost states."""
    if reading.active:
        return min(int(math.floor(reading.centroid + 0.5)), array.count - 1)
    return array.count if reading.lost_side == LEFT else array.count + 1


def reward(
    e_prev: float, e_now: float, speeds: WheelSpeeds, geom: RobotGeometry, cfg: StepConfig
) -> float:
    """Error correction + speed bonus - time-weighted residual error."""
    de = abs(e_prev) - abs(e_now)
    return de + (speeds.w_l + speeds.w_r) / (2.0 * geom.w_max) - cfg.t_s * abs(e_now)


def score_value(n: int, t_rec: float) -> float:
    if n <= 0:
        return 0.0
    return 10.0 * n - t_rec / n


@dataclass
class EpisodeStatus:
    t_s: float = 0.01
    outcome: str = RUNNING
    segments_done: int = 0
    step_count: int = 0
    progress: float = 0.0       # unwrapped arc length travelled along the course
    best_progress: float = 0.0
    s_proj: float = 0.0         # last projection onto the track, in [0, length]
    lost_steps: int = 0
    reverse_steps: int = 0

    @property
    def elapsed(self) -> float:
        return self.step_count * self.t_s


def score(status: EpisodeStatus) -> float:
    """Completed segments times ten minus the time penalty per segment."""
    return score_value(status.segments_done, status.elapsed)


@dataclass(frozen=True)
class Termination:
    k_lost: int = 50
    k_rev: int = 100
    max_steps: int = 20_000
    window: float = 0.25


def update_progress(
    status: EpisodeStatus, pose: Pose, track: Track, lost: bool,
    rules: Termination = Termination(),
) -> EpisodeStatus:
    """Advance the clock by one step and apply the termination rules in place."""
    if status.outcome != RUNNING:
        raise ValueError("episode already finished")
    return _advance(status, pose.x, pose.y, track, lost, rules)


def _advance(status, x, y, track, lost, rules):
    length = track.length
    s = kernels.project(x, y, track.xs, track.ys, track.cum, status.s_proj,
                        rules.window, track.closed, length)
    ds = s - status.s_proj
    if track.closed:
        ds = math.remainder(ds, length)
    status.s_proj = s
    status.progress += ds
    status.step_count += 1
    if status.progress > status.best_progress:
        status.best_progress = status.progress
        marks = track.segment_marks
        n = status.segments_done
        while n < len(marks) and marks[n] <= status.best_progress:
            n += 1
        status.segments_done = n
    status.reverse_steps = status.reverse_steps + 1 if ds < 0.0 else 0
    status.lost_steps = status.lost_steps + 1 if lost else 0
    if status.segments_done >= track.n_segments:
        status.outcome = COMPLETED
    elif status.lost_steps >= rules.k_lost:
        status.outcome = LOST_TRACK
    elif status.reverse_steps >= rules.k_rev:
        status.outcome = WRONG_DIRECTION
    elif status.step_count >= rules.max_steps:
        status.outcome = TIMEOUT
    return status


def randomize_direction(track: Track, rng) -> Track:
    """The track or its reversed twin, each with probability 1/2.

    ``rng`` is an integer seed or any generator with a ``random()`` method.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    return track.reversed() if rng.random() < 0.5 else track


@dataclass
class StepResult:
    state: int
    reward: float
    error: float
    done: bool


_OUTCOME_NAMES = (RUNNING, COMPLETED, LOST_TRACK, WRONG_DIRECTION, TIMEOUT)
_SIDE_NAMES = (None, LEFT, RIGHT)


@dataclass
class LineFollowerEnv:
    """One robot on one track.  ``reset`` then ``step`` with wheel-speed fractions.

    The per-step work happens in a ``kernels.SimCore``; this class keeps the
    friendlier object view (``pose``, ``status``, ``reading()``) on top of it.
    """

    track: Track
    geom: RobotGeometry = field(default_factory=RobotGeometry)
    cfg: StepConfig = field(default_factory=StepConfig)
    array: SensorArray | None = None
    rules: Termination = field(default_factory=Termination)
    noise: float = 0.0

    def __post_init__(self):
        if self.array is None:
            self.array = SensorArray.for_geometry(self.geom)
        self._cores = {}
        self.core = self._core_for(self.track)

    def _core_for(self, track: Track):
        core = self._cores.get(id(track))
        if core is None or core[0] is not track:
            g, a, rules = self.geom, self.array, self.rules
            sim = kernels.SimCore(
                track.xs, track.ys, track.cum, track.segment_marks, track.closed,
                track.line_width, g.a, g.b, g.r, g.w_max, self.cfg.t_s,
                a.count, a.span, a.forward_offset,
                rules.k_lost, rules.k_rev, rules.max_steps, rules.window)
            core = (track, sim)
            if len(self._cores) >= 8:
                self._cores.clear()
            self._cores[id(track)] = core
        return core[1]

    @property
    def pose(self) -> Pose:
        c = self.core
        return Pose(c.x, c.y, c.d)

    @property
    def status(self) -> EpisodeStatus:
        c = self.core
        return EpisodeStatus(
            t_s=self.cfg.t_s, outcome=_OUTCOME_NAMES[c.outcome],
            segments_done=c.segments_done, step_count=c.step_count, progress=c.progress,
            best_progress=c.best_progress, s_proj=c.s_proj, lost_steps=c.lost_steps,
            reverse_steps=c.reverse_steps)

    @property
    def error(self) -> float:
        return self.core.error

    @property
    def state(self) -> int:
        return self.core.state

    @property
    def lost(self) -> bool:
        return bool(self.core.lost)

    @property
    def last_side(self) -> str | None:
        return _SIDE_NAMES[self.core.last_side]

    @property
    def done(self) -> bool:
        return self.core.outcome != 0

    def start_pose(self, lateral: float = 0.0) -> Pose:
        x0, y0 = self.track.point_at(0.0)
        d = self.track.start_heading
        # +lateral shifts the robot to its right
        return Pose(x0 + lateral * math.cos(d), y0 + lateral * math.sin(d), d)

    def reset(self, pose: Pose | None = None, track: Track | None = None) -> int:
        if track is not None:
            self.track = track
        self.core = self._core_for(self.track)
        p = pose if pose is not None else self.start_pose()
        return self.core.reset(p.x, p.y, p.delta)

    def reading(self) -> SensorReading:
        active = frozenset(int(i) for i in np.flatnonzero(self.core.mask))
        return SensorReading(active, None if active else self.last_side)

    def wheel_speeds(self, y_l: float, y_r: float, noise_rng=None) -> tuple[float, float]:
        """Fractions to rad/s, with optional multiplicative actuator noise."""
        m = self.geom.w_max
        w_l = y_l * m
        w_r = y_r * m
        if self.noise > 0.0 and noise_rng is not None:
            w_l *= 1.0 + self.noise * (2.0 * noise_rng.random() - 1.0)
            w_r *= 1.0 + self.noise * (2.0 * noise_rng.random() - 1.0)
        return w_l, w_r

    def step(self, y_l: float, y_r: float, noise_rng=None) -> StepResult:
        w_l, w_r = self.wheel_speeds(y_l, y_r, noise_rng)
        state, error, r, outcome = self.core.step(w_l, w_r)
        return StepResult(state, r, error, outcome != 0)
