"""Discrete-time motion model of a two-wheeled line follower.

The robot is described by its wheel track ``a``, body length ``b`` and wheel
radius ``r``.  The tracked point M sits on the body axis, ``b/2`` ahead of the
wheel axle.  The heading ``delta`` is measured from the world y axis and is
positive counter-clockwise, so the forward direction is ``(-sin delta, cos delta)``
and the robot-frame x axis points to the robot's right.

One sampling period is decomposed in two ways:

* both wheels turn the same way (or one is stopped): a straight move at the
  common speed followed by a pivot about the slower wheel;
* the wheels turn in opposite directions: a pivot driven by the residual
  ``w_l + w_r`` plus an in-place turn about M.

``exact_unicycle_step`` is the closed-form rigid-body solution and is only used
to validate the discrete model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import kernels

RPM_TO_RAD_S = 2.0 * math.pi / 60.0


def normalize_angle(angle: float) -> float:
    """Wrap ``angle`` into (-pi, pi]."""
    return kernels.normalize_angle(angle)


def _sign(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


@dataclass(frozen=True)
class RobotGeometry:
    a: float = 0.20
    b: float = 0.25
    r: float = 0.025
    w_max: float = 600.0 * RPM_TO_RAD_S

    def __post_init__(self):
        for name in ("a", "b", "r", "w_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"RobotGeometry.{name} must be positive")

    @property
    def c(self) -> float:
        """Distance from a wheel contact point to M."""
        return math.sqrt((self.a / 2.0) ** 2 + (self.b / 2.0) ** 2)

    @property
    def gamma(self) -> float:
        return math.atan(self.b / self.a)

    @classmethod
    def from_rpm(cls, a: float, b: float, r: float, rpm: float) -> "RobotGeometry":
        return cls(a=a, b=b, r=r, w_max=rpm * RPM_TO_RAD_S)


@dataclass(frozen=True)
class Pose:
    x: float = 0.0
    y: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "delta", normalize_angle(self.delta))

    @property
    def heading(self) -> tuple[float, float]:
        return -math.sin(self.delta), math.cos(self.delta)


@dataclass(frozen=True)
class WheelSpeeds:
    """Signed wheel angular speeds in rad/s, clamped to +/- ``w_max``."""

    w_l: float
    w_r: float

    @classmethod
    def clamped(cls, w_l: float, w_r: float, geom: RobotGeometry) -> "WheelSpeeds":
        m = geom.w_max
        return cls(min(max(w_l, -m), m), min(max(w_r, -m), m))

    @classmethod
    def from_fractions(cls, y_l: float, y_r: float, geom: RobotGeometry) -> "WheelSpeeds":
        return cls.clamped(y_l * geom.w_max, y_r * geom.w_max, geom)

    @property
    def same_direction(self) -> bool:
        return self.w_l * self.w_r >= 0.0


@dataclass(frozen=True)
class StepConfig:
    t_s: float = 0.01

    def __post_init__(self):
        if not self.t_s > 0.0:
            raise ValueError("t_s must be positive")


@dataclass
class MotionDecomposition:
    """Intermediate quantities of one step.  Unused parts stay at zero."""

    w_f: float = 0.0
    V_f: float = 0.0
    x_f: float = 0.0
    y_f: float = 0.0
    w_rt: float = 0.0
    alpha: float = 0.0
    sigma: float = 0.0
    G: float = 0.0
    x_RotOrg: float = 0.0
    y_RotOrg: float = 0.0
    x_Rot: float = 0.0
    y_Rot: float = 0.0
    w_trn: float = 0.0
    alpha_trn: float = 0.0


def origin_transfer(dx: float, dy: float, delta: float) -> tuple[float, float]:
    """Rotate a robot-frame displacement by ``delta`` into the world frame."""
    c, s = math.cos(delta), math.sin(delta)
    return dx * c - dy * s, dx * s + dy * c


def forward_component(
    speeds: WheelSpeeds, pose: Pose, geom: RobotGeometry, cfg: StepConfig
) -> MotionDecomposition:
    w_l, w_r = speeds.w_l, speeds.w_r
    if w_l * w_r < 0.0:
        raise ValueError("forward_component needs same-signed wheel speeds; use opposite_step")
    w_f = _sign(w_l if w_l != 0.0 else w_r) * min(abs(w_l), abs(w_r))
    V_f = w_f * geom.r
    return MotionDecomposition(
        w_f=w_f,
        V_f=V_f,
        x_f=-math.sin(pose.delta) * V_f * cfg.t_s,
        y_f=math.cos(pose.delta) * V_f * cfg.t_s,
    )


def _pivot(
    w_rt: float, on_right: bool, delta: float, geom: RobotGeometry, cfg: StepConfig
) -> MotionDecomposition:
    """Rotation produced by one wheel spinning at ``w_rt`` while the other holds.

    The geometry is evaluated for the canonical case (right wheel forward,
    left turn) and then mirrored for the left wheel and point-reflected for a
    backward-spinning wheel.
    """
    a, b = geom.a, geom.b
    gamma = geom.gamma
    mag = abs(w_rt) * (geom.r / a) * cfg.t_s
    sigma = gamma + mag
    # law of cosines on (a/2, c, sigma) with c*cos(gamma) = a/2 and
    # c*sin(gamma) = b/2 substituted; exact b/2 at mag = 0
    h = math.sin(0.5 * mag)
    G = math.sqrt((0.5 * b) * (0.5 * b) + a * a * h * h + 0.5 * a * b * math.sin(mag))
    lateral = G * math.sin(mag)
    x_org, y_org, alpha = -lateral, G * math.cos(mag) - 0.5 * b, mag
    if not on_right:
        x_org, alpha = -x_org, -alpha
    if w_rt < 0.0:
        x_org, y_org, alpha = -x_org, -y_org, -alpha
    x_rot, y_rot = origin_transfer(x_org, y_org, delta)
    return MotionDecomposition(
        w_rt=w_rt, alpha=alpha, sigma=sigma, G=G,
        x_RotOrg=x_org, y_RotOrg=y_org, x_Rot=x_rot, y_Rot=y_rot,
    )


def rotation_about_wheel(
    speeds: WheelSpeeds, pose: Pose, geom: RobotGeometry, cfg: StepConfig
) -> MotionDecomposition:
    """Pivot part of the same-direction scenario.

    ``w_rt`` is the magnitude gap between the wheels; the faster wheel swings
    around the slower one.  With both wheels reversing the motion is the
    point reflection of the forward case.
    """
    w_l, w_r = speeds.w_l, speeds.w_r
    lo, hi = sorted((abs(w_l), abs(w_r)))
    w_rt = hi - lo
    backward = w_l < 0.0 or w_r < 0.0
    return _pivot(-w_rt if backward else w_rt, abs(w_r) > abs(w_l), pose.delta, geom, cfg)


def same_direction_step(
    pose: Pose, speeds: WheelSpeeds, geom: RobotGeometry, cfg: StepConfig
) -> Pose:
    if not speeds.same_direction:
        raise ValueError("same_direction_step got opposite-signed wheel speeds")
    fwd = forward_component(speeds, pose, geom, cfg)
    rot = rotation_about_wheel(speeds, pose, geom, cfg)
    return Pose(
        fwd.x_f + rot.x_Rot + pose.x,
        fwd.y_f + rot.y_Rot + pose.y,
        pose.delta + rot.alpha,
    )


def opposite_decomposition(
    speeds: WheelSpeeds, pose: Pose, geom: RobotGeometry, cfg: StepConfig
) -> MotionDecomposition:
    w_l, w_r = speeds.w_l, speeds.w_r
    if w_l * w_r >= 0.0:
        raise ValueError("opposite_step needs opposite-signed wheel speeds")
    # residual rides on the forward-spinning wheel, pivoting about the other
    rot = _pivot(w_r + w_l, w_r > 0.0, pose.delta, geom, cfg)
    rot.w_trn = -_sign(w_r) * min(w_r, w_l)
    rot.alpha_trn = (2.0 * geom.r / geom.a) * rot.w_trn * cfg.t_s
    return rot


def opposite_step(
    pose: Pose, speeds: WheelSpeeds, geom: RobotGeometry, cfg: StepConfig
) -> Pose:
    rot = opposite_decomposition(speeds, pose, geom, cfg)
    return Pose(rot.x_Rot + pose.x, rot.y_Rot + pose.y, rot.alpha + rot.alpha_trn + pose.delta)


def step(pose: Pose, speeds: WheelSpeeds, geom: RobotGeometry, cfg: StepConfig) -> Pose:
    """Advance one sampling period; dispatches on the sign pattern of the wheels."""
    x, y, d = kernels.step_pose(
        pose.x, pose.y, pose.delta, speeds.w_l, speeds.w_r,
        geom.a, geom.b, geom.r, cfg.t_s,
    )
    return Pose(x, y, d)


def exact_unicycle_step(
    pose: Pose,
    speeds: WheelSpeeds,
    geom: RobotGeometry,
    cfg: StepConfig,
    offset: float = 0.0,
) -> Pose:
    """Closed-form rigid-body motion over one period at constant wheel speeds.

    The axle midpoint follows the unicycle ``v = r(w_l+w_r)/2``,
    ``omega = r(w_r-w_l)/a`` exactly (a circular arc about the instantaneous
    centre of curvature).  The returned position is that of the body point
    ``offset`` metres ahead of the axle; ``offset=geom.b / 2`` is the point the
    discrete model tracks.
    """
    v = geom.r * (speeds.w_l + speeds.w_r) / 2.0
    omega = geom.r * (speeds.w_r - speeds.w_l) / geom.a
    d0 = pose.delta
    ax = pose.x + offset * math.sin(d0)
    ay = pose.y - offset * math.cos(d0)
    if omega == 0.0:
        d1 = d0
        ax += -math.sin(d0) * v * cfg.t_s
        ay += math.cos(d0) * v * cfg.t_s
    else:
        d1 = d0 + omega * cfg.t_s
        radius = v / omega
        ax += radius * (math.cos(d1) - math.cos(d0))
        ay += radius * (math.sin(d1) - math.sin(d0))
    if offset != 0.0:
        ax -= offset * math.sin(d1)
        ay += offset * math.cos(d1)
    return Pose(ax, ay, d1)
