"""Time-parameterized gripper commands for a planned path.

Each path segment moves one coordinate at a constant rate; samples are
taken at a fixed rate and carry the gripper frame pose (thumb tip, yaw of
the thumb face), the opening and its rate.  A push-down rotation about the
thumb tip can finish the motion.
"""

import csv
import math
from dataclasses import dataclass

from . import geometry as geo
from .errors import ConfigurationInfeasibleError, PushDownRefused, TrajectoryInfeasibleError
from .primitives import A_ON_FACE, gripper_rate

RATE_HZ = 100.0
PUSH_DOWN = "PUSH_DOWN"
PUSH_DOWN_SPEED = 0.05  # rad/s
MAX_RESIDUAL = 5.0  # degrees
TIP_FRACTION = 0.05  # B may sit this fraction of the thumb length from its tip
CLEARANCE = 1.0  # mm between thumb tip and surface before pushing down
HEADER = ["t_s", "x_mm", "y_mm", "yaw_deg", "opening_mm", "tau_mm_s", "label"]


@dataclass(frozen=True)
class Speeds:
    """Coordinate rates: psi and theta in rad/s, delta_A per second."""

    psi_dot: float = 0.1
    theta_dot: float = 0.1
    delta_dot: float = 0.05

    def __post_init__(self):
        for name in ("psi_dot", "theta_dot", "delta_dot"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def rate(self, coordinate):
        """Rate in configuration units (degrees or delta_A) per second."""
        if coordinate == "delta":
            return self.delta_dot
        return math.degrees(self.psi_dot if coordinate == "psi" else self.theta_dot)


@dataclass(frozen=True)
class CommandSample:
    t: float
    gripper_pose: geo.Pose2D
    opening: float
    tau: float
    label: object  # PrimitiveLabel or PUSH_DOWN

    def row(self):
        p = self.gripper_pose
        return [repr(float(v)) for v in (self.t, p.x, p.y, p.yaw, self.opening, self.tau)] + [str(self.label)]


def _config(scene, q0, label, value):
    coord = label.coordinate
    if coord == "psi" and label.variant == A_ON_FACE:
        return q0.replace(psi=value, delta=geo.face_tangency_delta(scene.obj, value))
    return q0.replace(**{coord: value})


def _opening(scene, q, t):
    _, w = geo.xi_and_opening(scene, q)
    if w > scene.gripper.max_opening + geo.CONTACT_TOL:
        raise TrajectoryInfeasibleError(
            f"opening {w:.6g} mm exceeds max_opening at t = {t:.6g} s ({q})", t)
    return w


def _tau(scene, q, label, rate):
    """Opening rate (mm/s) while moving along ``label`` at ``rate`` units/s."""
    coord = label.coordinate
    if coord == "theta":
        return 0.0
    sign = label.direction
    if scene.obj.kind == geo.LINEAR:
        d_a = q.delta * scene.obj.length
        if coord == "psi":
            return gripper_rate(d_a, q.psi, sign * math.radians(rate), 0.0)
        return gripper_rate(d_a, q.psi, 0.0, sign * rate * scene.obj.length)
    h = 1e-6
    value = getattr(q, coord)
    lo, hi = _config(scene, q, label, value - h), _config(scene, q, label, value + h)
    return sign * rate * (geo.xi_and_opening(scene, hi)[1] - geo.xi_and_opening(scene, lo)[1]) / (2 * h)


def _sample(scene, q, label, rate, t):
    w = _opening(scene, q, t)
    try:
        poses = geo.forward_kinematics(scene, q)
    except ConfigurationInfeasibleError as exc:
        raise TrajectoryInfeasibleError(f"{exc} at t = {t:.6g} s", t) from exc
    tau = 0.0 if label is None else _tau(scene, q, label, rate)
    return CommandSample(t, poses.gripper_pose, w, tau, label)


def synthesize(scene, path, speeds=Speeds(), rate_hz=RATE_HZ):
    """Command samples along every segment of ``path``.

    Samples fall on the global 1/rate_hz grid, plus one at each segment end
    so segment boundaries are reproduced exactly.
    """
    if path is None or len(path.waypoints) == 0:
        return []
    dt = 1.0 / rate_hz
    out = []
    t0 = 0.0
    first = path.waypoints[0]
    out.append(_sample(scene, first, None, 0.0, 0.0))
    for label, i0, i1 in path.segments():
        q0, q1 = path.waypoints[i0], path.waypoints[i1]
        coord = label.coordinate
        c0, c1 = getattr(q0, coord), getattr(q1, coord)
        rate = speeds.rate(coord)
        duration = abs(c1 - c0) / rate
        k = math.floor(t0 * rate_hz + 1e-9) + 1
        while k * dt < t0 + duration - 1e-9:
            t = k * dt
            value = c0 + label.direction * rate * (t - t0)
            out.append(_sample(scene, _config(scene, q0, label, value), label, rate, t))
            k += 1
        t0 += duration
        out.append(_sample(scene, q1, label, rate, t0))
    return out


def push_down(scene, q_final, theta_residual=None, speed=PUSH_DOWN_SPEED,
              clearance=CLEARANCE, t0=0.0, rate_hz=RATE_HZ):
    """Rotate the gripper about the thumb tip by -theta_residual, opening locked.

    Refuses (PushDownRefused) when the residual angle exceeds 5 degrees,
    when B is not at the thumb tip or when the thumb tip is closer to the
    surface than ``clearance``.
    """
    if theta_residual is None:
        theta_residual = q_final.theta
    if theta_residual < 0:
        raise ValueError(f"theta_residual must be >= 0, got {theta_residual}")
    if theta_residual > MAX_RESIDUAL:
        raise PushDownRefused(f"residual angle {theta_residual} exceeds {MAX_RESIDUAL} degrees")
    poses = geo.forward_kinematics(scene, q_final)
    if poses.xi_b > TIP_FRACTION * scene.gripper.thumb_length:
        raise PushDownRefused(f"B is {poses.xi_b:.6g} mm from the thumb tip; push-down needs it at the tip")
    start = poses.gripper_pose
    if theta_residual == 0:
        return [CommandSample(t0, start, poses.opening, 0.0, PUSH_DOWN)]
    if start.y < clearance - 1e-9:
        raise PushDownRefused(f"thumb tip {start.y:.6g} mm above the surface, need {clearance}")
    duration = math.radians(theta_residual) / speed
    n = max(1, math.ceil(duration * rate_hz - 1e-9))
    out = []
    for k in range(n + 1):
        s = min(k / rate_hz, duration)
        yaw = start.yaw - math.degrees(speed * s)
        out.append(CommandSample(t0 + s, geo.Pose2D(start.x, start.y, yaw), poses.opening, 0.0, PUSH_DOWN))
    return out


def frame_point(pose, local):
    """World position of a point given in the gripper frame."""
    c, s = math.cos(math.radians(pose.yaw)), math.sin(math.radians(pose.yaw))
    x, y = local
    return pose.x + c * x - s * y, pose.y + s * x + c * y


def build(scene, path, speeds=Speeds(), finish=True, rate_hz=RATE_HZ):
    """Segment samples followed by the push-down, when the final state allows it."""
    samples = synthesize(scene, path, speeds, rate_hz)
    if finish and samples:
        tail = push_down(scene, path.waypoints[-1], t0=samples[-1].t, rate_hz=rate_hz)
        samples.extend(tail[1:])
    return samples


def write_csv(samples, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(HEADER)
    for s in samples:
        w.writerow(s.row())
