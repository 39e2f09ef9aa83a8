"""Scene model, forward kinematics and collision checks.

World frame: the target surface is the x-axis with the proximal contact G at
the origin and y pointing up.  The object frame has its origin at the centre
of the flat bottom with x pointing from G towards the distal vertex B.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BPastThumbTipError,
    ConfigurationInfeasibleError,
    InvalidGripperError,
    NoGoalError,
    OutOfRangeError,
)

LINEAR = "linear"
SEMI_ELLIPTICAL = "semi_elliptical"
FLAT_SURFACE = "flat_surface"
CONCAVE_CORNER = "concave_corner"
WITH_SLIP = "with_slip"
AGAINST_SLIP = "against_slip"

# lengths are millimetres
CONTACT_TOL = 1e-9
PENETRATION_TOL = 1e-6
ARC_SAMPLES = 24
ON_CURVE_TOL = 1e-9
_GAUSS = np.polynomial.legendre.leggauss(32)


@dataclass(frozen=True)
class ObjectShape:
    """Flat-bottomed object: a segment or a semi-ellipse on its flat side.

    ``thickness`` is the semi-minor axis of the ellipse (0 for a segment).
    """

    kind: str
    length: float
    thickness: float = 0.0

    def __post_init__(self):
        if self.kind not in (LINEAR, SEMI_ELLIPTICAL):
            raise ValueError(f"unknown object kind {self.kind!r}")
        if not self.length > 0:
            raise ValueError(f"object length must be positive, got {self.length}")
        if self.thickness < 0:
            raise ValueError(f"object thickness must be >= 0, got {self.thickness}")
        if self.kind == LINEAR and self.thickness != 0:
            raise ValueError("a linear object has zero thickness")
        if self.kind == SEMI_ELLIPTICAL and self.thickness == 0:
            raise ValueError("a semi-elliptical object needs a positive thickness")


@dataclass(frozen=True)
class GripperSpec:
    """Parallel finger and thumb with rectangular collision hulls.

    ``tip_offset`` is how far the finger tip protrudes past the thumb tip
    along the digit faces.
    """

    finger_length: float
    thumb_length: float
    digit_thickness: float
    max_opening: float
    tip_offset: float = 0.0

    def __post_init__(self):
        if self.tip_offset < 0:
            raise InvalidGripperError(
                f"tip_offset must be >= 0 (thumb longer than finger), got {self.tip_offset}")
        if self.thumb_length <= 0 or self.finger_length <= 0:
            raise InvalidGripperError("digit lengths must be positive")
        if self.finger_length < self.thumb_length:
            raise InvalidGripperError(
                f"finger_length {self.finger_length} is shorter than thumb_length {self.thumb_length}")
        if not self.max_opening > 0:
            raise InvalidGripperError(f"max_opening must be positive, got {self.max_opening}")
        if self.digit_thickness < 0:
            raise InvalidGripperError(
                f"digit_thickness must be >= 0, got {self.digit_thickness}")


@dataclass(frozen=True)
class EnvironmentSpec:
    """Target surface, friction and obstacles.

    ``friction_edge`` selects which friction-cone edge a sliding contact
    transmits: ``with_slip`` leans along the object's relative slip,
    ``against_slip`` is the Coulomb edge opposing it.  ``corner_friction``
    gives the two corner normals at a concave-corner G their own cones.
    """

    g_contact: str = FLAT_SURFACE
    mu_g: float = 0.0
    mu_a: float = 0.0
    mu_b: float = 0.0
    obstacles: tuple = ()
    friction_edge: str = WITH_SLIP
    corner_friction: bool = False

    def __post_init__(self):
        if self.g_contact not in (FLAT_SURFACE, CONCAVE_CORNER):
            raise ValueError(f"unknown g_contact {self.g_contact!r}")
        for name in ("mu_g", "mu_a", "mu_b"):
            value = getattr(self, name)
            if not value >= 0:
                raise ValueError(f"{name} must be >= 0, got {value}")
        if self.friction_edge not in (WITH_SLIP, AGAINST_SLIP):
            raise ValueError(f"unknown friction_edge {self.friction_edge!r}")
        polys = tuple(tuple((float(x), float(y)) for x, y in poly) for poly in self.obstacles)
        for poly in polys:
            check_convex_ccw(poly)
        object.__setattr__(self, "obstacles", polys)


@dataclass(frozen=True)
class Configuration:
    """Planner state: object angle, gripper angle (degrees) and delta_A."""

    theta: float
    psi: float
    delta: float

    def as_tuple(self):
        return (self.theta, self.psi, self.delta)

    def replace(self, **kw):
        values = dict(theta=self.theta, psi=self.psi, delta=self.delta)
        values.update(kw)
        return Configuration(**values)

    def __str__(self):
        return f"({self.theta:g}, {self.psi:g}, {self.delta:g})"


@dataclass(frozen=True)
class GoalSpec:
    """Goal as written in a scene file; ``psi`` may be the string "auto"."""

    theta: float
    psi: object
    delta: float


@dataclass(frozen=True)
class Scene:
    obj: ObjectShape
    gripper: GripperSpec
    environment: EnvironmentSpec = field(default_factory=EnvironmentSpec)
    start: Configuration = None
    goal: GoalSpec = None

    @property
    def alpha(self):
        return asymmetry(self.gripper, self.obj)

    @property
    def tip_contact_delta(self):
        """delta_A at which a finger rolling on a curved object reaches its tip.

        Taken from the goal, since A stays put once it is at the fingertip.
        """
        if self.obj.kind != SEMI_ELLIPTICAL or self.goal is None:
            return None
        return float(self.goal.delta)


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    yaw: float  # degrees


@dataclass(frozen=True, eq=False)
class BodyPoses:
    """World placement of every body at one configuration.

    The gripper frame sits at the thumb tip with x running along the thumb
    face towards the palm and y pointing across the gap to the finger.
    """

    object_pose: Pose2D
    gripper_pose: Pose2D
    opening: float
    G: np.ndarray
    A: np.ndarray
    B: np.ndarray
    xi_b: float
    finger_tip: np.ndarray
    thumb_tip: np.ndarray
    finger_hull: np.ndarray
    thumb_hull: np.ndarray
    object_outline: np.ndarray


def asymmetry(gripper, obj):
    """Finger-tip protrusion normalized by the object length."""
    if gripper.tip_offset < 0:
        raise InvalidGripperError(f"negative tip_offset {gripper.tip_offset}")
    return gripper.tip_offset / obj.length


def psi_goal(alpha, delta):
    """Gripper angle (degrees) that puts B exactly at the thumb tip at theta = 0."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if alpha > delta:
        raise NoGoalError(f"alpha {alpha} exceeds delta_A {delta}: B cannot reach the thumb tip")
    return math.degrees(math.acos(alpha / delta))


def check_bounds(q):
    if not 0.0 <= q.theta < 90.0:
        raise OutOfRangeError(f"theta {q.theta} outside [0, 90)")
    if not 0.0 <= q.psi <= 90.0:
        raise OutOfRangeError(f"psi {q.psi} outside [0, 90]")
    if not 0.0 < q.delta <= 1.0:
        raise OutOfRangeError(f"delta_A {q.delta} outside (0, 1]")


def boundary_point(obj, delta):
    """Object-frame point on the top boundary at coordinate delta_A.

    delta_A is the distance from B measured along the flat bottom, as a
    fraction of the length, so 0.5 is the apex of a semi-ellipse.
    """
    a = obj.length / 2.0
    x = a - delta * obj.length
    if obj.kind == LINEAR:
        return x, 0.0
    r = 1.0 - (x / a) ** 2
    return x, obj.thickness * math.sqrt(r) if r > 0 else 0.0


def outward_normal(obj, delta):
    """Unit outward normal of the top boundary (object frame)."""
    if obj.kind == LINEAR:
        return 0.0, 1.0
    a, b = obj.length / 2.0, obj.thickness
    x, y = boundary_point(obj, delta)
    nx, ny = x / (a * a), y / (b * b)
    norm = math.hypot(nx, ny)
    return nx / norm, ny / norm


def face_tangency_psi(obj, delta):
    """Smallest psi (degrees) at which the finger face clears the object at A.

    At exactly this angle the face is tangent to the boundary.  It is zero for
    flat objects and for contacts on the distal half of a semi-ellipse.
    """
    if obj.kind == LINEAR:
        return 0.0
    nx, ny = outward_normal(obj, delta)
    if nx >= 0:
        return 0.0
    return math.degrees(math.atan2(-nx, ny))


def face_tangency_delta(obj, psi):
    """delta_A of the point where a finger face at angle psi touches the ellipse."""
    if obj.kind == LINEAR:
        raise ValueError("face tangency is only defined for curved objects")
    a, b = obj.length / 2.0, obj.thickness
    s, c = math.sin(math.radians(psi)), math.cos(math.radians(psi))
    x = -a * a * s / math.sqrt(a * a * s * s + b * b * c * c)
    return 0.5 - x / obj.length


def arc_length(obj, d1, d2):
    """Boundary length (mm) between the points at delta_A = d1 and d2."""
    if obj.kind == LINEAR:
        return abs(d2 - d1) * obj.length
    a, b = obj.length / 2.0, obj.thickness
    t1, t2 = (math.acos(max(-1.0, min(1.0, boundary_point(obj, d)[0] / a))) for d in (d1, d2))
    nodes, weights = _GAUSS
    t = 0.5 * (t2 - t1) * nodes + 0.5 * (t1 + t2)
    speed = np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)
    return abs(0.5 * (t2 - t1) * float(weights @ speed))


def on_face_curve(scene, q):
    """True when the finger face rolls on the curved boundary at A.

    That needs the face tangent at A and A short of the fingertip.
    """
    if scene.obj.kind != SEMI_ELLIPTICAL or q.delta < 0.5 - ON_CURVE_TOL:
        return False
    limit = scene.tip_contact_delta
    if limit is not None and q.delta > limit + ON_CURVE_TOL:
        return False
    return abs(face_tangency_delta(scene.obj, q.psi) - q.delta) <= ON_CURVE_TOL


def face_offset(scene, q):
    """Distance (mm) from A to the fingertip along the finger face.

    While the finger rolls, the contact on the face moves by the boundary arc
    it covers, reaching the tip at ``tip_contact_delta``; elsewhere A is at
    the tip.
    """
    limit = scene.tip_contact_delta
    if limit is None or not on_face_curve(scene, q):
        return 0.0
    return arc_length(scene.obj, q.delta, limit)


def xi_and_opening(scene, q):
    """Distance from thumb tip to B along the thumb face, and the opening (mm)."""
    obj = scene.obj
    ax, ay = boundary_point(obj, q.delta)
    c, s = math.cos(math.radians(q.psi)), math.sin(math.radians(q.psi))
    dx = obj.length / 2.0 - ax
    xi = dx * c - ay * s + face_offset(scene, q) - scene.gripper.tip_offset
    w = dx * s + ay * c
    return xi, w


def goal_psi(scene, delta):
    """psi at which B sits on the thumb tip with the object flat.

    Closed form for both shapes: solve dx cos(psi) - y_A sin(psi) = tip_offset.
    """
    obj = scene.obj
    if obj.kind == LINEAR:
        return psi_goal(scene.alpha, delta)
    ax, ay = boundary_point(obj, delta)
    dx = obj.length / 2.0 - ax
    r = math.hypot(dx, ay)
    tip = scene.gripper.tip_offset
    if tip > r:
        raise NoGoalError(f"tip offset {tip} exceeds reach {r:.6g} at delta_A {delta}")
    psi = math.degrees(math.acos(tip / r) - math.atan2(ay, dx))
    if psi < face_tangency_psi(obj, delta) - 1e-9 or psi < 0:
        raise NoGoalError(f"no admissible goal angle at delta_A {delta}")
    return psi


def _rot(c, s, x, y):
    return c * x - s * y, s * x + c * y


def forward_kinematics(scene, q):
    """Place object, contacts and digits in the world frame."""
    check_bounds(q)
    obj, grip = scene.obj, scene.gripper
    length = obj.length
    if obj.kind == SEMI_ELLIPTICAL and q.psi < face_tangency_psi(obj, q.delta) - 1e-9:
        raise ConfigurationInfeasibleError(
            f"finger face would cut into the object at {q}")
    xi, w = xi_and_opening(scene, q)
    if xi < -CONTACT_TOL:
        raise BPastThumbTipError(f"B is {-xi:.6g} mm past the thumb tip at {q}")
    if xi > grip.thumb_length + CONTACT_TOL:
        raise ConfigurationInfeasibleError(f"B is beyond the thumb base at {q}")
    if w > grip.max_opening + CONTACT_TOL:
        raise ConfigurationInfeasibleError(
            f"opening {w:.6g} mm exceeds max_opening at {q}")
    if w < -CONTACT_TOL:
        raise ConfigurationInfeasibleError(f"negative opening at {q}")
    xi = max(xi, 0.0)

    ct, st = math.cos(math.radians(q.theta)), math.sin(math.radians(q.theta))
    cp, sp = math.cos(math.radians(q.psi)), math.sin(math.radians(q.psi))
    ox, oy = ct * length / 2.0, st * length / 2.0

    def world(x, y):
        rx, ry = _rot(ct, st, x, y)
        return np.array([ox + rx, oy + ry])

    ax, ay = boundary_point(obj, q.delta)
    G = np.zeros(2)
    A = world(ax, ay)
    B = np.array([ct * length, st * length])
    f = np.array(_rot(ct, st, -cp, -sp))   # along the faces towards the tips
    m = np.array(_rot(ct, st, sp, -cp))    # from finger face to thumb face
    T = B + xi * f
    F = A + face_offset(scene, q) * f
    h = grip.digit_thickness
    finger_back = F - grip.finger_length * f
    thumb_back = T - grip.thumb_length * f
    finger_hull = np.array([F, finger_back, finger_back - h * m, F - h * m])
    thumb_hull = np.array([T, T + h * m, thumb_back + h * m, thumb_back])

    if obj.kind == LINEAR:
        outline = np.array([G, B])
    else:
        phis = np.linspace(0.0, math.pi, ARC_SAMPLES)
        pts = [world(length / 2.0 * math.cos(p), obj.thickness * math.sin(p)) for p in phis]
        outline = np.array(pts)

    return BodyPoses(
        object_pose=Pose2D(ox, oy, q.theta),
        gripper_pose=Pose2D(float(T[0]), float(T[1]), q.theta + q.psi),
        opening=w,
        G=G, A=A, B=B, xi_b=xi,
        finger_tip=F, thumb_tip=T,
        finger_hull=finger_hull, thumb_hull=thumb_hull,
        object_outline=outline,
    )


def in_configuration_space(scene, q):
    try:
        forward_kinematics(scene, q)
    except ConfigurationInfeasibleError:
        return False
    return True


def check_convex_ccw(poly):
    """Raise ValueError unless poly is a convex, counter-clockwise polygon."""
    pts = np.asarray(poly, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("an obstacle needs at least three 2-D vertices")
    d = np.roll(pts, -1, axis=0) - pts
    cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    area = 0.5 * np.sum(pts[:, 0] * np.roll(pts, -1, axis=0)[:, 1]
                        - np.roll(pts, -1, axis=0)[:, 0] * pts[:, 1])
    if area <= 0:
        raise ValueError("obstacle polygon must be counter-clockwise with positive area")
    if np.any(cross < -1e-9):
        raise ValueError("obstacle polygon must be convex")


def _axes(poly):
    d = np.roll(poly, -1, axis=0) - poly
    lengths = np.hypot(d[:, 0], d[:, 1])
    keep = lengths > 1e-12
    if not np.any(keep):
        return np.eye(2)
    d = d[keep] / lengths[keep, None]
    return np.column_stack([-d[:, 1], d[:, 0]])


def polygons_overlap(p, q, tol=PENETRATION_TOL):
    """Separating-axis test for convex polygons (segments allowed).

    Returns True only when the push-out distance exceeds ``tol`` on every
    candidate axis, so touching shapes do not count.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    for axis in np.vstack([_axes(p), _axes(q)]):
        pp = p @ axis
        qq = q @ axis
        if min(pp.max() - qq.min(), qq.max() - pp.min()) <= tol:
            return False
    return True


def collides(scene, q, poses=None):
    """True if a digit enters the surface or an obstacle, or the object hits an obstacle."""
    if poses is None:
        poses = forward_kinematics(scene, q)
    hulls = (poses.finger_hull, poses.thumb_hull)
    for hull in hulls:
        if hull[:, 1].min() < -PENETRATION_TOL:
            return True
    for obstacle in scene.environment.obstacles:
        for body in (*hulls, poses.object_outline):
            if polygons_overlap(body, obstacle):
                return True
    return False
