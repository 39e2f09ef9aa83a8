"""Randomized primitive steps and the kinematic invariants they must satisfy."""

import math

import numpy as np

from ungrasp import geometry as geo
from ungrasp.errors import ConfigurationInfeasibleError
from ungrasp.primitives import (
    A_ON_FACE, Primitive, PrimitiveLabel, apply_primitive, gripper_rate, labels_for,
)

HELD = {"theta": ("psi", "delta"), "psi": ("theta", "delta"), "delta": ("theta", "psi")}
FD_STEP = 0.1  # degrees


def random_scene(rng):
    if rng.random() < 0.25:
        return geo.Scene(geo.ObjectShape(geo.SEMI_ELLIPTICAL, 23.0, 5.75),
                         geo.GripperSpec(40.0, 31.95, 0.0, 30.0, 8.05),
                         geo.EnvironmentSpec(geo.FLAT_SURFACE, 0.2, 0.3, 0.3),
                         geo.Configuration(30, 0, 0.5), geo.GoalSpec(0, "auto", 0.9))
    length = rng.uniform(50, 200)
    alpha = rng.uniform(0, 0.6)
    return geo.Scene(geo.ObjectShape(geo.LINEAR, length),
                     geo.GripperSpec(2 * length, 2 * length - alpha * length, 0.0, 2 * length,
                                     alpha * length),
                     geo.EnvironmentSpec(geo.FLAT_SURFACE, 0.2, 0.3, 0.3))


def random_start(scene, rng):
    th = rng.uniform(0, 60)
    if scene.obj.kind == geo.SEMI_ELLIPTICAL and rng.random() < 0.5:
        psi = rng.uniform(0, geo.face_tangency_psi(scene.obj, scene.tip_contact_delta))
        return geo.Configuration(th, psi, geo.face_tangency_delta(scene.obj, psi))
    return geo.Configuration(th, rng.uniform(0, 90), rng.uniform(0.05, 1.0))


def random_steps(n, seed=0):
    """Yield n feasible (scene, q, label, step, q_new) primitive steps."""
    rng = np.random.default_rng(seed)
    made = 0
    while made < n:
        scene = random_scene(rng)
        q = random_start(scene, rng)
        if not geo.in_configuration_space(scene, q):
            continue
        labels = labels_for(scene)
        label = labels[int(rng.integers(len(labels)))]
        step = rng.uniform(1e-3, 0.05) if label.coordinate == "delta" else rng.uniform(1e-2, 5.0)
        try:
            q_new = apply_primitive(scene, q, label, step)
        except ConfigurationInfeasibleError:
            continue
        made += 1
        yield scene, q, label, step, q_new


def held_ok(q, q_new, label, tol=1e-9):
    held = HELD[label.coordinate]
    if label.variant == A_ON_FACE:
        held = ("theta",)  # A's boundary coordinate rolls with psi
    return all(abs(getattr(q, c) - getattr(q_new, c)) <= tol for c in held)


def _body_coords(poses, point):
    """point in the object frame and in the gripper (thumb tip) frame."""
    def local(origin, yaw):
        c, s = math.cos(math.radians(yaw)), math.sin(math.radians(yaw))
        d = point - origin
        return np.array([c * d[0] + s * d[1], -s * d[0] + c * d[1]])
    g = poses.gripper_pose
    return local(poses.G, poses.object_pose.yaw), local(np.array([g.x, g.y]), g.yaw)


def fixture_drift(scene, q, q_new):
    """Largest slip (mm) of a contact across a step.

    G must stay put in the world; A and B must stay put on both the object
    and the gripper, since the whole assembly turns about G.
    """
    p0, p1 = geo.forward_kinematics(scene, q), geo.forward_kinematics(scene, q_new)
    drift = float(np.linalg.norm(p0.G - p1.G))
    for c in ("A", "B"):
        for a, b in zip(_body_coords(p0, getattr(p0, c)), _body_coords(p1, getattr(p1, c))):
            drift = max(drift, float(np.linalg.norm(a - b)))
    return drift


def reverse_error(scene, q, label, step, q_new):
    """Distance back to q after the opposite step, or None when undefined."""
    if abs(abs(getattr(q_new, label.coordinate) - getattr(q, label.coordinate)) - step) > 1e-9:
        return None  # clipped at the fingertip
    back = PrimitiveLabel(label.primitive, -label.direction, label.variant)
    try:
        q_back = apply_primitive(scene, q_new, back, step)
    except ConfigurationInfeasibleError:
        return None
    return max(abs(a - b) for a, b in zip(q.as_tuple(), q_back.as_tuple()))


def rate_error(scene, q, psi_dot=0.1):
    """Relative error of gripper_rate against a central difference of w along psi."""
    d_a = q.delta * scene.obj.length
    h = FD_STEP
    lo = max(q.psi - h, 0.0)
    hi = min(q.psi + h, 90.0)
    w = lambda psi: geo.xi_and_opening(scene, q.replace(psi=psi))[1]
    fd = (w(hi) - w(lo)) / math.radians(hi - lo) * psi_dot
    mid = 0.5 * (lo + hi)
    exact = gripper_rate(d_a, mid, psi_dot, 0.0)
    if exact == 0:
        return abs(fd)
    return abs(fd - exact) / abs(exact)


def run_suite(n=10000, seed=0):
    """Count violations of each invariant over n random steps."""
    out = {"steps": 0, "held": 0, "fixture": 0, "fixture_checked": 0, "reverse": 0,
           "reverse_checked": 0, "rate": 0, "rate_checked": 0, "max_drift": 0.0,
           "max_reverse": 0.0, "max_rate": 0.0}
    for scene, q, label, step, q_new in random_steps(n, seed):
        out["steps"] += 1
        out["held"] += not held_ok(q, q_new, label)
        if label.primitive is Primitive.RG_RA_RB:
            drift = fixture_drift(scene, q, q_new)
            out["fixture_checked"] += 1
            out["fixture"] += drift > 1e-6
            out["max_drift"] = max(out["max_drift"], drift)
        err = reverse_error(scene, q, label, step, q_new)
        if err is not None:
            out["reverse_checked"] += 1
            out["reverse"] += err > 1e-9
            out["max_reverse"] = max(out["max_reverse"], err)
        if label.primitive is Primitive.RG_RA_SB and scene.obj.kind == geo.LINEAR and 1 < q.psi < 89:
            r = rate_error(scene, q)
            out["rate_checked"] += 1
            out["rate"] += r > 1e-6
            out["max_rate"] = max(out["max_rate"], r)
    return out
