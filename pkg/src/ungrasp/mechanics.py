"""Unit contact wrenches and the force-closure test.

Wrenches are (f_x, f_y, tau) in the object frame, taken about the centre of
the flat bottom, with torque divided by the object length.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import geometry as geo
from .errors import ConfigurationInfeasibleError, InvalidModesError
from .simplex import feasible


class Mode(Enum):
    ROLLING = "R"
    SLIDING_POS = "S+"
    SLIDING_NEG = "S-"

    @property
    def sign(self):
        return {"R": 0, "S+": 1, "S-": -1}[self.value]

    @property
    def sliding(self):
        return self is not Mode.ROLLING

    @classmethod
    def from_sign(cls, s):
        if s > 0:
            return cls.SLIDING_POS
        if s < 0:
            return cls.SLIDING_NEG
        return cls.ROLLING


@dataclass(frozen=True)
class ContactModeAssignment:
    """Contact modes at G, A and B.

    A sliding sign is the direction of the object's motion relative to the
    other body along that contact's tangent: world +x at G, towards B along
    the object boundary at A, and towards the thumb tip at B.
    """

    g: Mode = Mode.ROLLING
    a: Mode = Mode.ROLLING
    b: Mode = Mode.ROLLING

    def validate(self):
        if self.g is not Mode.ROLLING:
            raise InvalidModesError(f"no primitive slides at G: {self}")
        if self.a.sliding and not self.b.sliding:
            raise InvalidModesError(f"no primitive slides at A while B rolls: {self}")

    def __str__(self):
        return f"({self.g.value},{self.a.value},{self.b.value})"


STATIC = ContactModeAssignment()


@dataclass(frozen=True, eq=False)
class WrenchSet:
    wrenches: np.ndarray  # shape (k, 3)
    tags: tuple

    def __len__(self):
        return len(self.tags)


def contact_frames(scene, q):
    """(point, inward normal, tangent) per contact in the object frame.

    A concave-corner G yields two entries, one per corner edge.
    """
    obj = scene.obj
    half = obj.length / 2.0
    th = math.radians(q.theta)
    ps = math.radians(q.psi)
    ct, st = math.cos(th), math.sin(th)
    floor_n, floor_t = (st, ct), (ct, -st)
    g_point = (-half, 0.0)
    if scene.environment.g_contact == geo.CONCAVE_CORNER:
        g_frames = [("G:floor", g_point, floor_n, floor_t),
                    ("G:wall", g_point, floor_t, (st, ct))]
    else:
        g_frames = [("G", g_point, floor_n, floor_t)]

    ax, ay = geo.boundary_point(obj, q.delta)
    nx, ny = geo.outward_normal(obj, q.delta)
    a_frame = ("A", (ax, ay), (-nx, -ny), (ny, -nx))
    b_frame = ("B", (half, 0.0), (-math.sin(ps), math.cos(ps)), (-math.cos(ps), -math.sin(ps)))
    return g_frames, a_frame, b_frame


def _edge(point, normal, tangent, k, length):
    fx = normal[0] + k * tangent[0]
    fy = normal[1] + k * tangent[1]
    norm = math.hypot(fx, fy)
    fx, fy = fx / norm, fy / norm
    return (fx, fy, (point[0] * fy - point[1] * fx) / length)


def unit_wrenches(scene, q, modes):
    """Cone-edge wrenches at G, A and B under the given contact modes."""
    modes.validate()
    if not geo.in_configuration_space(scene, q):
        raise ConfigurationInfeasibleError(f"{q} is not in the configuration space")
    env = scene.environment
    length = scene.obj.length
    g_frames, a_frame, b_frame = contact_frames(scene, q)
    lean = 1.0 if env.friction_edge == geo.WITH_SLIP else -1.0

    rows, tags = [], []

    def add(tag, w):
        for prior in rows[start:]:
            if max(abs(prior[i] - w[i]) for i in range(3)) < 1e-12:
                return
        rows.append(w)
        tags.append(tag)

    corner = env.g_contact == geo.CONCAVE_CORNER
    for tag, p, n, t in g_frames:
        start = len(rows)
        if corner and not env.corner_friction:
            add(tag, _edge(p, n, t, 0.0, length))
        elif corner or not modes.g.sliding:
            add(tag + "+", _edge(p, n, t, env.mu_g, length))
            add(tag + "-", _edge(p, n, t, -env.mu_g, length))
        else:
            add(tag + ":slide", _edge(p, n, t, lean * modes.g.sign * env.mu_g, length))

    for (tag, p, n, t), mode, mu in ((a_frame, modes.a, env.mu_a), (b_frame, modes.b, env.mu_b)):
        start = len(rows)
        if mode.sliding:
            add(tag + ":slide", _edge(p, n, t, lean * mode.sign * mu, length))
        else:
            add(tag + "+", _edge(p, n, t, mu, length))
            add(tag + "-", _edge(p, n, t, -mu, length))

    return WrenchSet(np.array(rows, dtype=float), tuple(tags))


def force_closure(ws):
    """True iff the wrenches positively span the planar wrench space.

    Requires rank 3 and a strictly positive combination summing to zero,
    found as W k = 0 with k >= 1 (substituting k = 1 + z, z >= 0).
    """
    W = np.asarray(ws.wrenches if isinstance(ws, WrenchSet) else ws, dtype=float)
    if W.ndim != 2 or W.shape[0] < 4:
        return False
    M = W.T
    if np.linalg.matrix_rank(M, tol=1e-9) < 3:
        return False
    return feasible(M, -M.sum(axis=1))


def secure(scene, q, modes):
    if not geo.in_configuration_space(scene, q):
        return False
    return force_closure(unit_wrenches(scene, q, modes))
