"""Contact-mode motion primitives and the gripper opening rate law.

Each primitive moves one coordinate of the configuration:

- RG_RA_SB rotates the gripper (psi) while B slides along the thumb,
- RG_RA_RB rotates the whole assembly about G (theta),
- RG_SA_SB slides both digits along the object (delta_A).

On a semi-elliptical object RG_RA_SB has two variants: ``A_on_face`` rolls
the finger face over the curved boundary, ``A_at_tip`` pivots the finger
about its tip with A fixed.
"""

import math
from dataclasses import dataclass
from enum import Enum

from . import geometry as geo
from .errors import BPastThumbTipError, ConfigurationInfeasibleError, OutOfRangeError, SteeringStuck
from .mechanics import ContactModeAssignment, Mode

on_face_curve = geo.on_face_curve


class Primitive(Enum):
    RG_RA_SB = "RG_RA_SB"
    RG_RA_RB = "RG_RA_RB"
    RG_SA_SB = "RG_SA_SB"

    @property
    def coordinate(self):
        return {"RG_RA_SB": "psi", "RG_RA_RB": "theta", "RG_SA_SB": "delta"}[self.value]


A_ON_FACE = "A_on_face"
A_AT_TIP = "A_at_tip"


@dataclass(frozen=True)
class PrimitiveLabel:
    primitive: Primitive
    direction: int
    variant: str = None

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {self.direction}")

    @property
    def coordinate(self):
        return self.primitive.coordinate

    @property
    def modes(self):
        """Nominal contact modes, with slip signs for a linear object."""
        d = self.direction
        if self.primitive is Primitive.RG_RA_RB:
            return ContactModeAssignment()
        if self.primitive is Primitive.RG_RA_SB:
            # raising psi pulls B towards the thumb tip
            return ContactModeAssignment(b=Mode.from_sign(d))
        return ContactModeAssignment(a=Mode.from_sign(d), b=Mode.from_sign(-d))

    def __str__(self):
        s = f"{self.primitive.value}({'+' if self.direction > 0 else '-'})"
        return s + (f"[{self.variant}]" if self.variant else "")

    @classmethod
    def parse(cls, text):
        """Inverse of ``str``."""
        text = text.strip()
        variant = None
        if text.endswith("]"):
            text, variant = text[:-1].split("[")
        name, sign = text[:-3], text[-2]
        return cls(Primitive(name), 1 if sign == "+" else -1, variant)


@dataclass(frozen=True)
class StepSizes:
    theta: float = 2.0
    psi: float = 2.0
    delta: float = 0.02

    def for_label(self, label):
        return getattr(self, label.coordinate)


def labels_for(scene):
    """Every (primitive, direction, variant) available on this object."""
    out = []
    for prim in Primitive:
        for d in (1, -1):
            if prim is Primitive.RG_RA_SB and scene.obj.kind == geo.SEMI_ELLIPTICAL:
                out.append(PrimitiveLabel(prim, d, A_ON_FACE))
                out.append(PrimitiveLabel(prim, d, A_AT_TIP))
            else:
                out.append(PrimitiveLabel(prim, d))
    return out


def _target(scene, q, label, step):
    v = q.as_tuple()
    d = label.direction * step
    if label.coordinate == "theta":
        return q.replace(theta=v[0] + d)
    if label.coordinate == "delta":
        return q.replace(delta=v[2] + d)
    psi = v[1] + d
    if label.variant == A_ON_FACE:
        if not on_face_curve(scene, q):
            raise ConfigurationInfeasibleError(f"finger face is not on the boundary at {q}")
        if not 0.0 <= psi <= 90.0:
            raise OutOfRangeError(f"psi {psi} outside [0, 90]")
        limit = scene.tip_contact_delta
        if limit is not None and d > 0:
            # rolling stops where A reaches the fingertip
            psi_tip = geo.face_tangency_psi(scene.obj, limit)
            if q.psi >= psi_tip - geo.ON_CURVE_TOL:
                raise ConfigurationInfeasibleError(f"A is already at the fingertip at {q}")
            if psi >= psi_tip:
                return q.replace(psi=psi_tip, delta=limit)
        return q.replace(psi=psi, delta=geo.face_tangency_delta(scene.obj, psi))
    return q.replace(psi=psi)


def apply_primitive(scene, q, label, step):
    """Advance ``q`` by ``step`` along the primitive's arc.

    Raises OutOfRangeError when the arc leaves the coordinate box,
    BPastThumbTipError when B would run off the thumb tip and
    ConfigurationInfeasibleError for any other broken contact.
    """
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    out = _target(scene, q, label, step)
    geo.check_bounds(out)
    xi, _ = geo.xi_and_opening(scene, out)
    if xi < -geo.CONTACT_TOL:
        raise BPastThumbTipError(f"B would pass the thumb tip at {out}")
    geo.forward_kinematics(scene, out)
    return out


def along(scene, q, label, fraction, step):
    """Point at ``fraction`` of a step along the arc, without feasibility checks."""
    if fraction == 0:
        return q
    return _target(scene, q, label, fraction * step)


def gripper_rate(d_a, psi, psi_dot, d_a_dot):
    """Time derivative of the opening d_A sin(psi).

    ``psi`` is in degrees, ``psi_dot`` in rad/s.
    """
    p = math.radians(psi)
    return d_a_dot * math.sin(p) + d_a * psi_dot * math.cos(p)


def contact_modes(scene, q, label, probe=1e-3):
    """Contact modes of ``label`` at ``q`` with slip signs from the kinematics.

    The sign at B follows the change of xi_B, the sign at A the motion of
    the contact along the object; both come from a short secant along the
    arc, falling back to the nominal signs when the motion is too small.
    """
    nominal = label.modes
    if label.primitive is Primitive.RG_RA_RB:
        return nominal
    try:
        q2 = _target(scene, q, label, probe)
        geo.check_bounds(q2)
    except ConfigurationInfeasibleError:
        q2 = None
    if q2 is None:
        back = PrimitiveLabel(label.primitive, -label.direction, label.variant)
        q1, q2 = _target(scene, q, back, probe), q
    else:
        q1 = q
    xi1, _ = geo.xi_and_opening(scene, q1)
    xi2, _ = geo.xi_and_opening(scene, q2)
    dxi = xi2 - xi1
    b = Mode.from_sign(-dxi) if abs(dxi) > 1e-12 else nominal.b
    if label.primitive is Primitive.RG_RA_SB:
        return ContactModeAssignment(b=b)
    ddelta = q2.delta - q1.delta  # A moves towards B as delta_A shrinks
    a = Mode.from_sign(ddelta) if ddelta != 0 else nominal.a
    return ContactModeAssignment(a=a, b=b)


def metric(p, q):
    """Weighted distance used by steering and nearest-neighbour search."""
    return math.sqrt(((p.theta - q.theta) / 90.0) ** 2
                     + ((p.psi - q.psi) / 90.0) ** 2
                     + (p.delta - q.delta) ** 2)


def candidates(scene, q, steps):
    """All feasible one-step successors of ``q`` as (q_new, label) pairs."""
    out = []
    for label in labels_for(scene):
        if label.variant == A_ON_FACE and not on_face_curve(scene, q):
            continue
        try:
            out.append((apply_primitive(scene, q, label, steps.for_label(label)), label))
        except ConfigurationInfeasibleError:
            continue
    return out


def steer(scene, q_nearest, q_samp, steps=StepSizes()):
    """One primitive step from ``q_nearest`` that best approaches ``q_samp``."""
    best = None
    for q_new, label in candidates(scene, q_nearest, steps):
        d = metric(q_new, q_samp)
        if best is None or d < best[0]:
            best = (d, q_new, label)
    if best is None:
        raise SteeringStuck(f"no feasible primitive step from {q_nearest}")
    return best[1], best[2]
