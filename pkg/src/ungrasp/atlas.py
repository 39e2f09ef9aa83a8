"""Grid sweeps that label configurations as free, in collision or insecure.

A cell is FREE when it is in the configuration space, the grasp is in
force closure under the chosen contact modes and nothing collides.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import ConfigurationInfeasibleError
from .mechanics import STATIC, ContactModeAssignment, secure
from .primitives import A_AT_TIP, A_ON_FACE, Primitive, PrimitiveLabel, contact_modes, on_face_curve

FREE = "FREE"
OBS = "OBS"
INSECURE = "INSECURE"
INVALID = "INVALID"

CONSERVATIVE = "conservative"
ROLLING = "rolling"

HEADER = ["theta_deg", "psi_deg", "delta_A", "in_C", "in_C_grasp", "in_C_obs", "label"]


@dataclass(frozen=True)
class AtlasCell:
    q: geo.Configuration
    in_C: bool
    in_C_grasp: bool
    in_C_obs: bool
    label: str

    def row(self):
        return [_fmt(self.q.theta), _fmt(self.q.psi), _fmt(self.q.delta),
                int(self.in_C), int(self.in_C_grasp), int(self.in_C_obs), self.label]


def _fmt(x):
    return repr(float(x))


def _axis(lo, hi, step):
    if not step > 0:
        raise ValueError(f"grid step must be positive, got {step}")
    if hi < lo:
        raise ValueError(f"empty grid axis [{lo}, {hi}]")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 10) for k in range(n + 1)]


@dataclass(frozen=True)
class Grid:
    """Axis ranges as (low, high, step), both ends included."""

    theta: tuple = (0.0, 40.0, 1.0)
    psi: tuple = (0.0, 90.0, 1.0)
    delta: tuple = (0.1, 1.0, 0.05)

    def axes(self):
        return _axis(*self.theta), _axis(*self.psi), _axis(*self.delta)

    def __len__(self):
        t, p, d = self.axes()
        return len(t) * len(p) * len(d)

    def points(self):
        t, p, d = self.axes()
        for th in t:
            for ps in p:
                for de in d:
                    yield geo.Configuration(th, ps, de)


def conservative_modes(scene, q):
    """(R, R, S) with B's slip sign from raising psi at q."""
    label = PrimitiveLabel(Primitive.RG_RA_SB, 1)
    if scene.obj.kind == geo.SEMI_ELLIPTICAL:
        variant = A_ON_FACE if on_face_curve(scene, q) else A_AT_TIP
        label = PrimitiveLabel(Primitive.RG_RA_SB, 1, variant)
    try:
        return contact_modes(scene, q, label)
    except ConfigurationInfeasibleError:
        return label.modes


def _modes(scene, q, policy):
    if policy == CONSERVATIVE:
        return conservative_modes(scene, q)
    if policy == ROLLING:
        return STATIC
    if isinstance(policy, ContactModeAssignment):
        return policy
    if isinstance(policy, str):
        policy = PrimitiveLabel.parse(policy)
    if isinstance(policy, PrimitiveLabel):
        try:
            return contact_modes(scene, q, policy)
        except ConfigurationInfeasibleError:
            return policy.modes
    raise ValueError(f"unknown mode policy {policy!r}")


def classify(scene, q, policy=CONSERVATIVE):
    """Label one configuration under a mode policy.

    ``policy`` is "conservative", "rolling", a PrimitiveLabel (or its text
    form) or an explicit ContactModeAssignment.  A cell in collision is
    labelled OBS even when the grasp is also insecure.
    """
    try:
        geo.check_bounds(q)
        poses = geo.forward_kinematics(scene, q)
    except ConfigurationInfeasibleError:
        return AtlasCell(q, False, False, False, INVALID)
    grasp = bool(secure(scene, q, _modes(scene, q, policy)))
    obs = bool(geo.collides(scene, q, poses))
    if obs:
        label = OBS
    elif not grasp:
        label = INSECURE
    else:
        label = FREE
    return AtlasCell(q, True, grasp, obs, label)


def _classify_slab(args):
    scene, theta, psis, deltas, policy = args
    return [classify(scene, geo.Configuration(theta, p, d), policy) for p in psis for d in deltas]


def sweep(scene, grid=Grid(), policy=CONSERVATIVE, workers=None):
    """Classify every grid point, in lexicographic (theta, psi, delta_A) order.

    With ``workers`` > 1 the theta slabs are spread over processes; the
    result is the same as the serial sweep.
    """
    thetas, psis, deltas = grid.axes()
    jobs = [(scene, th, psis, deltas, policy) for th in thetas]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            slabs = list(pool.map(_classify_slab, jobs))
    else:
        slabs = [_classify_slab(job) for job in jobs]
    return [cell for slab in slabs for cell in slab]


def counts(cells):
    out = {FREE: 0, OBS: 0, INSECURE: 0, INVALID: 0}
    for cell in cells:
        out[cell.label] += 1
    return out


def free_mask(cells):
    return np.array([c.label == FREE for c in cells], dtype=bool)


def write_csv(cells, stream):
    """Write the atlas table (header plus one row per cell) to a text stream."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(HEADER)
    for cell in cells:
        w.writerow(cell.row())


def read_csv(stream):
    """Parse a table written by write_csv; comment lines are skipped."""
    rows = [line for line in stream if line.strip() and not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    if header != HEADER:
        raise ValueError(f"unexpected atlas header {header}")
    out = []
    for r in reader:
        q = geo.Configuration(float(r[0]), float(r[1]), float(r[2]))
        out.append(AtlasCell(q, r[3] == "1", r[4] == "1", r[5] == "1", r[6]))
    return out
