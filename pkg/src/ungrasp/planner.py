"""Optimal sampling-based search over primitive steps (RRT* style).

Tree edges are single primitive steps; an edge is accepted when ten
sub-pieces along it are secure and collision free.  Node cost counts contact
mode switch-overs between consecutive primitives, with accumulated metric
length as the tie-break.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import ConfigurationInfeasibleError, InvalidStartError
from .mechanics import STATIC, secure
from .primitives import (
    A_AT_TIP, A_ON_FACE, Primitive, PrimitiveLabel, StepSizes, along, apply_primitive,
    candidates, contact_modes, labels_for, metric, on_face_curve,
)

EDGE_PIECES = 10
SAME = 1e-9
CONNECT_RETRIES = 5
_WEIGHTS = np.array([1 / 90.0, 1 / 90.0, 1.0])


@dataclass(eq=False)
class TreeNode:
    id: int
    q: geo.Configuration
    parent: "TreeNode" = None
    label: PrimitiveLabel = None  # primitive used to reach q
    step: float = 0.0
    cost: int = 0
    length: float = 0.0
    children: list = field(default_factory=list)

    @property
    def key(self):
        return (self.cost, self.length)

    def path(self):
        out, node = [], self
        while node is not None:
            out.append(node)
            node = node.parent
        return out[::-1]


@dataclass(frozen=True)
class GoalRegion:
    q_goal: geo.Configuration
    tolerances: tuple = (2.0, 2.0, 0.02)

    def contains(self, q):
        g, (et, ep, ed) = self.q_goal, self.tolerances
        return (abs(q.theta - g.theta) <= et + SAME and abs(q.psi - g.psi) <= ep + SAME
                and abs(q.delta - g.delta) <= ed + SAME)


@dataclass(frozen=True)
class PlannerParams:
    """Search settings.

    ``rewire_radius`` defaults to three psi steps in metric units.
    ``extend`` is the largest number of consecutive steps along one
    primitive added per sample; 1 adds a single step per iteration.
    ``both_directions=False`` restricts primitives to the directions used
    when lowering an object: psi up, theta down, delta_A down.
    ``connect_every`` sets how often a goal connection is attempted (0 never),
    ``connect_segments`` and ``connect_budget`` bound each attempt by primitive
    runs and by lattice points visited.
    ``root_fan`` seeds the tree with every single-primitive run out of the
    start; these states all cost nothing, so goal connection tries them first.
    """

    iterations: int = 1000
    seed: int = 0
    steps: StepSizes = StepSizes()
    rewire_radius: float = None
    goal_bias: float = 0.05
    extend: int = 60
    both_directions: bool = True
    delta_range: tuple = (0.1, 1.0)
    connect_every: int = 5
    connect_segments: int = 3
    connect_budget: int = 4000
    root_fan: bool = True

    @property
    def radius(self):
        if self.rewire_radius is not None:
            return self.rewire_radius
        return 3 * self.steps.psi / 90.0 + SAME


@dataclass
class PlanPath:
    waypoints: list
    segment_labels: list
    total_cost: int
    iterations_used: int
    length: float = 0.0
    tree: "Tree" = field(default=None, repr=False, compare=False)

    def segments(self):
        """Runs of consecutive equal labels as (label, first index, last index)."""
        out = []
        for i, lab in enumerate(self.segment_labels):
            if out and out[-1][0] == lab:
                out[-1][2] = i + 1
            else:
                out.append([lab, i, i + 1])
        return [tuple(s) for s in out]

    def primitives(self):
        return [s[0] for s in self.segments()]


@dataclass
class PlanFailure:
    """Returned when no node reached the goal region."""

    tree: "Tree"
    nearest: TreeNode
    nearest_distance: float
    iterations_used: int
    reason: str

    def __bool__(self):
        return False


def edge_cost(parent_label, label):
    """Number of contacts whose mode (including slip sign) differs."""
    if parent_label is None:
        return 0
    m1, m2 = parent_label.modes, label.modes
    return int(m1.g != m2.g) + int(m1.a != m2.a) + int(m1.b != m2.b)


def connecting_label(scene, a, b):
    """(label, step) of the single primitive step from a to b, or None."""
    dt, dp, dd = b.theta - a.theta, b.psi - a.psi, b.delta - a.delta
    moved = [abs(dt) > SAME, abs(dp) > SAME, abs(dd) > SAME]
    sign = lambda x: 1 if x > 0 else -1
    curved = scene.obj.kind == geo.SEMI_ELLIPTICAL
    if moved == [True, False, False]:
        return PrimitiveLabel(Primitive.RG_RA_RB, sign(dt)), abs(dt)
    if moved == [False, False, True]:
        return PrimitiveLabel(Primitive.RG_SA_SB, sign(dd)), abs(dd)
    if moved == [False, True, False]:
        return PrimitiveLabel(Primitive.RG_RA_SB, sign(dp), A_AT_TIP if curved else None), abs(dp)
    if moved == [False, True, True] and curved and on_face_curve(scene, a) and on_face_curve(scene, b):
        return PrimitiveLabel(Primitive.RG_RA_SB, sign(dp), A_ON_FACE), abs(dp)
    return None


class EdgeChecker:
    """free_edge with per-run memoization of sub-sample verdicts."""

    def __init__(self, scene):
        self.scene = scene
        self.points = {}
        self.edges = {}

    def point_ok(self, q, label):
        key = (round(q.theta, 7), round(q.psi, 7), round(q.delta, 9), label)
        hit = self.points.get(key)
        if hit is None:
            hit = point_free(self.scene, q, label)
            self.points[key] = hit
        return hit

    def __call__(self, q_a, q_b, label):
        key = (_key(q_a), _key(q_b), label)
        hit = self.edges.get(key)
        if hit is None:
            hit = free_edge(self.scene, q_a, q_b, label, self.point_ok)
            self.edges[key] = hit
        return hit


def point_free(scene, q, label):
    try:
        if label is None:
            modes = STATIC
        else:
            modes = contact_modes(scene, q, label)
        return secure(scene, q, modes) and not geo.collides(scene, q)
    except ConfigurationInfeasibleError:
        return False


def free_edge(scene, q_a, q_b, label, point_ok=None):
    """True iff 11 evenly spaced samples on the step are secure and collision free."""
    if point_ok is None:
        point_ok = lambda q, lab: point_free(scene, q, lab)
    step = abs(getattr(q_b, _coord(label)) - getattr(q_a, _coord(label)))
    if step <= SAME:
        return point_ok(q_a, label)
    for i in range(EDGE_PIECES + 1):
        q = q_b if i == EDGE_PIECES else along(scene, q_a, label, i / EDGE_PIECES, step)
        if not point_ok(q, label):
            return False
    return True


def _coord(label):
    return "psi" if label.variant == A_ON_FACE else label.coordinate


def _key(q):
    return (round(q.theta, 6), round(q.psi, 6), round(q.delta, 8))


class Tree:
    """Tree of (configuration, incoming label) states.

    The same configuration may appear once per incoming label, since the
    cost of what follows depends on the primitive used to arrive.
    """

    def __init__(self, root_q):
        self.nodes = []
        self._coords = np.zeros((1024, 3))
        self.index = {}
        self.add(root_q)

    @property
    def root(self):
        return self.nodes[0]

    def __len__(self):
        return len(self.nodes)

    def get(self, q, label):
        return self.index.get((_key(q), label))

    def add(self, q, parent=None, label=None, step=0.0, cost=0, length=0.0):
        node = TreeNode(len(self.nodes), q, parent, label, step, cost, length)
        if parent is not None:
            parent.children.append(node)
        if len(self.nodes) == len(self._coords):
            self._coords = np.vstack([self._coords, np.zeros_like(self._coords)])
        self._coords[len(self.nodes)] = q.as_tuple()
        self.nodes.append(node)
        self.index[(_key(q), label)] = node
        return node

    def distances(self, q):
        d = (self._coords[:len(self.nodes)] - np.array(q.as_tuple())) * _WEIGHTS
        return np.sqrt(np.einsum("ij,ij->i", d, d))

    def near(self, q, radius):
        d = self.distances(q)
        return [self.nodes[i] for i in np.flatnonzero(d <= radius)]


def nearest(tree, q_samp):
    """Node closest to q_samp under the planner metric; earliest on ties."""
    return tree.nodes[int(np.argmin(tree.distances(q_samp)))]


def _is_ancestor(a, b):
    node = b
    while node is not None:
        if node is a:
            return True
        node = node.parent
    return False


def _subtree_ok(node, new_label, new_cost, new_length):
    """Would giving ``node`` this label and key leave every descendant no worse?"""
    shift = new_length - node.length
    stack = [(node, new_label, new_cost)]
    while stack:
        n, lab, cost = stack.pop()
        for child in n.children:
            c = cost + edge_cost(lab, child.label)
            if (c, child.length + shift) > child.key:
                return False
            stack.append((child, child.label, c))
    return True


def _reparent(tree, node, parent, label, step, cost, length):
    if label != node.label:
        del tree.index[(_key(node.q), node.label)]
        tree.index[(_key(node.q), label)] = node
    node.parent.children.remove(node)
    parent.children.append(node)
    shift = length - node.length
    node.parent, node.label, node.step, node.cost, node.length = parent, label, step, cost, length
    stack = [node]
    while stack:
        n = stack.pop()
        for child in n.children:
            child.cost = n.cost + edge_cost(n.label, child.label)
            child.length += shift
            stack.append(child)


def _allowed(label, params):
    if params is None or params.both_directions:
        return True
    want = {Primitive.RG_RA_SB: 1, Primitive.RG_RA_RB: -1, Primitive.RG_SA_SB: -1}
    return label.direction == want[label.primitive]


def _offer(tree, scene, node, target, check, params=None):
    """Reparent ``target`` through ``node`` if a single step joins them more cheaply."""
    if target is node or target is tree.root or _is_ancestor(target, node):
        return False
    link = connecting_label(scene, node.q, target.q)
    if link is None or not _allowed(link[0], params):
        return False
    label, step = link
    if label != target.label and tree.get(target.q, label) is not None:
        return False
    cost = node.cost + edge_cost(node.label, label)
    length = node.length + metric(node.q, target.q)
    if (cost, length) >= (target.cost, target.length - SAME):
        return False
    if not _subtree_ok(target, label, cost, length) or not check(node.q, target.q, label):
        return False
    _reparent(tree, target, node, label, step, cost, length)
    return True


def rewire(tree, node, radius, scene=None, check=None, params=None):
    """Reparent neighbours of ``node`` through it when that lowers their key.

    Returns the number of nodes reparented.
    """
    if scene is None or check is None:
        return 0
    count = 0
    for nb in tree.near(node.q, radius):
        if nb is not node.parent and _offer(tree, scene, node, nb, check, params):
            count += 1
    return count


def _best_parent(tree, scene, q, label, fallback, check, params):
    """Cheapest verified single step into (q, label) among nearby nodes."""
    best = fallback
    for nb in tree.near(q, params.radius):
        link = connecting_label(scene, nb.q, q)
        if link is None or link[0] != label:
            continue
        key = (nb.cost + edge_cost(nb.label, label), nb.length + metric(nb.q, q))
        if key >= best[0]:
            continue
        if check(nb.q, q, label):
            best = (key, nb, label, link[1])
    return best


def _insert(tree, scene, parent, q, label, step, check, params):
    """Add the state (q, label) reached from ``parent`` or improve the existing one.

    Returns the node for that state, or None when the edge is not free.
    """
    existing = tree.get(q, label)
    if existing is not None:
        _offer(tree, scene, parent, existing, check, params)
        return existing
    if not check(parent.q, q, label):
        return None
    fallback = ((parent.cost + edge_cost(parent.label, label),
                 parent.length + metric(parent.q, q)), parent, label, step)
    key, par, lab, st = _best_parent(tree, scene, q, label, fallback, check, params)
    new = tree.add(q, par, lab, st, key[0], key[1])
    rewire(tree, new, params.radius, scene, check, params)
    return new


def _axis(label):
    return "face" if label.variant == A_ON_FACE else label.coordinate


def goal_connect(scene, start, goal, point_ok, steps, bound=None, params=None,
                 max_segments=3, budget=4000, blocked=()):
    """Cheapest chain of at most ``max_segments`` primitive runs from ``start`` into the goal.

    Each run repeats one primitive step.  A run may stop anywhere only while
    there are more runs left than coordinates outside the goal window;
    otherwise it must bring one more coordinate into the window.  Only
    lattice points are tested here (``point_ok``), so callers verify the
    edges of the returned chain.  Returns (cost, length, [(label, count)])
    strictly better than ``bound`` or None.
    """
    g, tol = goal.q_goal.as_tuple(), goal.tolerances
    labels = [lab for lab in labels_for(scene) if _allowed(lab, params)]
    best = [bound if bound is not None else (math.inf, math.inf), None]
    walked = [0]

    def outside(q):
        v = q.as_tuple()
        return sum(abs(v[i] - g[i]) > tol[i] + SAME for i in range(3))

    def dfs(q, label, cost, length, seg, chain):
        n_out = outside(q)
        if n_out == 0:
            if (cost, length) < best[0]:
                best[0], best[1] = (cost, length), list(chain)
            return
        left = max_segments - seg
        if n_out > left:
            return
        free = left > n_out
        for lab in labels:
            if seg > 0 and _axis(lab) == _axis(label):
                continue
            if lab.variant == A_ON_FACE and not on_face_curve(scene, q):
                continue
            c = cost + edge_cost(label, lab)
            if c > best[0][0]:
                continue
            step = steps.for_label(lab)
            cur, run, n_prev = q, 0, n_out
            while walked[0] < budget:
                if (_key(cur), lab) in blocked:
                    break
                try:
                    nxt = apply_primitive(scene, cur, lab, step)
                except ConfigurationInfeasibleError:
                    break
                walked[0] += 1
                if not point_ok(nxt, lab):
                    break
                run += 1
                ln = length + metric(cur, nxt) if run == 1 else ln + metric(cur, nxt)
                if (c, ln) >= best[0]:
                    break
                n_now = outside(nxt)
                if not free and n_now > n_prev:
                    break
                if free or n_now < n_out:
                    chain.append((lab, run))
                    dfs(nxt, lab, c, ln, seg + 1, chain)
                    chain.pop()
                n_prev = n_now
                cur = nxt

    dfs(start.q, start.label, start.cost, start.length, 0, [])
    if best[1] is None:
        return None
    return best[0][0], best[0][1], best[1]


def ranked_steps(scene, q_nearest, q_samp, steps):
    """Feasible one-step successors ordered by metric distance to q_samp.

    The first entry is what ``steer`` returns; the planner walks down the
    list when an edge fails the free test.
    """
    cands = candidates(scene, q_nearest, steps)
    order = sorted(range(len(cands)), key=lambda i: (metric(cands[i][0], q_samp), i))
    return [cands[i] for i in order]


def validate_start(scene, q_init):
    if abs(q_init.psi) > SAME:
        raise InvalidStartError(f"start must be a pinch grasp with psi = 0, got {q_init}")
    if not geo.in_configuration_space(scene, q_init):
        raise InvalidStartError(f"start {q_init} is not in the configuration space")
    if not secure(scene, q_init, STATIC):
        raise InvalidStartError(f"start {q_init} is not a secure grasp")
    if geo.collides(scene, q_init):
        raise InvalidStartError(f"start {q_init} is in collision")


def _walk_chain(scene, node, chain, steps):
    """Unit steps (q_from, q_to, label, step) of a chain from goal_connect."""
    out, q = [], node.q
    for label, count in chain:
        step = steps.for_label(label)
        for _ in range(count):
            nxt = apply_primitive(scene, q, label, step)
            out.append((q, nxt, label, step))
            q = nxt
    return out


def plan(scene, q_init, goal, params=PlannerParams()):
    """Search for a minimum-switch path from q_init into the goal region.

    Each iteration samples a configuration (the goal with probability
    ``goal_bias``), steers from the nearest node and extends along the
    chosen primitive while that keeps approaching the sample, adding every
    step with choose-parent and rewiring.  Every ``connect_every``
    iterations the cheapest node not yet tried is also offered a direct
    connection of a few primitive runs into the goal region.

    Returns a PlanPath on success or a PlanFailure carrying the tree and the
    closest approach to the goal.
    """
    validate_start(scene, q_init)
    rng = np.random.default_rng(params.seed)
    check = EdgeChecker(scene)
    tree = Tree(q_init)
    theta_max = max(q_init.theta, goal.q_goal.theta)
    lo = np.array([0.0, 0.0, params.delta_range[0]])
    hi = np.array([theta_max, 90.0, params.delta_range[1]])
    steps = params.steps
    first_hit = 0 if goal.contains(q_init) else None
    queue = [(0, 0.0, 0)]
    tried = set()
    blocked = set()

    def best_goal():
        hits = [n for n in tree.nodes if goal.contains(n.q)]
        return min(hits, key=lambda n: (n.key, n.id)) if hits else None

    def note_hit(node, it):
        nonlocal first_hit
        if node is not None and first_hit is None and goal.contains(node.q):
            first_hit = it

    def connect(it):
        incumbent = best_goal()
        bound = incumbent.key if incumbent is not None else None
        while queue:
            cost, length, nid = heapq.heappop(queue)
            node = tree.nodes[nid]
            if nid in tried:
                continue
            if node.key != (cost, length):
                heapq.heappush(queue, (node.cost, node.length, nid))
                continue
            if bound is not None and node.cost > bound[0]:
                heapq.heappush(queue, (cost, length, nid))
                return
            tried.add(nid)
            if goal.contains(node.q):
                continue
            break
        else:
            return
        for _ in range(CONNECT_RETRIES):
            found = goal_connect(scene, node, goal, check.point_ok, steps, bound, params,
                                 params.connect_segments, params.connect_budget, blocked)
            if found is None:
                return
            edges = _walk_chain(scene, node, found[2], steps)
            bad = next((e for e in edges if not check(e[0], e[1], e[2])), None)
            if bad is None:
                break
            blocked.add((_key(bad[0]), bad[2]))
        else:
            return
        cur = node
        for q_a, q_b, label, step in edges:
            cur = _insert(tree, scene, cur, q_b, label, step, check, params)
            if cur is None:
                return
            push(cur)
            note_hit(cur, it)

    def push(node):
        heapq.heappush(queue, (node.cost, node.length, node.id))

    if params.root_fan:
        for label in labels_for(scene):
            if not _allowed(label, params):
                continue
            node, step = tree.root, steps.for_label(label)
            while True:
                try:
                    q_new = apply_primitive(scene, node.q, label, step)
                except ConfigurationInfeasibleError:
                    break
                new = _insert(tree, scene, node, q_new, label, step, check, params)
                if new is None:
                    break
                push(new)
                note_hit(new, 0)
                node = new

    for it in range(1, params.iterations + 1):
        if params.connect_every and it % params.connect_every == 1 % params.connect_every:
            connect(it)
        if rng.random() < params.goal_bias:
            q_samp = goal.q_goal
        else:
            q_samp = geo.Configuration(*rng.uniform(lo, hi))
        node = nearest(tree, q_samp)
        ranked = [c for c in ranked_steps(scene, node.q, q_samp, steps)
                  if _allowed(c[1], params)
                  and (tree.get(c[0], c[1]) is not None or check(node.q, c[0], c[1]))]
        if not ranked:
            continue
        q_new, label = ranked[0]
        step = steps.for_label(label)
        for k in range(params.extend):
            new = _insert(tree, scene, node, q_new, label, step, check, params)
            if new is None:
                break
            if new.id == len(tree) - 1:
                push(new)
            note_hit(new, it)
            if k + 1 == params.extend:
                break
            try:
                q_next = apply_primitive(scene, q_new, label, step)
            except ConfigurationInfeasibleError:
                break
            if metric(q_next, q_samp) >= metric(q_new, q_samp):
                break
            node, q_new = new, q_next

    best = best_goal()
    if best is None:
        d = tree.distances(goal.q_goal)
        i = int(np.argmin(d))
        return PlanFailure(tree, tree.nodes[i], float(d[i]), params.iterations,
                           "no tree node reached the goal region")
    chain = best.path()
    return PlanPath(
        waypoints=[n.q for n in chain],
        segment_labels=[n.label for n in chain[1:]],
        total_cost=best.cost,
        iterations_used=first_hit if first_hit is not None else params.iterations,
        length=best.length,
        tree=tree,
    )
