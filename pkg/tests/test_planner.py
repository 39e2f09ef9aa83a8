import pytest

from conftest import load, slow
from lattice_oracle import lattice_optimum, runs
from ungrasp import atlas
from ungrasp import geometry as geo
from ungrasp.cli import resolve_goal
from ungrasp.errors import InvalidStartError
from ungrasp.planner import (
    GoalRegion, PlannerParams, PlanPath, Tree, edge_cost, free_edge, nearest, plan, point_free,
    rewire,
)
from ungrasp.primitives import Primitive, PrimitiveLabel, apply_primitive, metric

RS = PrimitiveLabel(Primitive.RG_RA_SB, 1)
RR = PrimitiveLabel(Primitive.RG_RA_RB, -1)
SA = PrimitiveLabel(Primitive.RG_SA_SB, -1)
C = geo.Configuration


@pytest.fixture(scope="module")
def asymmetric():
    s = load("asymmetric")
    return s, plan(s, s.start, GoalRegion(resolve_goal(s)), PlannerParams(seed=0))


def test_edge_cost_examples():
    assert edge_cost(RS, RR) == 1
    assert edge_cost(RS, RS) == 0
    assert edge_cost(SA, RR) == 2
    assert edge_cost(None, SA) == 0
    assert edge_cost(RS, PrimitiveLabel(Primitive.RG_RA_SB, -1)) == 1


def test_nearest_examples():
    t = Tree(C(0, 0, 0.5))
    assert nearest(t, C(30, 30, 0.1)) is t.root
    t.add(C(30, 0, 0.5))
    assert nearest(t, C(25, 0, 0.5)).q == C(30, 0, 0.5)
    t = Tree(C(10, 0, 0.5))
    t.add(C(20, 0, 0.5))
    assert nearest(t, C(15, 0, 0.5)) is t.root


def test_free_edge_zero_length():
    s = load("asymmetric")
    assert free_edge(s, C(30, 0, 0.8), C(30, 0, 0.8), RS)


def test_free_edge_midpoint_collision():
    s = load("asymmetric")
    a, b = C(8, 24, 0.8), C(8, 28, 0.8)
    assert point_free(s, a, RS) and point_free(s, b, RS)
    assert geo.collides(s, C(8, 26, 0.8))
    assert not free_edge(s, a, b, RS)


def test_free_edge_thumb_through_surface_symmetric():
    s = load("symmetric")
    assert not free_edge(s, C(2, 86, 0.3), C(2, 88, 0.3), RS)


def test_free_edge_leaves_closure():
    s = load("asymmetric")
    a, b = C(4, 34, 0.62), C(4, 36, 0.62)
    assert point_free(s, a, RS)
    assert atlas.classify(s, b, RS).label == atlas.INSECURE
    assert not free_edge(s, a, b, RS)


def always(ok):
    return lambda q_a, q_b, label: ok


def two_route_tree():
    t = Tree(C(30, 0, 0.6))
    far = t.add(C(30, 4, 0.6), t.root, RS, 4.0, 0, 1.0)  # same cost, long way round
    near = t.add(C(30, 2, 0.6), t.root, RS, 2.0, 0, metric(C(30, 0, 0.6), C(30, 2, 0.6)))
    return t, far, near


def test_rewire_no_neighbours():
    s = load("asymmetric")
    t = Tree(C(30, 0, 0.6))
    node = t.add(C(30, 2, 0.6), t.root, RS, 2.0)
    assert rewire(t, node, 1e-6, s, always(True)) == 0


def test_rewire_shorter_route():
    s = load("asymmetric")
    t, far, near = two_route_tree()
    assert rewire(t, near, 0.1, s, always(True)) == 1
    assert far.parent is near and far.cost == 0
    assert far.length == pytest.approx(metric(C(30, 0, 0.6), C(30, 4, 0.6)))


def test_rewire_blocked_by_free_edge():
    s = load("asymmetric")
    t, far, near = two_route_tree()
    poses = geo.forward_kinematics(s, C(30, 3, 0.6))
    x, y = poses.finger_tip - 20 * (poses.finger_tip - poses.finger_hull[1]) / 150
    box = ((x - 0.2, y - 0.2), (x + 0.2, y - 0.2), (x + 0.2, y + 0.2), (x - 0.2, y + 0.2))
    blocked = geo.Scene(s.obj, s.gripper, geo.EnvironmentSpec(
        geo.FLAT_SURFACE, 0.2, 0.3, 0.3, (box,)))
    assert not free_edge(blocked, near.q, far.q, RS)
    check = lambda a, b, label: free_edge(blocked, a, b, label)
    assert rewire(t, near, 0.1, blocked, check) == 0
    assert far.parent is t.root


def test_invalid_start():
    s = load("asymmetric")
    goal = GoalRegion(resolve_goal(s))
    with pytest.raises(InvalidStartError):
        plan(s, C(30, 10, 0.8), goal)
    with pytest.raises(InvalidStartError):
        plan(s, C(30, 0, 0.3), goal)  # B past the thumb tip


def test_asymmetric_plan(asymmetric):
    s, path = asymmetric
    assert isinstance(path, PlanPath)
    assert path.total_cost == 2
    assert [l.primitive for l in path.primitives()] == [
        Primitive.RG_SA_SB, Primitive.RG_RA_SB, Primitive.RG_RA_RB]


def test_path_invariants(asymmetric):
    s, path = asymmetric
    held = {"theta": ("psi", "delta"), "psi": ("theta", "delta"), "delta": ("theta", "psi")}
    for a, b, label in zip(path.waypoints, path.waypoints[1:], path.segment_labels):
        for c in held[label.coordinate]:
            assert getattr(a, c) == pytest.approx(getattr(b, c), abs=1e-9)
    recomputed = sum(edge_cost(a, b) for a, b in zip([None] + path.segment_labels, path.segment_labels))
    assert recomputed == path.total_cost
    assert GoalRegion(resolve_goal(s)).contains(path.waypoints[-1])


def test_tree_invariants(asymmetric):
    s, path = asymmetric
    tree = path.tree
    for node in tree.nodes[1:]:
        replay = apply_primitive(s, node.parent.q, node.label, node.step)
        assert all(abs(a - b) <= 1e-9 for a, b in zip(replay.as_tuple(), node.q.as_tuple()))
        chain = node.path()
        labels = [n.label for n in chain[1:]]
        assert node.cost == sum(edge_cost(a, b) for a, b in zip([None] + labels, labels))
    # acyclic: every node reaches the root
    for node in tree.nodes:
        assert node.path()[0] is tree.root


def test_path_waypoints_free_in_atlas(asymmetric):
    s, path = asymmetric
    for q, label in zip(path.waypoints[1:], path.segment_labels):
        assert atlas.classify(s, q, label).label == atlas.FREE


def test_determinism():
    s = load("obstacle")
    goal = GoalRegion(resolve_goal(s))
    params = PlannerParams(iterations=60, seed=4)
    a, b = plan(s, s.start, goal, params), plan(s, s.start, goal, params)
    assert [n.q for n in a.tree.nodes] == [n.q for n in b.tree.nodes]
    assert [(n.parent and n.parent.id, n.label, n.cost, n.length) for n in a.tree.nodes] == \
        [(n.parent and n.parent.id, n.label, n.cost, n.length) for n in b.tree.nodes]


def test_anytime_monotone():
    s = load("obstacle")
    goal = GoalRegion(resolve_goal(s))
    costs = []
    for n in (40, 100, 250):
        r = plan(s, s.start, goal, PlannerParams(iterations=n, seed=2, root_fan=False))
        costs.append(r.total_cost if r else float("inf"))
    assert costs == sorted(costs, reverse=True)
    assert costs[0] > costs[-1]  # this seed does improve


def test_symmetric_failure():
    s = load("symmetric")
    r = plan(s, s.start, GoalRegion(resolve_goal(s)), PlannerParams(iterations=200))
    assert not r
    assert r.nearest_distance > 0
    assert r.nearest in r.tree.nodes
    assert r.nearest_distance == pytest.approx(metric(r.nearest.q, resolve_goal(s)))


# Exhaustive lattice Dijkstra (lattice_oracle.py) over theta in [0, 30] at the
# default steps, frozen from a run of about two and three minutes.
LATTICE_OPTIMA = {
    "asymmetric": (2, [("RG_SA_SB(-)", 9), ("RG_RA_SB(+)", 19), ("RG_RA_RB(-)", 14)]),
    "obstacle": (4, [("RG_RA_RB(-)", 3), ("RG_SA_SB(-)", 9), ("RG_RA_SB(+)", 19), ("RG_RA_RB(-)", 11)]),
}


def test_asymmetric_plan_reaches_lattice_optimum(asymmetric):
    _, path = asymmetric
    assert path.total_cost == LATTICE_OPTIMA["asymmetric"][0]


@slow
@pytest.mark.parametrize("name", sorted(LATTICE_OPTIMA))
def test_lattice_optima_frozen(name):
    s = load(name)
    cost, _, labels, _ = lattice_optimum(s, s.start, resolve_goal(s), box=(0, 30))
    assert (cost, [(str(l), n) for l, n in runs(labels)]) == LATTICE_OPTIMA[name]
