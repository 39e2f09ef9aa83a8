"""Command-line front end and scene files.

Scene files are JSON documents:

    {
      "object": {"kind": "linear", "length_mm": 160, "thickness_mm": 0},
      "gripper": {"finger_length_mm": 150, "thumb_length_mm": 74.8,
                  "digit_thickness_mm": 0, "max_opening_mm": 140,
                  "tip_offset_mm": 75.2},
      "environment": {"g_contact": "flat_surface", "mu_G": 0.2, "mu_A": 0.3,
                      "mu_B": 0.3, "obstacles": [[[x, y], ...], ...]},
      "start": {"theta_deg": 30, "psi_deg": 0, "delta_A": 0.8},
      "goal": {"theta_deg": 0, "psi_deg": "auto", "delta_A": 0.6}
    }

``environment.friction_edge`` and ``environment.corner_friction`` are
optional; ``start`` and ``goal`` may be omitted for atlas and check runs.
"""

import argparse
import hashlib
import io
import json
import os
import sys

from . import __version__
from . import atlas
from . import geometry as geo
from . import trajectory
from .errors import PushDownRefused, SceneError, UngraspError
from .planner import GoalRegion, PlannerParams, PlanPath, edge_cost, plan
from .primitives import PrimitiveLabel

AUTO = "auto"
EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_PATH = 2


def _get(section, name, prefix):
    if not isinstance(section, dict):
        raise SceneError(f"{prefix} must be an object")
    if name not in section:
        raise SceneError(f"{prefix}.{name} missing")
    return section[name]


def _num(section, name, prefix):
    value = _get(section, name, prefix)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneError(f"{prefix}.{name} must be a number, got {value!r}")
    return float(value)


def _positive(section, name, prefix):
    value = _num(section, name, prefix)
    if not value > 0:
        raise SceneError(f"{prefix}.{name} must be positive, got {value}")
    return value


def _configuration(section, prefix):
    return geo.Configuration(_num(section, "theta_deg", prefix), _num(section, "psi_deg", prefix),
                             _num(section, "delta_A", prefix))


def scene_from_dict(doc):
    """Validated Scene from a parsed scene document."""
    if not isinstance(doc, dict):
        raise SceneError("scene must be a JSON object")
    try:
        o = _get(doc, "object", "scene")
        obj = geo.ObjectShape(str(_get(o, "kind", "object")), _positive(o, "length_mm", "object"),
                              _num(o, "thickness_mm", "object"))
        g = _get(doc, "gripper", "scene")
        gripper = geo.GripperSpec(_positive(g, "finger_length_mm", "gripper"),
                                  _positive(g, "thumb_length_mm", "gripper"),
                                  _num(g, "digit_thickness_mm", "gripper"),
                                  _positive(g, "max_opening_mm", "gripper"),
                                  _num(g, "tip_offset_mm", "gripper"))
        e = _get(doc, "environment", "scene")
        obstacles = e.get("obstacles", []) if isinstance(e, dict) else []
        env = geo.EnvironmentSpec(str(_get(e, "g_contact", "environment")),
                                  _num(e, "mu_G", "environment"), _num(e, "mu_A", "environment"),
                                  _num(e, "mu_B", "environment"),
                                  tuple(tuple(tuple(p) for p in poly) for poly in obstacles),
                                  e.get("friction_edge", geo.WITH_SLIP),
                                  bool(e.get("corner_friction", False)))
        start = _configuration(doc["start"], "start") if "start" in doc else None
        goal = None
        if "goal" in doc:
            s = doc["goal"]
            psi = _get(s, "psi_deg", "goal")
            if psi != AUTO:
                psi = _num(s, "psi_deg", "goal")
            goal = geo.GoalSpec(_num(s, "theta_deg", "goal"), psi, _num(s, "delta_A", "goal"))
        scene = geo.Scene(obj, gripper, env, start, goal)
        if start is not None:
            geo.check_bounds(start)
        if goal is not None:
            resolve_goal(scene)
    except SceneError:
        raise
    except (ValueError, TypeError) as exc:
        raise SceneError(str(exc)) from exc
    return scene


def parse_scene(path):
    """Read and validate a scene file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: not valid JSON ({exc})") from exc
    return scene_from_dict(doc)


def scene_to_dict(scene):
    o, g, e = scene.obj, scene.gripper, scene.environment
    doc = {
        "object": {"kind": o.kind, "length_mm": o.length, "thickness_mm": o.thickness},
        "gripper": {"finger_length_mm": g.finger_length, "thumb_length_mm": g.thumb_length,
                    "digit_thickness_mm": g.digit_thickness, "max_opening_mm": g.max_opening,
                    "tip_offset_mm": g.tip_offset},
        "environment": {"g_contact": e.g_contact, "mu_G": e.mu_g, "mu_A": e.mu_a, "mu_B": e.mu_b,
                        "obstacles": [[list(p) for p in poly] for poly in e.obstacles],
                        "friction_edge": e.friction_edge, "corner_friction": e.corner_friction},
    }
    if scene.start is not None:
        s = scene.start
        doc["start"] = {"theta_deg": s.theta, "psi_deg": s.psi, "delta_A": s.delta}
    if scene.goal is not None:
        s = scene.goal
        doc["goal"] = {"theta_deg": s.theta, "psi_deg": s.psi, "delta_A": s.delta}
    return doc


def dumps_scene(scene):
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n"


def write_scene(scene, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scene(scene))


def scene_hash(scene):
    return hashlib.sha256(dumps_scene(scene).encode("utf-8")).hexdigest()


def resolve_goal(scene):
    """Goal configuration with psi = "auto" replaced by the terminal angle."""
    g = scene.goal
    if g is None:
        raise SceneError("scene has no goal section")
    psi = geo.goal_psi(scene, g.delta) if g.psi == AUTO else float(g.psi)
    q = geo.Configuration(float(g.theta), psi, float(g.delta))
    geo.check_bounds(q)
    return q


def footer(scene, seed=None):
    seed = "none" if seed is None else seed
    return f"# scene_sha256={scene_hash(scene)} seed={seed} version={__version__}\n"


def _write(path, body, scene, seed=None):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(body)
        fh.write(footer(scene, seed))


def _fmt(x):
    return repr(float(x))


PATH_HEADER = "index,theta_deg,psi_deg,delta_A,label\n"
TREE_HEADER = "id,parent,theta_deg,psi_deg,delta_A,label,cost,length\n"


def path_csv(path):
    lines = [PATH_HEADER]
    for i, q in enumerate(path.waypoints):
        label = "" if i == 0 else str(path.segment_labels[i - 1])
        lines.append(f"{i},{_fmt(q.theta)},{_fmt(q.psi)},{_fmt(q.delta)},{label}\n")
    return "".join(lines)


def read_path_csv(path):
    """PlanPath from a path.csv file; the cost is recomputed from the labels."""
    waypoints, labels = [], []
    with open(path, encoding="utf-8") as fh:
        rows = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    if not rows or rows[0] + "\n" != PATH_HEADER:
        raise SceneError(f"{path}: not a path file")
    for row in rows[1:]:
        parts = row.split(",")
        if len(parts) != 5:
            raise SceneError(f"{path}: malformed row {row!r}")
        waypoints.append(geo.Configuration(float(parts[1]), float(parts[2]), float(parts[3])))
        if len(waypoints) > 1:
            labels.append(PrimitiveLabel.parse(parts[4]))
    if not waypoints:
        raise SceneError(f"{path}: no waypoints")
    cost = sum(edge_cost(a, b) for a, b in zip([None] + labels[:-1], labels))
    return PlanPath(waypoints, labels, cost, 0)


def tree_csv(tree):
    lines = [TREE_HEADER]
    for n in tree.nodes:
        parent = "" if n.parent is None else n.parent.id
        label = "" if n.label is None else str(n.label)
        lines.append(f"{n.id},{parent},{_fmt(n.q.theta)},{_fmt(n.q.psi)},{_fmt(n.q.delta)},"
                     f"{label},{n.cost},{_fmt(n.length)}\n")
    return "".join(lines)


def goal_analysis(scene, q_goal):
    """Why a failed search may have missed: the goal's labels under each policy."""
    labels = {p: atlas.classify(scene, q_goal, p).label for p in (atlas.CONSERVATIVE, atlas.ROLLING)}
    text = ", ".join(f"{p}: {v}" for p, v in labels.items())
    if all(v != atlas.FREE for v in labels.values()):
        return f"goal {q_goal} is outside C_free ({text})"
    return f"goal {q_goal} is in C_free ({text}); no path found within the iteration budget"


def _report(result, scene, q_init, q_goal, params):
    lines = [f"start: {q_init}", f"goal: {q_goal}", f"iterations: {params.iterations}",
             f"seed: {params.seed}"]
    if result:
        lines.insert(0, "status: success")
        lines += [f"total_cost: {result.total_cost}", f"length: {_fmt(result.length)}",
                  f"first_hit_iteration: {result.iterations_used}",
                  f"segments: {len(result.segments())}"]
        for label, i0, i1 in result.segments():
            lines.append(f"  {label}: {result.waypoints[i0]} -> {result.waypoints[i1]}")
    else:
        lines.insert(0, "status: failed to connect")
        lines += [f"tree_nodes: {len(result.tree)}", f"nearest: {result.nearest.q}",
                  f"nearest_distance: {_fmt(result.nearest_distance)}",
                  f"reason: {result.reason}", f"analysis: {goal_analysis(scene, q_goal)}"]
    return "\n".join(lines) + "\n"


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get("UNGRASP_SEED")
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise SceneError(f"UNGRASP_SEED must be an integer, got {env!r}")


def cmd_plan(args, out):
    scene = parse_scene(args.scene)
    if scene.start is None:
        raise SceneError("start section missing")
    q_goal = resolve_goal(scene)
    seed = _seed(args.seed)
    params = PlannerParams(iterations=args.iterations, seed=seed)
    result = plan(scene, scene.start, GoalRegion(q_goal), params)
    os.makedirs(args.out, exist_ok=True)
    tree = result.tree
    if result:
        _write(os.path.join(args.out, "path.csv"), path_csv(result), scene, seed)
    if tree is not None:
        _write(os.path.join(args.out, "tree.csv"), tree_csv(tree), scene, seed)
    _write(os.path.join(args.out, "report.txt"), _report(result, scene, scene.start, q_goal, params),
           scene, seed)
    if result:
        out.write(f"success: cost {result.total_cost}, {len(result.segments())} segments\n")
        return EXIT_OK
    out.write(f"failed to connect: {goal_analysis(scene, q_goal)}\n")
    return EXIT_NO_PATH


def _range(text):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}")
    return (lo, hi, step)


def cmd_atlas(args, out):
    scene = parse_scene(args.scene)
    grid = atlas.Grid(args.theta, args.psi, args.delta)
    cells = atlas.sweep(scene, grid, args.policy, args.workers)
    buf = io.StringIO()
    atlas.write_csv(cells, buf)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "atlas.csv"), buf.getvalue(), scene)
    c = atlas.counts(cells)
    out.write(" ".join(f"{k}={v}" for k, v in c.items()) + "\n")
    return EXIT_OK


def cmd_check(args, out):
    scene = parse_scene(args.scene)
    cell = atlas.classify(scene, geo.Configuration(args.theta, args.psi, args.delta), args.policy)
    out.write(cell.label + "\n")
    return EXIT_OK


def cmd_traj(args, out):
    scene = parse_scene(args.scene)
    path = read_path_csv(args.path)
    speeds = trajectory.Speeds(args.psi_dot, args.theta_dot, args.delta_dot)
    samples = trajectory.synthesize(scene, path, speeds, args.rate)
    if not args.no_push_down and samples:
        try:
            tail = trajectory.push_down(scene, path.waypoints[-1], t0=samples[-1].t, rate_hz=args.rate)
            samples.extend(tail[1:])
        except PushDownRefused as exc:
            sys.stderr.write(f"push-down skipped: {exc}\n")
    buf = io.StringIO()
    trajectory.write_csv(samples, buf)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "traj.csv"), buf.getvalue(), scene)
    out.write(f"{len(samples)} samples, {samples[-1].t if samples else 0.0:g} s\n")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _policy(text):
    if text in (atlas.CONSERVATIVE, atlas.ROLLING):
        return text
    try:
        return PrimitiveLabel.parse(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"unknown policy {text!r}")


def build_parser():
    p = _Parser(prog="ungrasp", description="Planning through contact for ungrasping.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("plan", help="search for a path from start to goal")
    s.add_argument("--scene", required=True)
    s.add_argument("--iterations", type=int, default=1000)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("atlas", help="label a configuration grid")
    s.add_argument("--scene", required=True)
    s.add_argument("--policy", type=_policy, default=atlas.CONSERVATIVE)
    s.add_argument("--out", required=True)
    s.add_argument("--theta", type=_range, default=atlas.Grid.theta, help="lo:hi:step in degrees")
    s.add_argument("--psi", type=_range, default=atlas.Grid.psi, help="lo:hi:step in degrees")
    s.add_argument("--delta", type=_range, default=atlas.Grid.delta, help="lo:hi:step")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_atlas)

    s = sub.add_parser("check", help="label one configuration")
    s.add_argument("--scene", required=True)
    s.add_argument("--theta", type=float, required=True)
    s.add_argument("--psi", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--policy", type=_policy, default=atlas.CONSERVATIVE)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("traj", help="turn a path into gripper commands")
    s.add_argument("--scene", required=True)
    s.add_argument("--path", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--psi-dot", type=float, default=trajectory.Speeds.psi_dot, help="rad/s")
    s.add_argument("--theta-dot", type=float, default=trajectory.Speeds.theta_dot, help="rad/s")
    s.add_argument("--delta-dot", type=float, default=trajectory.Speeds.delta_dot, help="delta_A/s")
    s.add_argument("--rate", type=float, default=trajectory.RATE_HZ, help="samples per second")
    s.add_argument("--no-push-down", action="store_true")
    s.set_defaults(func=cmd_traj)
    return p


def run(argv=None, out=None):
    """Run one subcommand; returns the process exit code."""
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args, out)
    except (OSError, UngraspError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


def main():
    sys.exit(run())
