"""Kinematic execution of subtask plans against a scene graph."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import quaternion as quat
from .graph import (GraphError, PropertyGraph, RequireUnsatisfied, SkillLibrary, apply_obtain, query_require)
from .planner import (CollisionRejected, OccupancyGrid, Path3D, PlannerConfig, PlannerError, Pose, approach_axis,
                      build_occupancy_grid, collision_loss, compute_endpoints, joint_trajectory, plan_path)
from .tactile import PerceptionConfig, PerceptionError, Stripes, extract_contours, synth_tactile_image
from .tactile.pose import pose_error, pose_from_lines, world_pose
from .tactile.synth import ShapePose
from .transfer import MockProvider, Subtask, TransferError, reference_plan, transfer_task

CARRY_RELATIONS = ("attach", "inside", "on")


class SimError(Exception):
    code = "sim-error"


class JointConstraintError(SimError):
    code = "joint-constraint"


class StackingError(SimError):
    code = "stacking-tolerance"


class TactileFailure(SimError):
    code = "tactile-no-lines"


@dataclass(frozen=True)
class SimConfig:
    planner: PlannerConfig = PlannerConfig()
    perception: PerceptionConfig = PerceptionConfig()
    bounds: tuple = ((0.0, -0.6, 0.4), (1.1, 0.6, 1.2))
    seed: int = 0
    prismatic_step: float = 0.02
    revolute_step: float = math.radians(2.0)
    retreat: float = 0.10
    lift: float = 0.12
    hover: float = 0.10  # above the placement pose
    stack_height: float = 0.14  # centre-to-centre offset of stacked cups
    home_orientation: tuple = (1.0, 0.0, 0.0, 0.0)
    sensor_mount: tuple = (1.0, 0.0, 0.0, 0.0)  # q2, sensor in end-effector frame
    target_orientation: tuple | None = None  # q_t; defaults to the stacking target's orientation
    tactile_correction: bool = True
    tactile_noise: float = 0.5
    pose_tolerance_deg: float = 2.0
    position_tolerance: float = 0.01
    joint_tolerance: float = 1e-6

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["planner"] = asdict(self.planner)
        d["perception"] = asdict(self.perception)
        return d

    def merged(self, overrides: dict | None) -> "SimConfig":
        if not overrides:
            return self
        ov = dict(overrides)
        kw = {}
        if "planner" in ov:
            kw["planner"] = replace(self.planner, **ov.pop("planner"))
        if "perception" in ov:
            kw["perception"] = replace(self.perception, **ov.pop("perception"))
        sim = ov.pop("sim", {})
        sim.update(ov)
        known = {f.name for f in fields(self)}
        bad = set(sim) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        for k in ("bounds", "home_orientation", "sensor_mount", "target_orientation"):
            if sim.get(k) is not None:
                v = sim[k]
                sim[k] = tuple(tuple(x) for x in v) if k == "bounds" else tuple(v)
        return replace(self, **kw, **sim)


# --- world state ---------------------------------------------------------------

def _pose_of(scene: PropertyGraph, nid: str) -> tuple[np.ndarray, np.ndarray]:
    a = scene.node(nid).attributes
    return np.asarray(a["position"], float), np.asarray(a.get("orientation", quat.IDENTITY), float)


def _set_pose(scene: PropertyGraph, nid: str, p, q):
    a = scene.nodes[nid].attributes
    a["position"] = [float(v) for v in p]
    if "orientation" in a or q is not None:
        a["orientation"] = [float(v) for v in quat.canonical(quat.normalize(q))]


def _relative(base_p, base_q, p, q):
    """Pose (p, q) expressed in the frame (base_p, base_q)."""
    inv = quat.conjugate(base_q)
    return quat.rotate(inv, p - base_p), quat.multiply(inv, q)


def _compose(base_p, base_q, rel_p, rel_q):
    return base_p + quat.rotate(base_q, rel_p), quat.multiply(base_q, rel_q)


def body_of(scene: PropertyGraph, nid: str) -> str:
    """Follow attach edges up to the rigid body a part belongs to."""
    seen = {nid}
    cur = nid
    while True:
        up = [e.target for e in scene.out_edges(cur, "attach")]
        if not up or up[0] in seen:
            return cur
        cur = up[0]
        seen.add(cur)
        if any(e.relation == "joint" for e in scene.out_edges(cur)):
            return cur


def carried(scene: PropertyGraph, body: str) -> list[str]:
    """Nodes that move with ``body``: itself plus anything attached to, inside or on it."""
    out = [body]
    i = 0
    while i < len(out):
        for e in scene.in_edges(out[i]):
            if e.relation in CARRY_RELATIONS and e.source not in out:
                out.append(e.source)
        i += 1
    return out


def joint_edge_of(scene: PropertyGraph, body: str):
    for e in scene.out_edges(body, "joint"):
        return e
    return None


@dataclass
class WorldState:
    scene: PropertyGraph
    gripper: str = "gripper"
    held: str | None = None
    # pose of the held body in the gripper frame, then of each carried node in the body frame
    grasp_offset: tuple | None = None
    carry_offsets: dict = field(default_factory=dict)
    articulation: dict = field(default_factory=dict)

    @classmethod
    def from_scene(cls, scene: PropertyGraph, gripper: str = "gripper") -> "WorldState":
        scene.node(gripper)
        art = {e.id: float(e.attributes.get("value", 0.0)) for e in scene.edges.values() if e.relation == "joint"}
        return cls(scene.copy(), gripper, None, None, {}, art)

    def copy(self) -> "WorldState":
        return copy.deepcopy(self)

    @property
    def gripper_pose(self) -> Pose:
        p, q = _pose_of(self.scene, self.gripper)
        return Pose(p, q)

    def held_pose(self):
        if self.held is None:
            return None
        return _pose_of(self.scene, self.held)

    def _grab(self, body: str):
        gp, gq = _pose_of(self.scene, self.gripper)
        bp, bq = _pose_of(self.scene, body)
        self.held = body
        self.grasp_offset = _relative(gp, gq, bp, bq)
        self.carry_offsets = {}
        for nid in carried(self.scene, body)[1:]:
            if "position" in self.scene.nodes[nid].attributes:
                self.carry_offsets[nid] = _relative(bp, bq, *_pose_of(self.scene, nid))

    def _release(self):
        self.held = None
        self.grasp_offset = None
        self.carry_offsets = {}

    def _move_gripper(self, p, q):
        _set_pose(self.scene, self.gripper, p, q)
        if self.held is None:
            return
        bp, bq = _compose(np.asarray(p, float), np.asarray(q, float), *self.grasp_offset)
        _set_pose(self.scene, self.held, bp, bq)
        for nid, rel in self.carry_offsets.items():
            _set_pose(self.scene, nid, *_compose(bp, bq, *rel))


def context(world: WorldState, subtask: Subtask) -> dict:
    ctx = {"$actor": subtask.actor, "$target": subtask.target, "$gripper": world.gripper}
    if subtask.target in world.scene.nodes:
        ctx["$body"] = body_of(world.scene, subtask.target)
    return ctx


# --- joint bookkeeping -----------------------------------------------------------

def joint_displacement(joint, waypoints: np.ndarray, tol: float) -> float:
    """Signed travel along a joint; raises if any waypoint leaves the line or arc."""
    axis = np.asarray(joint.axis, float)
    p0 = waypoints[0]
    if joint.joint_type == "prismatic":
        rel = waypoints - p0
        off = rel - np.outer(rel @ axis, axis)
        if np.any(np.linalg.norm(off, axis=1) > tol):
            raise JointConstraintError("waypoint leaves the prismatic line")
        return float(rel[-1] @ axis)
    if joint.joint_type == "revolute":
        o = np.asarray(joint.origin, float)
        rel = waypoints - o
        h = rel @ axis
        radial = rel - np.outer(h, axis)
        r = np.linalg.norm(radial, axis=1)
        if np.any(np.abs(h - h[0]) > tol) or np.any(np.abs(r - r[0]) > tol):
            raise JointConstraintError("waypoint leaves the revolute arc")
        total = 0.0
        for a, b in zip(radial[:-1], radial[1:]):
            total += math.atan2(float(np.cross(a, b) @ axis), float(a @ b))
        return total
    raise JointConstraintError("fixed joints cannot move")


# --- stepping --------------------------------------------------------------------

def step_action(world: WorldState, subtask: Subtask, trajectory: Path3D, state: PropertyGraph,
                config: SimConfig = SimConfig(), grid: OccupancyGrid | None = None) -> WorldState:
    """Follow ``trajectory`` with the gripper and apply the subtask's bookkeeping."""
    ctx = context(world, subtask)
    report = query_require(state, world.scene, subtask.action, ctx)
    if not report.satisfied:
        raise RequireUnsatisfied(f"{subtask.action}: {report.describe()}", report.failing)
    wp = trajectory.waypoints
    if len(wp) == 0:
        raise SimError("empty trajectory")
    start = world.gripper_pose.position
    if np.linalg.norm(wp[0] - start) > 1e-6:
        raise SimError("trajectory does not start at the gripper")
    if grid is not None and config.planner.hard_check:
        loss = collision_loss(trajectory, grid, config.planner.safety_distance)
        if loss > 0:
            raise CollisionRejected(f"trajectory violates the safety distance (loss {loss:.3g})", loss)

    w = world.copy()
    disp = None
    if subtask.action == "pull":
        body = ctx["$body"]
        edge = joint_edge_of(w.scene, body)
        if edge is None:
            raise JointConstraintError(f"{body} is not articulated")
        joint = w.scene.joint_spec(edge.id)
        disp = joint_displacement(joint, wp, config.joint_tolerance)
        value = w.articulation.get(edge.id, 0.0) + disp
        lo, hi = joint.limits
        if not lo - 1e-9 <= value <= hi + 1e-9:
            raise JointConstraintError(f"joint {edge.id} value {value:.6g} outside [{lo}, {hi}]")
        if w.held != body:
            raise SimError(f"pulling {subtask.target} without holding it")

    if subtask.action == "release":
        w._release()  # let go first, then retreat
    qs = trajectory.orientations
    q_final = qs[-1] if qs is not None else w.gripper_pose.orientation
    w._move_gripper(wp[-1], q_final)

    if subtask.action in ("grasp", "pick"):
        w._grab(ctx["$body"])
    elif subtask.action == "stack":
        w._release()
    if disp is not None:
        edge = joint_edge_of(w.scene, ctx["$body"])
        w.articulation[edge.id] = w.articulation.get(edge.id, 0.0) + disp
        edge.attributes["value"] = w.articulation[edge.id]
    w.scene = apply_obtain(state, w.scene, subtask.action, ctx)
    return w


def reward(success: bool, d: float) -> float:
    if d < 0:
        raise ValueError("distance must be non-negative")
    if success:
        return 2.0
    # 0.25 (1 - tanh 10d) written as 0.5 / (1 + e^{20d}) so it keeps decreasing once tanh saturates
    return 0.5 / (1.0 + math.exp(min(20.0 * d, 700.0)))


# --- trajectory generation ---------------------------------------------------------

def _segment(a, b, step) -> np.ndarray:
    a, b = np.asarray(a, float), np.asarray(b, float)
    n = max(1, math.ceil(np.linalg.norm(b - a) / step - 1e-9))
    return a + np.linspace(0.0, 1.0, n + 1)[:, None] * (b - a)


def _with_orientation(points, q) -> Path3D:
    return Path3D(points, np.tile(np.asarray(q, float), (len(points), 1)))


def _slerped(points, q0, q1) -> Path3D:
    n = len(points)
    qs = np.array([quat.canonical(quat.slerp(q0, q1, i / max(n - 1, 1))) for i in range(n)])
    return Path3D(points, qs)


def _concat(*paths: Path3D) -> Path3D:
    pts, qs = [], []
    for p in paths:
        s = 0 if not pts else 1
        pts.append(p.waypoints[s:])
        qs.append(p.orientations[s:])
    return Path3D(np.vstack(pts), np.vstack(qs))


def tactile_correction(q_gripper, q_held, q_target, config: SimConfig, rng):
    """Render the held object's contact edge, estimate its in-plane angle and return q_e."""
    q2 = np.asarray(config.sensor_mount, float)
    q_rel = quat.multiply(quat.conjugate(quat.multiply(q_gripper, q2)), q_held)
    psi = quat.yaw(q_rel)
    psi = (psi + math.pi / 2) % math.pi - math.pi / 2
    pose = ShapePose(160.0, 120.0, psi + math.pi / 2)
    img, _ = synth_tactile_image("rect-line", pose, Stripes(angle=psi + math.pi / 2), config.tactile_noise, rng)
    C, H = extract_contours(img, config.perception)
    if len(H) == 0:
        raise TactileFailure("no contact lines found in the tactile frame")
    q1 = pose_from_lines(H)
    q_w = world_pose(q1, q2, q_gripper)
    q_e = pose_error(q_target, q_w)
    corrected = quat.multiply(q_e, q_held)
    info = {
        "injected_deg": math.degrees(quat.angle_between(q_target, q_held)),
        "estimated_deg": math.degrees(quat.yaw(q1)),
        "residual_deg": math.degrees(quat.angle_between(q_target, corrected)),
        "lines": len(H),
        "contour_points": len(C),
        "q_e": [float(v) for v in q_e],
    }
    return q_e, info


def _excluded(world: WorldState, target: str) -> set[str]:
    out = {world.gripper}
    if world.held:
        out |= set(carried(world.scene, world.held))
    if target in world.scene.nodes:
        out |= set(carried(world.scene, body_of(world.scene, target)))
        out.add(target)
    return out


def plan_subtask(world: WorldState, s: Subtask, state: PropertyGraph, config: SimConfig, rng):
    """Trajectory, planning grid and optional tactile info for one subtask."""
    scene = world.scene
    ctx = context(world, s)
    report = query_require(state, scene, s.action, ctx)
    pc = config.planner
    grid = build_occupancy_grid(scene, config.bounds, pc.resolution, _excluded(world, s.target))
    g = world.gripper_pose
    tinfo = None
    if s.action == "approach":
        start, goal = compute_endpoints(s, report, scene, pc.standoff)
        path = plan_path(grid, start.position, goal.position, pc)
        traj = _slerped(path.waypoints, g.orientation, config.home_orientation)
    elif s.action == "grasp":
        if not report.satisfied:
            raise RequireUnsatisfied(f"grasp: {report.describe()}", report.failing)
        tp = np.asarray(scene.node(s.target).attributes["position"], float)
        traj = _with_orientation(_segment(g.position, tp, pc.resolution), g.orientation)
    elif s.action == "pull":
        if not report.satisfied:
            raise RequireUnsatisfied(f"pull: {report.describe()}", report.failing)
        edge = joint_edge_of(scene, ctx["$body"])
        if edge is None:
            raise JointConstraintError(f"{ctx['$body']} is not articulated")
        joint = scene.joint_spec(edge.id)
        current = world.articulation.get(edge.id, 0.0)
        target = float(edge.attributes.get("open_value", joint.limits[1]))
        step = config.revolute_step if joint.joint_type == "revolute" else config.prismatic_step
        traj = joint_trajectory(joint, g, target - current, step, current)
    elif s.action == "release":
        if not report.satisfied:
            raise RequireUnsatisfied(f"release: {report.describe()}", report.failing)
        axis = approach_axis(scene.node(s.target))
        traj = _with_orientation(_segment(g.position, g.position + config.retreat * axis, pc.resolution),
                                 g.orientation)
    elif s.action == "pick":
        if not report.satisfied:
            raise RequireUnsatisfied(f"pick: {report.describe()}", report.failing)
        tp = np.asarray(scene.node(s.target).attributes["position"], float)
        down = _segment(g.position, tp, pc.resolution)
        up = _segment(tp, tp + np.array([0.0, 0.0, config.lift]), pc.resolution)
        traj = _with_orientation(np.vstack([down, up[1:]]), g.orientation)
    elif s.action in ("move", "stack"):
        if not report.satisfied:
            raise RequireUnsatisfied(f"{s.action}: {report.describe()}", report.failing)
        if world.held is None:
            raise SimError(f"{s.action} needs a held object")
        off_p, off_q = world.grasp_offset
        tp = np.asarray(scene.node(s.target).attributes["position"], float)
        up = np.array([0.0, 0.0, 1.0])
        hover = tp + (config.stack_height + config.hover) * up - quat.rotate(g.orientation, off_p)
        path = plan_path(grid, g.position, hover, pc)
        transit = _with_orientation(path.waypoints, g.orientation)
        if s.action == "move":
            traj = transit
        else:
            q_g = g.orientation
            q_held = quat.multiply(q_g, off_q)
            if config.target_orientation is not None:
                q_t = np.asarray(config.target_orientation, float)
            else:
                q_t = np.asarray(scene.node(s.target).attributes.get("orientation", quat.IDENTITY), float)
            if config.tactile_correction:
                q_e, tinfo = tactile_correction(q_g, q_held, q_t, config, rng)
                q_g = quat.canonical(quat.normalize(quat.multiply(q_e, q_g)))
            place = tp + config.stack_height * up - quat.rotate(q_g, off_p)
            turn = Path3D(np.array([hover, hover]), np.array([g.orientation, q_g]))
            descend = _with_orientation(_segment(hover, place, pc.resolution), q_g)
            traj = _concat(transit, turn, descend)
            tinfo = dict(tinfo or {}, target=[float(v) for v in q_t], place=[float(v) for v in tp + config.stack_height * up])
    else:
        raise SimError(f"no motion model for action {s.action!r}")
    return traj, grid, tinfo


# --- reports -------------------------------------------------------------------------

@dataclass
class StepResult:
    index: int
    action: str
    actor: str
    target: str
    status: str
    reason: str | None = None
    collision_loss: float = 0.0
    waypoints: int = 0


@dataclass
class RunReport:
    steps: list[StepResult]
    total_collision_loss: float
    step_count: int
    reward: float
    success: bool
    final_distance: float
    articulation: dict
    tactile: dict | None = None
    trajectories: list = field(default_factory=list, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "reward": self.reward,
            "total_collision_loss": self.total_collision_loss,
            "step_count": self.step_count,
            "final_distance": self.final_distance,
            "articulation": self.articulation,
            "tactile": self.tactile,
            "steps": [asdict(s) for s in self.steps],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls([StepResult(**s) for s in d["steps"]], d["total_collision_loss"], d["step_count"],
                   d["reward"], d["success"], d["final_distance"], d["articulation"], d.get("tactile"))

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


def _stack_check(world: WorldState, info: dict, config: SimConfig):
    q_t = np.asarray(info["target"], float)
    p, q = _pose_of(world.scene, info["held"])
    err_deg = math.degrees(quat.angle_between(q_t, q))
    err_pos = float(np.linalg.norm(p - np.asarray(info["place"], float)))
    info["final_error_deg"] = err_deg
    info["position_error"] = err_pos
    if err_deg > config.pose_tolerance_deg or err_pos > config.position_tolerance:
        raise StackingError(f"stacked pose off by {err_deg:.2f} deg, {err_pos:.4f} m")


EXPECTED_ERRORS = (GraphError, PlannerError, PerceptionError, SimError, ValueError)


def run_scenario(world: WorldState, plan: list[Subtask], state: PropertyGraph,
                 config: SimConfig = SimConfig()) -> RunReport:
    """Execute ``plan`` step by step; the first failure ends the run."""
    rng = np.random.default_rng(config.seed)
    steps, trajs = [], []
    total = 0.0
    tactile = None
    failed = None
    for i, s in enumerate(plan):
        try:
            held_before = world.held
            traj, grid, tinfo = plan_subtask(world, s, state, config, rng)
            loss = collision_loss(traj, grid, config.planner.safety_distance)
            world = step_action(world, s, traj, state, config, grid)
            if tinfo is not None:
                tinfo["held"] = held_before
                tactile = tinfo
                _stack_check(world, tinfo, config)
        except EXPECTED_ERRORS as exc:
            code = getattr(exc, "code", type(exc).__name__)
            steps.append(StepResult(i, s.action, s.actor, s.target, "failed", f"{code}: {exc}"))
            failed = s
            break
        total += loss
        trajs.append(traj)
        steps.append(StepResult(i, s.action, s.actor, s.target, "success", None, loss, len(traj)))
    success = failed is None and len(steps) == len(plan)
    d = 0.0
    if failed is not None and failed.target in world.scene.nodes and "position" in world.scene.nodes[failed.target].attributes:
        d = float(np.linalg.norm(world.gripper_pose.position - _pose_of(world.scene, failed.target)[0]))
    if tactile is not None:
        tactile = {k: v for k, v in tactile.items() if k not in ("target", "place", "held")}
    return RunReport(steps, total, len(steps), reward(success, d), success, d,
                     dict(sorted(world.articulation.items())), tactile, trajs)


# --- scenario files ------------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    library: SkillLibrary
    gripper: str
    config: SimConfig
    plan_spec: dict
    transfer: dict
    path: Path | None = None

    def world(self) -> WorldState:
        return WorldState.from_scene(self.library.scene, self.gripper)


def load_scenario(path, overrides: dict | None = None, seed: int | None = None) -> Scenario:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "graphs" not in doc or "scenario" not in doc:
        raise SimError(f"{path}: scenario documents need 'graphs' and 'scenario' sections")
    gs = doc["graphs"]
    lib = SkillLibrary(PropertyGraph.from_dict(gs["task"]), PropertyGraph.from_dict(gs["scene"]),
                       PropertyGraph.from_dict(gs["state"]))
    sc = doc["scenario"]
    gripper = sc.get("gripper", "gripper")
    if "gripper_pose" in sc:
        gp = sc["gripper_pose"]
        lib.scene.set_attribute(gripper, "position", gp["position"])
        if "orientation" in gp:
            lib.scene.set_attribute(gripper, "orientation", gp["orientation"])
    cfg = SimConfig().merged(copy.deepcopy(sc.get("config", {})))
    extra = {"bounds": sc["bounds"]} if "bounds" in sc else {}
    if sc.get("target_orientation") is not None:
        extra["target_orientation"] = sc["target_orientation"]
    cfg = cfg.merged(extra).merged(copy.deepcopy(overrides or {}))
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return Scenario(sc.get("name", path.stem), lib, gripper, cfg, sc.get("plan", {"source": "reference"}),
                    sc.get("transfer", {}), path)


def scenario_plan(scn: Scenario, provider=None) -> list[Subtask]:
    src = scn.plan_spec.get("source", "reference")
    ref = reference_plan(scn.library.task)
    if src == "reference":
        return ref
    if src == "explicit":
        return [Subtask.from_dict(d) for d in scn.plan_spec["steps"]]
    if src == "transfer":
        t = scn.transfer
        if provider is None:
            script = t.get("mock_script")
            if not script:
                raise TransferError("scenario has no mock script and no provider was given")
            base = scn.path.parent if scn.path else Path(".")
            provider = MockProvider.from_file(base / script)
        resp = transfer_task(provider, scn.library, ref, t["task_description"], t.get("notes", []))
        return resp.plan
    raise SimError(f"unknown plan source {src!r}")


def run_scenario_file(path, provider=None, overrides=None, seed=None) -> RunReport:
    scn = load_scenario(path, overrides, seed)
    plan = scenario_plan(scn, provider)
    return run_scenario(scn.world(), plan, scn.library.state, scn.config)


# --- plotting --------------------------------------------------------------------------

def trajectory_svg(scene: PropertyGraph, report: RunReport, bounds, path=None, scale: float = 500.0) -> str:
    """Top-down (x right, y up) view of boxes and executed gripper paths."""
    (x0, y0, _), (x1, y1, _) = bounds
    W, H = (x1 - x0) * scale, (y1 - y0) * scale
    tx = lambda x: (x - x0) * scale
    ty = lambda y: (y1 - y) * scale
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}">',
             f'<rect width="{W:.0f}" height="{H:.0f}" fill="white" stroke="black"/>']
    for n in scene.nodes.values():
        a = n.attributes
        if "extent" not in a or "position" not in a:
            continue
        R = quat.to_matrix(a.get("orientation", quat.IDENTITY))
        e, c = np.asarray(a["extent"]), np.asarray(a["position"])
        corners = [c + R @ (np.array([sx, sy, 0.0]) * e) for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1))]
        pts = " ".join(f"{tx(p[0]):.1f},{ty(p[1]):.1f}" for p in corners)
        parts.append(f'<polygon points="{pts}" fill="#ccc" fill-opacity="0.5" stroke="#555"><title>{n.id}</title></polygon>')
    colors = ["#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6"]
    for i, t in enumerate(report.trajectories):
        pts = " ".join(f"{tx(p[0]):.1f},{ty(p[1]):.1f}" for p in t.waypoints)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{colors[i % len(colors)]}" stroke-width="2"/>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(svg)
    return svg
