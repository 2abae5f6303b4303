"""Occupancy grids, collision loss and A* search over a 26-connected lattice."""

from __future__ import annotations

import heapq
import itertools
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import quaternion as quat
from .graph import GraphError, JointSpec, PropertyGraph, RequireReport, RequireUnsatisfied

EMPTY_DISTANCE = 1e6  # sentinel clearance when nothing is occupied
GRID_MAGIC = b"OCC1"


class PlannerError(Exception):
    code = "planner-error"


class OutOfBounds(PlannerError):
    code = "out-of-bounds"


class EndpointOccupied(PlannerError):
    code = "start-or-goal-occupied"


class NoPath(PlannerError):
    code = "no-path"


class CollisionRejected(PlannerError):
    code = "collision"

    def __init__(self, message, loss):
        super().__init__(message)
        self.loss = loss


class MissingPose(PlannerError):
    code = "missing-pose"


class JointLimitError(PlannerError):
    code = "joint-limit"


@dataclass(frozen=True)
class PlannerConfig:
    safety_distance: float = 0.05
    collision_weight: float = 1e4
    resolution: float = 0.02
    heuristic: str = "euclidean"
    standoff: float = 0.05
    smooth: bool = True
    hard_check: bool = False

    def __post_init__(self):
        if not self.safety_distance > 0:
            raise ValueError("safety_distance must be positive")
        if not self.collision_weight >= 0:
            raise ValueError("collision_weight must be non-negative")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        if self.heuristic != "euclidean":
            raise ValueError(f"unsupported heuristic {self.heuristic!r}")
        if self.standoff < 0:
            raise ValueError("standoff must be non-negative")


@dataclass
class Pose:
    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: quat.IDENTITY.copy())

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.orientation = np.asarray(self.orientation, dtype=float)


@dataclass
class Path3D:
    waypoints: np.ndarray
    orientations: np.ndarray | None = None
    clearance: np.ndarray | None = None
    cells: list[tuple[int, int, int]] | None = None

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 3)

    def __len__(self):
        return len(self.waypoints)

    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1).sum())

    def to_list(self) -> list[dict]:
        qs = self.orientations if self.orientations is not None else np.tile(quat.IDENTITY, (len(self), 1))
        return [dict(zip(("x", "y", "z", "qw", "qx", "qy", "qz"), map(float, (*p, *q))))
                for p, q in zip(self.waypoints, qs)]


class OccupancyGrid:
    """Axis-aligned voxel grid; cell (i, j, k) spans origin + res * [i, i+1) etc."""

    def __init__(self, origin, resolution: float, occupied: np.ndarray, distance: np.ndarray | None = None):
        self.origin = np.asarray(origin, dtype=float)
        self.resolution = float(resolution)
        self.occupied = np.asarray(occupied, dtype=bool)
        if distance is None:
            distance = distance_field(self.occupied, self.resolution)
        self.distance = distance
        self.occupied.setflags(write=False)
        self.distance.setflags(write=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(n) for n in self.occupied.shape)

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.resolution * np.array(self.dims)

    def cell_of(self, point) -> tuple[int, int, int]:
        p = np.asarray(point, dtype=float)
        rel = (p - self.origin) / self.resolution
        if np.any(rel < -1e-9) or np.any(rel > np.array(self.dims) + 1e-9) or not np.all(np.isfinite(rel)):
            raise OutOfBounds(f"point {p.tolist()} lies outside the grid")
        idx = np.minimum(np.floor(np.maximum(rel, 0)).astype(int), np.array(self.dims) - 1)
        return tuple(int(v) for v in idx)

    def cells_of(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        rel = (pts - self.origin) / self.resolution
        dims = np.array(self.dims)
        if np.any(rel < -1e-9) or np.any(rel > dims + 1e-9) or not np.all(np.isfinite(rel)):
            raise OutOfBounds("waypoint outside the grid")
        return np.minimum(np.floor(np.maximum(rel, 0)).astype(int), dims - 1)

    def center(self, idx) -> np.ndarray:
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    def clearance(self, points) -> np.ndarray:
        c = self.cells_of(points)
        return self.distance[c[:, 0], c[:, 1], c[:, 2]]

    def to_bytes(self) -> bytes:
        nx, ny, nz = self.dims
        header = GRID_MAGIC + struct.pack("<3Id", nx, ny, nz, self.resolution)
        return header + np.ascontiguousarray(self.occupied, dtype=np.uint8).tobytes(order="C")

    def dump(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes, origin=(0.0, 0.0, 0.0)) -> "OccupancyGrid":
        if data[:4] != GRID_MAGIC:
            raise ValueError("not an occupancy grid dump")
        nx, ny, nz, res = struct.unpack("<3Id", data[4:24])
        occ = np.frombuffer(data[24:], dtype=np.uint8).reshape(nx, ny, nz).astype(bool)
        return cls(origin, res, occ)


def distance_field(occupied: np.ndarray, resolution: float) -> np.ndarray:
    """Euclidean distance from each cell centre to the nearest occupied centre."""
    if not occupied.any():
        return np.full(occupied.shape, EMPTY_DISTANCE)
    return ndimage.distance_transform_edt(~occupied, sampling=resolution)


def _box_cells(centers: np.ndarray, half_cell: float, pos, R, ext) -> np.ndarray:
    """Separating-axis test between axis-aligned cells and one oriented box."""
    d = centers - pos
    axes = [np.eye(3)[i] for i in range(3)] + [R[:, i] for i in range(3)]
    for i, j in itertools.product(range(3), range(3)):
        c = np.cross(np.eye(3)[i], R[:, j])
        if np.linalg.norm(c) > 1e-9:
            axes.append(c / np.linalg.norm(c))
    hit = np.ones(len(centers), dtype=bool)
    for L in axes:
        r_cell = half_cell * np.abs(L).sum()
        r_box = float(np.abs(L @ R) @ ext)
        hit &= np.abs(d @ L) < r_cell + r_box - 1e-9
    return hit


def _node_box(node):
    a = node.attributes
    if "position" not in a or "extent" not in a:
        return None
    return (np.asarray(a["position"], float), quat.to_matrix(a.get("orientation", quat.IDENTITY)),
            np.asarray(a["extent"], float))


def build_occupancy_grid(scene: PropertyGraph, bounds, resolution: float, exclude=()) -> OccupancyGrid:
    if not resolution > 0:
        raise PlannerError("resolution must be positive")
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    if np.any(hi <= lo):
        raise PlannerError("bounds are empty")
    dims = np.maximum(np.ceil((hi - lo) / resolution - 1e-9).astype(int), 1)
    occ = np.zeros(dims, dtype=bool)
    exclude = set(exclude)
    for node in scene.nodes.values():
        box = _node_box(node)
        pos = node.attributes.get("position")
        if pos is not None and (np.any(np.asarray(pos) < lo) or np.any(np.asarray(pos) > hi)):
            raise OutOfBounds(f"node {node.id} lies outside the planning bounds")
        if box is None or node.id in exclude:
            continue
        p, R, e = box
        reach = np.abs(R) @ e
        i0 = np.clip(np.floor((p - reach - lo) / resolution).astype(int) - 1, 0, dims)
        i1 = np.clip(np.ceil((p + reach - lo) / resolution).astype(int) + 1, 0, dims)
        if np.any(i1 <= i0):
            continue
        ii = np.stack(np.meshgrid(*[np.arange(a, b) for a, b in zip(i0, i1)], indexing="ij"), -1).reshape(-1, 3)
        centers = lo + (ii + 0.5) * resolution
        hit = _box_cells(centers, resolution / 2, p, R, e)
        sel = ii[hit]
        occ[sel[:, 0], sel[:, 1], sel[:, 2]] = True
    return OccupancyGrid(lo, resolution, occ)


def collision_loss(path, grid: OccupancyGrid, delta: float) -> float:
    pts = path.waypoints if isinstance(path, Path3D) else np.asarray(path, dtype=float).reshape(-1, 3)
    if len(pts) == 0:
        return 0.0
    d = grid.clearance(pts)
    return float(np.sum(np.maximum(0.0, delta - d) ** 2))


_NEIGHBOURS = [o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]


def astar_cells(grid: OccupancyGrid, start_cell, goal_cell, config: PlannerConfig) -> list[tuple[int, int, int]]:
    """Cell sequence of a least-cost path; edge cost is step length plus the entered cell's penalty."""
    nx, ny, nz = grid.dims
    NY, NZ = ny + 2, nz + 2
    NYZ = NY * NZ
    blocked = np.pad(grid.occupied, 1, constant_values=True).ravel().tolist()
    pen_arr = config.collision_weight * np.maximum(0.0, config.safety_distance - grid.distance) ** 2
    pen = np.pad(pen_arr, 1).ravel().tolist()
    res = grid.resolution

    def flat(c):
        return (c[0] + 1) * NYZ + (c[1] + 1) * NZ + (c[2] + 1)

    s, g = flat(start_cell), flat(goal_cell)
    if blocked[s] or blocked[g]:
        raise EndpointOccupied("start or goal lies in an occupied cell")
    steps = [(di * NYZ + dj * NZ + dk, res * math.sqrt(di * di + dj * dj + dk * dk))
             for di, dj, dk in _NEIGHBOURS]
    gi, gj, gk = goal_cell[0] + 1, goal_cell[1] + 1, goal_cell[2] + 1
    sqrt = math.sqrt

    def h(n):
        i, r = divmod(n, NYZ)
        j, k = divmod(r, NZ)
        return res * sqrt((i - gi) ** 2 + (j - gj) ** 2 + (k - gk) ** 2)

    gscore = {s: 0.0}
    came = {}
    closed = bytearray(len(blocked))
    heap = [(h(s), 0, s)]
    tie = 1
    while heap:
        _, _, n = heapq.heappop(heap)
        if closed[n]:
            continue
        if n == g:
            break
        closed[n] = 1
        gn = gscore[n]
        for off, st in steps:
            m = n + off
            if blocked[m] or closed[m]:
                continue
            ng = gn + st + pen[m]
            if ng < gscore.get(m, math.inf):
                gscore[m] = ng
                came[m] = n
                heapq.heappush(heap, (ng + h(m), tie, m))
                tie += 1
    else:
        raise NoPath("goal is unreachable")

    out = [g]
    while out[-1] != s:
        out.append(came[out[-1]])
    cells = []
    for n in reversed(out):
        i, r = divmod(n, NYZ)
        j, k = divmod(r, NZ)
        cells.append((i - 1, j - 1, k - 1))
    return cells


def path_cost(cells, grid: OccupancyGrid, config: PlannerConfig) -> float:
    cost = 0.0
    for a, b in zip(cells, cells[1:]):
        d = grid.distance[b]
        cost += grid.resolution * math.dist(a, b) + config.collision_weight * max(0.0, config.safety_distance - d) ** 2
    return cost


def step_counts(cells) -> tuple[int, int, int]:
    """Number of face, edge and corner moves; cost with lambda=0 is r*(n1 + n2*sqrt2 + n3*sqrt3)."""
    n = [0, 0, 0]
    for a, b in zip(cells, cells[1:]):
        n[sum(x != y for x, y in zip(a, b)) - 1] += 1
    return tuple(n)


def _segment_clear(grid: OccupancyGrid, a, b, config: PlannerConfig) -> np.ndarray | None:
    """Samples of a->b at a quarter cell, or None if any sample is unsafe."""
    m = 4 * max(1, math.ceil(np.linalg.norm(b - a) / grid.resolution))
    t = np.linspace(0.0, 1.0, m + 1)[:, None]
    pts = a + t * (b - a)
    c = grid.cells_of(pts)
    if grid.occupied[c[:, 0], c[:, 1], c[:, 2]].any():
        return None
    if config.collision_weight > 0 and np.any(grid.distance[c[:, 0], c[:, 1], c[:, 2]] < config.safety_distance):
        return None
    return pts[::4]


def shortcut(points: np.ndarray, grid: OccupancyGrid, config: PlannerConfig) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n <= 2:
        return pts
    out = [pts[0]]
    i = 0
    while i < n - 1:
        for j in range(n - 1, i + 1, -1):
            seg = _segment_clear(grid, pts[i], pts[j], config)
            if seg is not None:
                out.extend(seg[1:])
                i = j
                break
        else:
            out.append(pts[i + 1])
            i += 1
    return np.array(out)


def plan_path(grid: OccupancyGrid, start, goal, config: PlannerConfig | None = None) -> Path3D:
    config = config or PlannerConfig()
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    sc, gc = grid.cell_of(start), grid.cell_of(goal)
    cells = astar_cells(grid, sc, gc, config)
    pts = [start] + [grid.center(c) for c in cells] + [goal]
    keep = [pts[0]]
    for p in pts[1:]:
        if not np.allclose(p, keep[-1], atol=1e-12, rtol=0):
            keep.append(p)
    wp = np.array(keep)
    if config.smooth:
        wp = shortcut(wp, grid, config)
    path = Path3D(wp, None, grid.clearance(wp), cells)
    if config.hard_check:
        loss = collision_loss(path, grid, config.safety_distance)
        if loss > 0:
            raise CollisionRejected(f"path violates the safety distance (loss {loss:.3g})", loss)
    return path


def approach_axis(node) -> np.ndarray:
    a = node.attributes
    local = np.asarray(a.get("approach_axis", (0.0, 0.0, 1.0)), dtype=float)
    return quat.rotate(a.get("orientation", quat.IDENTITY), local / np.linalg.norm(local))


def node_pose(scene: PropertyGraph, node_id: str) -> Pose:
    node = scene.node(node_id)
    if "position" not in node.attributes:
        raise MissingPose(f"node {node_id} has no position")
    return Pose(node.attributes["position"], node.attributes.get("orientation", quat.IDENTITY))


def compute_endpoints(subtask, report: RequireReport, scene: PropertyGraph,
                      standoff: float = 0.05) -> tuple[Pose, Pose]:
    """Start at the actor's pose; goal at the target offset along its approach axis."""
    if not report.satisfied:
        raise RequireUnsatisfied(f"{subtask.action}: {report.describe()}", report.failing)
    try:
        start = node_pose(scene, subtask.actor)
        target = node_pose(scene, subtask.target)
    except GraphError as exc:
        raise MissingPose(str(exc)) from None
    goal = target.position + standoff * approach_axis(scene.node(subtask.target))
    return start, Pose(goal, start.orientation.copy())


def joint_trajectory(joint: JointSpec, grasp: Pose, magnitude: float, step: float,
                     start_value: float = 0.0) -> Path3D:
    """Prismatic: straight line along the axis. Revolute: arc about (origin, axis), orientation co-rotated."""
    if not step > 0:
        raise PlannerError("step must be positive")
    axis = np.asarray(joint.axis, dtype=float)
    n_axis = np.linalg.norm(axis)
    if n_axis == 0:
        raise PlannerError("joint axis is zero")
    axis = axis / n_axis
    lo, hi = joint.limits
    end = start_value + magnitude
    if not (lo - 1e-12 <= start_value <= hi + 1e-12 and lo - 1e-12 <= end <= hi + 1e-12):
        raise JointLimitError(f"joint value {end:.6g} outside limits [{lo}, {hi}]")
    n = math.ceil(abs(magnitude) / step - 1e-9)
    ts = np.linspace(0.0, 1.0, n + 1) if n > 0 else np.zeros(1)
    p0 = grasp.position
    q0 = grasp.orientation
    if joint.joint_type == "prismatic":
        pts = p0 + np.outer(ts * magnitude, axis)
        qs = np.tile(q0, (len(ts), 1))
    elif joint.joint_type == "revolute":
        origin = np.asarray(joint.origin, dtype=float)
        pts, qs = [], []
        for t in ts:
            r = quat.from_axis_angle(axis, t * magnitude)
            pts.append(origin + quat.rotate(r, p0 - origin))
            qs.append(quat.canonical(quat.normalize(quat.multiply(r, q0))))
        pts, qs = np.array(pts), np.array(qs)
    else:
        raise JointLimitError("fixed joints cannot move")
    return Path3D(pts, qs)
