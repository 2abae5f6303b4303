"""Step-by-step replay shared by the sim and acceptance tests."""

import numpy as np

from skilltransfer import quaternion as quat
from skilltransfer.fixtures import BOUNDS, drawer_scene, drawer_task_graph, state_graph
from skilltransfer.sim import SimConfig, WorldState, plan_subtask, step_action
from skilltransfer.transfer import reference_plan


def drawer_setup(cup_yaw_deg=10.0, seed=0):
    cfg = SimConfig().merged({"bounds": BOUNDS, "target_orientation": [1.0, 0.0, 0.0, 0.0], "seed": seed})
    return WorldState.from_scene(drawer_scene(cup_yaw_deg)), reference_plan(drawer_task_graph()), state_graph(), cfg


def replay(world, plan, state, config):
    """Yield (subtask, world before, world after) for each step of ``plan``."""
    rng = np.random.default_rng(config.seed)
    for s in plan:
        traj, grid, _ = plan_subtask(world, s, state, config, rng)
        after = step_action(world, s, traj, state, config, grid)
        yield s, world, after
        world = after


def grasp_drift(world):
    """Largest deviation of held/carried poses from gripper ∘ constant offsets."""
    if world.held is None:
        return 0.0
    g = world.gripper_pose
    op, oq = world.grasp_offset
    bp = g.position + quat.rotate(g.orientation, op)
    bq = quat.multiply(g.orientation, oq)
    sc = world.scene.nodes
    worst = np.linalg.norm(bp - np.asarray(sc[world.held].attributes["position"]))
    worst = max(worst, quat.angle_between(bq, sc[world.held].attributes["orientation"]))
    for nid, (rp, rq) in world.carry_offsets.items():
        p = bp + quat.rotate(bq, rp)
        worst = max(worst, np.linalg.norm(p - np.asarray(sc[nid].attributes["position"])))
        worst = max(worst, quat.angle_between(quat.multiply(bq, rq), sc[nid].attributes["orientation"]))
    return float(worst)
