"""Collision-aware grid planning around the cabinet, and what the safety term does.

Run: python3 demos/03_motion_planning.py
"""
# %%
from dataclasses import replace
from pathlib import Path

import numpy as np

from skilltransfer.planner import build_occupancy_grid, collision_loss, plan_path
from skilltransfer.sim import load_scenario

FIX = Path(__file__).resolve().parents[1] / "fixtures"
scn = load_scenario(FIX / "drawer.json")
pc = scn.config.planner
grid = build_occupancy_grid(scn.library.scene, scn.config.bounds, pc.resolution, {"gripper"})
print("grid", grid.dims, "occupied cells:", int(grid.occupied.sum()))

# %% [markdown]
# Go from the gripper's start around the cabinet's side. The plain
# shortest path hugs obstacles; the weighted one keeps clear of them.

# %%
start = scn.world().gripper_pose.position
goal = np.array([0.88, 0.35, 0.7])
for w in (0.0, 1e4):
    cfg = replace(pc, collision_weight=w)
    path = plan_path(grid, start, goal, cfg)
    c = grid.clearance(path.waypoints)
    print(f"weight {w:>7g}: {len(path)} waypoints, length {path.length():.3f} m, "
          f"min clearance {c.min():.3f} m, loss {collision_loss(path, grid, pc.safety_distance):.2e}")

# %% [markdown]
# A slot narrower than twice the safety distance cannot be passed without loss;
# with the hard check on, the planner refuses.

# %%
cor = load_scenario(FIX / "corridor.json")
g2 = build_occupancy_grid(cor.library.scene, cor.config.bounds, pc.resolution, {"gripper", "cup_1"})
p = plan_path(g2, cor.world().gripper_pose.position, [0.81, 0.01, 0.78], cor.config.planner)
print("corridor loss:", collision_loss(p, g2, pc.safety_distance))
try:
    plan_path(g2, cor.world().gripper_pose.position, [0.81, 0.01, 0.78], replace(cor.config.planner, hard_check=True))
except Exception as exc:
    print("hard check:", type(exc).__name__, exc)
