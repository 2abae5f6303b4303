"""Run both scenarios end to end and look at the tactile fix-up at stacking.

Writes top-down SVG plots to demos/out/.

Run: python3 demos/05_drawer_to_door.py
"""
# %%
import math
from dataclasses import replace
from pathlib import Path

from skilltransfer.sim import load_scenario, run_scenario, scenario_plan, trajectory_svg

FIX = Path(__file__).resolve().parents[1] / "fixtures"
OUT = Path(__file__).resolve().parent / "out"
OUT.mkdir(exist_ok=True)

for name in ("drawer", "door"):
    scn = load_scenario(FIX / f"{name}.json")
    rep = run_scenario(scn.world(), scenario_plan(scn), scn.library.state, scn.config)
    trajectory_svg(scn.library.scene, rep, scn.config.bounds, OUT / f"{name}.svg")
    print(f"\n{name}: success={rep.success} reward={rep.reward} loss={rep.total_collision_loss}")
    for s in rep.steps:
        print(f"  {s.index}: {s.action:9s} {s.target:14s} {s.status} ({s.waypoints} waypoints)")
    for eid, v in rep.articulation.items():
        print(f"  joint {eid}: {v:.4f} ({math.degrees(v):.1f} deg if revolute)")
    t = rep.tactile
    print(f"  cup yaw off by {t['injected_deg']:.2f} deg, tactile estimate {t['estimated_deg']:.1f} deg, "
          f"after correction {t['final_error_deg']:.2f} deg")

# %% [markdown]
# Without the tactile correction the same stacking step misses the 2 degree tolerance.

# %%
scn = load_scenario(FIX / "drawer.json")
rep = run_scenario(scn.world(), scenario_plan(scn), scn.library.state, replace(scn.config, tactile_correction=False))
print("\nno tactile correction:", rep.steps[-1].status, "-", rep.steps[-1].reason)
