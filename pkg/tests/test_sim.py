import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skilltransfer.graph import RequireUnsatisfied, get_binding, query_require
from skilltransfer.planner import CollisionRejected, Path3D
from skilltransfer.sim import (JointConstraintError, RunReport, SimConfig, SimError, context,
                               joint_displacement, load_scenario, plan_subtask, reward, run_scenario,
                               run_scenario_file, scenario_plan, step_action, trajectory_svg)
from skilltransfer.transfer import Subtask

from simutil import drawer_setup, grasp_drift, replay


@pytest.fixture(scope="module")
def drawer_report():
    from conftest import FIXTURES
    return run_scenario_file(FIXTURES / "drawer.json")


@pytest.fixture(scope="module")
def door_report():
    from conftest import FIXTURES
    return run_scenario_file(FIXTURES / "door.json")


# --- reward ------------------------------------------------------------------------

def test_reward_examples():
    assert reward(True, 0.0) == 2.0
    assert reward(True, 5.0) == 2.0
    assert reward(False, 0.0) == 0.25
    assert abs(reward(False, 0.3) - 0.25 * (1 - math.tanh(3.0))) < 1e-12
    assert abs(reward(False, 0.3) - 0.0012363) < 1e-7


def test_reward_rejects_negative_distance():
    with pytest.raises(ValueError):
        reward(False, -1e-9)


@given(st.floats(0.0, 10.0), st.floats(1e-6, 1.0))
def test_reward_strictly_decreasing(d, step):
    assert reward(False, d + step) < reward(False, d)


@given(st.floats(0.0, 2.0))
def test_reward_matches_tanh_form(d):
    assert abs(reward(False, d) - 0.25 * (1 - math.tanh(10 * d))) < 1e-15


# --- scenario runs --------------------------------------------------------------------

def test_drawer_reference_plan_succeeds(drawer_report):
    r = drawer_report
    assert r.success and r.reward == 2.0
    assert [s.status for s in r.steps] == ["success"] * 7
    assert r.total_collision_loss == 0.0
    assert all(s.collision_loss == 0.0 for s in r.steps)
    assert r.articulation == {"e0002": pytest.approx(0.3, abs=1e-12)}


def test_door_transferred_plan_succeeds(door_report):
    r = door_report
    assert r.success
    assert [s.action for s in r.steps] == ["approach", "grasp", "pull", "release", "approach", "pick", "stack"]
    assert r.total_collision_loss == 0.0
    (angle,) = r.articulation.values()
    assert math.degrees(angle) == pytest.approx(90.0, abs=1e-9)


def test_drawer_final_scene_state(fixtures_dir):
    scn = load_scenario(fixtures_dir / "drawer.json")
    world, plan, state, cfg = scn.world(), scenario_plan(scn), scn.library.state, scn.config
    for _, _, world in replay(world, plan, state, cfg):
        pass
    sc = world.scene
    assert sc.get_attribute("drawer", "open") is True
    assert sc.get_attribute("cup_1", "on") == "cup_2"
    assert sc.get_attribute("cup_1", "held") is False
    assert sc.get_attribute("gripper", "holding") == ""
    # drawer slid 0.3 m along its joint axis, the cup inside went with it
    assert sc.get_attribute("drawer", "position")[0] == pytest.approx(0.39, abs=1e-9)
    top = np.asarray(sc.get_attribute("cup_2", "position")) + [0, 0, 0.14]
    assert np.allclose(sc.get_attribute("cup_1", "position"), top, atol=1e-9)


def test_obtain_effects_present_after_run(fixtures_dir):
    scn = load_scenario(fixtures_dir / "drawer.json")
    world, state = scn.world(), scn.library.state
    last = {}
    for s, before, after in replay(world, scenario_plan(scn), state, scn.config):
        ctx = context(before, s)
        for e in get_binding(state, s.action).obtain:
            subject = ctx.get(e.subject, e.subject)
            last[(subject, e.attribute)] = ctx.get(e.value, e.value) if isinstance(e.value, str) else e.value
        world = after
    for (subject, attr), value in last.items():
        assert world.scene.get_attribute(subject, attr) == value


def test_corridor_has_loss_and_hard_check_rejects(fixtures_dir):
    r = run_scenario_file(fixtures_dir / "corridor.json")
    assert r.success and r.total_collision_loss > 0
    r2 = run_scenario_file(fixtures_dir / "corridor.json", overrides={"planner": {"hard_check": True}})
    assert not r2.success
    assert r2.steps[0].reason.startswith("collision")


def test_swapped_grasp_fails_with_require_unsatisfied(fixtures_dir):
    scn = load_scenario(fixtures_dir / "drawer.json")
    plan = scenario_plan(scn)
    plan[1] = Subtask("grasp", plan[1].target, plan[1].actor)
    r = run_scenario(scn.world(), plan, scn.library.state, scn.config)
    assert not r.success
    assert [s.status for s in r.steps] == ["success", "failed"]
    assert r.steps[1].reason.startswith("require-unsatisfied")
    assert r.step_count == 2
    assert r.final_distance >= 0 and r.reward == reward(False, r.final_distance)


def test_grasp_holds_handle_parent():
    world, plan, state, cfg = drawer_setup()
    steps = list(replay(world, plan[:2], state, cfg))
    assert steps[-1][2].held == "drawer"
    assert steps[-1][2].scene.get_attribute("gripper", "holding") == "drawer_handle"


def test_step_action_checks_require_first():
    world, plan, state, cfg = drawer_setup()
    traj = Path3D(world.gripper_pose.position[None, :])
    with pytest.raises(RequireUnsatisfied):
        step_action(world, plan[2], traj, state, cfg)  # pull before grasp


def test_off_arc_revolute_trajectory_rejected(fixtures_dir):
    scn = load_scenario(fixtures_dir / "door.json")
    plan = scenario_plan(scn)
    world = scn.world()
    for _, _, world in replay(world, plan[:2], scn.library.state, scn.config):
        pass
    p0 = world.gripper_pose.position
    line = p0 + np.linspace(0, 1, 10)[:, None] * np.array([-0.2, 0.0, 0.0])
    with pytest.raises(JointConstraintError):
        step_action(world, plan[2], Path3D(line), scn.library.state, scn.config)


def test_off_line_prismatic_trajectory_rejected():
    world, plan, state, cfg = drawer_setup()
    *_, (_, _, world) = replay(world, plan[:2], state, cfg)
    p0 = world.gripper_pose.position
    pts = p0 + np.linspace(0, 1, 5)[:, None] * np.array([-0.2, 0.0, 0.0])
    pts[2, 1] += 2e-6
    with pytest.raises(JointConstraintError):
        step_action(world, plan[2], Path3D(pts), state, cfg)
    pts[2, 1] -= 2e-6 - 5e-7  # within tolerance
    w = step_action(world, plan[2], Path3D(pts), state, cfg)
    assert w.articulation["e0002"] == pytest.approx(0.2, abs=1e-12)


def test_pull_past_limit_rejected():
    world, plan, state, cfg = drawer_setup()
    *_, (_, _, world) = replay(world, plan[:2], state, cfg)
    p0 = world.gripper_pose.position
    pts = p0 + np.linspace(0, 1, 5)[:, None] * np.array([-0.45, 0.0, 0.0])
    with pytest.raises(JointConstraintError):
        step_action(world, plan[2], Path3D(pts), state, cfg)


def test_joint_displacement_revolute_sum():
    from skilltransfer.graph import JointSpec
    j = JointSpec("revolute", (0.0, 0.0, 1.0), (0.0, 0.0, 0.0), "a", "b", (-4.0, 4.0))
    t = np.linspace(0.0, 3.0, 40)
    pts = np.stack([0.2 * np.cos(t), 0.2 * np.sin(t), np.full_like(t, 0.5)], axis=1)
    assert joint_displacement(j, pts, 1e-6) == pytest.approx(3.0, abs=1e-12)
    assert joint_displacement(j, pts[::-1], 1e-6) == pytest.approx(-3.0, abs=1e-12)


def test_trajectory_must_start_at_gripper():
    world, plan, state, cfg = drawer_setup()
    traj = Path3D(world.gripper_pose.position[None, :] + 0.01)
    with pytest.raises(SimError):
        step_action(world, plan[0], traj, state, cfg)


def test_hard_check_in_step_action(fixtures_dir):
    scn = load_scenario(fixtures_dir / "corridor.json", {"planner": {"hard_check": True}})
    world, s = scn.world(), scenario_plan(scn)[0]
    soft = SimConfig().merged({"bounds": scn.config.bounds})
    traj, grid, _ = plan_subtask(world, s, scn.library.state, soft, np.random.default_rng(0))
    with pytest.raises(CollisionRejected):
        step_action(world, s, traj, scn.library.state, scn.config, grid)


# --- invariants --------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["drawer.json", "door.json"])
def test_held_object_moves_rigidly(fixtures_dir, name):
    scn = load_scenario(fixtures_dir / name)
    held_steps = 0
    for s, _, after in replay(scn.world(), scenario_plan(scn), scn.library.state, scn.config):
        if after.held is not None:
            held_steps += 1
            assert grasp_drift(after) <= 1e-9
    assert held_steps >= 3


@pytest.mark.parametrize("name", ["drawer.json", "door.json"])
def test_articulation_stays_within_limits(fixtures_dir, name):
    scn = load_scenario(fixtures_dir / name)
    for _, _, after in replay(scn.world(), scenario_plan(scn), scn.library.state, scn.config):
        for eid, v in after.articulation.items():
            lo, hi = after.scene.joint_spec(eid).limits
            assert lo - 1e-9 <= v <= hi + 1e-9


@pytest.mark.parametrize("name", ["drawer.json", "door.json"])
def test_every_prefix_satisfies_next_require(fixtures_dir, name):
    scn = load_scenario(fixtures_dir / name)
    plan = scenario_plan(scn)
    for s, before, _ in replay(scn.world(), plan, scn.library.state, scn.config):
        assert query_require(scn.library.state, before.scene, s.action, context(before, s)).satisfied


def test_runs_are_deterministic(fixtures_dir):
    a = run_scenario_file(fixtures_dir / "door.json", seed=3).to_json()
    b = run_scenario_file(fixtures_dir / "door.json", seed=3).to_json()
    assert a == b


def test_run_report_json_round_trip(door_report):
    text = door_report.to_json()
    back = RunReport.from_json(text)
    assert back.to_json() == text
    assert json.loads(text)["tactile"]["final_error_deg"] <= 2.0


def test_tactile_correction_efficacy():
    rng = np.random.default_rng(2024)
    bin_deg = 1.0
    for trial in range(20):
        eps = rng.uniform(5.0, 30.0) * rng.choice([-1.0, 1.0])
        world, plan, state, cfg = drawer_setup(eps, seed=trial)
        r = run_scenario(world, plan, state, cfg)
        assert r.success
        assert r.tactile["injected_deg"] == pytest.approx(abs(eps), abs=1e-6)
        assert r.tactile["final_error_deg"] <= max(2.0, bin_deg)


def test_uncorrected_stack_misses_tolerance():
    world, plan, state, cfg = drawer_setup(12.0)
    from dataclasses import replace
    r = run_scenario(world, plan, state, replace(cfg, tactile_correction=False))
    assert not r.success
    assert r.steps[-1].reason.startswith("stacking-tolerance")


def test_config_merge_rejects_unknown_keys():
    with pytest.raises(ValueError):
        SimConfig().merged({"no_such_key": 1})
    cfg = SimConfig().merged({"planner": {"safety_distance": 0.02}, "hover": 0.2})
    assert cfg.planner.safety_distance == 0.02 and cfg.hover == 0.2


def test_trajectory_svg(drawer_report, fixtures_dir, tmp_path):
    scn = load_scenario(fixtures_dir / "drawer.json")
    out = tmp_path / "t.svg"
    text = trajectory_svg(scn.library.scene, drawer_report, scn.config.bounds, out)
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert out.read_text() == text
    assert "cabinet_body" in text
