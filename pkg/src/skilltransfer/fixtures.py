"""Builders for the drawer, door and corridor scenario documents.

``python3 -m skilltransfer.fixtures OUTDIR`` writes the JSON files that
live under ``fixtures/`` in the repository.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

from . import quaternion as quat
from .graph import Effect, JointSpec, Node, Predicate, PropertyGraph, StateBinding, add_binding

BOUNDS = [[0.0, -0.6, 0.4], [1.1, 0.6, 1.2]]
IDENT = [1.0, 0.0, 0.0, 0.0]


def _yaw(deg):
    return [float(v) for v in quat.about_z(math.radians(deg))]


def _part(g, nid, category, pos, ext, q=IDENT, labels=("object-part",), **extra):
    g.add_node(Node(nid, set(labels), {"category": category, "position": list(pos),
                                       "orientation": list(q), "extent": list(ext), **extra}))


def _gripper(g, pos=(0.31, 0.01, 0.95)):
    _part(g, "gripper", "gripper", pos, (0.01, 0.01, 0.01), labels=("gripper",), holding="", near="")


def _cup(g, nid, pos, yaw_deg=0.0):
    _part(g, nid, "cup", pos, (0.03, 0.03, 0.07), _yaw(yaw_deg), labels=("object",),
          held=False, on="", approach_axis=[0.0, 0.0, 1.0], texture="vertical-stripes")


def drawer_scene(cup_yaw_deg: float = 10.0) -> PropertyGraph:
    g = PropertyGraph("scene")
    _gripper(g)
    _part(g, "cabinet_body", "cabinet", (0.88, 0.0, 0.50), (0.18, 0.26, 0.10), labels=("object",))
    _part(g, "cabinet_top", "panel", (0.88, 0.0, 0.84), (0.18, 0.26, 0.06))
    _part(g, "drawer", "drawer", (0.69, 0.0, 0.69), (0.01, 0.20, 0.07), open=False)
    _part(g, "drawer_handle", "handle", (0.64, 0.01, 0.69), (0.01, 0.05, 0.01),
          approach_axis=[-1.0, 0.0, 0.0])
    _cup(g, "cup_1", (0.85, 0.01, 0.67), cup_yaw_deg)
    _part(g, "table", "table", (0.44, -0.40, 0.56), (0.12, 0.10, 0.04), labels=("object",))
    _cup(g, "cup_2", (0.45, -0.39, 0.67))
    joint = JointSpec("prismatic", (-1.0, 0.0, 0.0), (0.69, 0.0, 0.69), "cabinet_body", "drawer", (0.0, 0.4))
    g.add_edge("cabinet_top", "cabinet_body", "attach")
    g.add_edge("drawer", "cabinet_body", "joint", {"joint_xml": joint.to_xml(), "value": 0.0, "open_value": 0.3})
    g.add_edge("drawer_handle", "drawer", "attach")
    g.add_edge("cup_1", "drawer", "inside")
    g.add_edge("cup_2", "table", "on")
    g.add_edge("table", "cabinet_body", "left_of")
    return g


def door_scene(cup_yaw_deg: float = 15.0) -> PropertyGraph:
    g = PropertyGraph("scene")
    _gripper(g)
    _part(g, "cabinet_body", "cabinet", (0.88, 0.0, 0.49), (0.18, 0.26, 0.03), labels=("object",))
    _part(g, "cabinet_top", "panel", (0.88, 0.0, 0.93), (0.18, 0.26, 0.03))
    _part(g, "cabinet_left", "panel", (0.88, -0.27, 0.71), (0.18, 0.01, 0.25))
    _part(g, "cabinet_right", "panel", (0.88, 0.27, 0.71), (0.18, 0.01, 0.25))
    _part(g, "cabinet_back", "panel", (1.05, 0.0, 0.71), (0.01, 0.26, 0.25))
    _part(g, "cabinet_door", "door", (0.69, 0.0, 0.71), (0.01, 0.26, 0.19), open=False)
    _part(g, "door_handle", "handle", (0.64, 0.19, 0.73), (0.01, 0.01, 0.05),
          approach_axis=[-1.0, 0.0, 0.0])
    _cup(g, "cup_1", (0.87, 0.05, 0.59), cup_yaw_deg)
    _part(g, "table", "table", (0.44, 0.40, 0.56), (0.12, 0.10, 0.04), labels=("object",))
    _cup(g, "cup_2", (0.45, 0.39, 0.67))
    hinge = JointSpec("revolute", (0.0, 0.0, 1.0), (0.69, -0.26, 0.71), "cabinet_body", "cabinet_door",
                      (0.0, math.pi / 2))
    for side in ("cabinet_top", "cabinet_left", "cabinet_right", "cabinet_back"):
        g.add_edge(side, "cabinet_body", "attach")
    g.add_edge("cabinet_door", "cabinet_body", "joint",
               {"joint_xml": hinge.to_xml(), "value": 0.0, "open_value": math.pi / 2})
    g.add_edge("door_handle", "cabinet_door", "attach")
    g.add_edge("cup_1", "cabinet_body", "inside")
    g.add_edge("cup_2", "table", "on")
    g.add_edge("table", "cabinet_body", "right_of")
    return g


def corridor_scene() -> PropertyGraph:
    """A wall with a slot narrower than twice the safety distance."""
    g = PropertyGraph("scene")
    _gripper(g, (0.21, 0.01, 0.79))
    _part(g, "wall_left", "panel", (0.52, -0.33, 0.80), (0.02, 0.30, 0.40), labels=("object",))
    _part(g, "wall_right", "panel", (0.52, 0.33, 0.80), (0.02, 0.30, 0.40), labels=("object",))
    _cup(g, "cup_1", (0.81, 0.01, 0.73))
    g.add_edge("wall_right", "wall_left", "beside")
    return g


PRIMITIVE_BINDINGS = {
    "approach": StateBinding("approach", [Predicate("$actor", "holding", "eq", "")],
                             [Effect("$actor", "near", "$target")]),
    "grasp": StateBinding("grasp", [Predicate("$actor", "holding", "eq", ""),
                                    Predicate("$actor", "near", "eq", "$target")],
                          [Effect("$actor", "holding", "$target")]),
    "pull": StateBinding("pull", [Predicate("$actor", "holding", "eq", "$target"),
                                  Predicate("$body", "open", "eq", False)],
                         [Effect("$body", "open", True)]),
    "release": StateBinding("release", [Predicate("$actor", "holding", "eq", "$target")],
                            [Effect("$actor", "holding", "")]),
    "pick": StateBinding("pick", [Predicate("$actor", "holding", "eq", ""),
                                  Predicate("$actor", "near", "eq", "$target"),
                                  Predicate("$target", "held", "eq", False)],
                         [Effect("$actor", "holding", "$target"), Effect("$target", "held", True)]),
    "move": StateBinding("move", [Predicate("$actor", "held", "eq", True)],
                         [Effect("$gripper", "near", "$target")]),
    "stack": StateBinding("stack", [Predicate("$actor", "held", "eq", True),
                                    Predicate("$target", "held", "eq", False)],
                          [Effect("$actor", "held", False), Effect("$actor", "on", "$target"),
                           Effect("$gripper", "holding", "")]),
}


def state_graph() -> PropertyGraph:
    g = PropertyGraph("state")
    for b in PRIMITIVE_BINDINGS.values():
        add_binding(g, b)
    return g


def drawer_task_graph() -> PropertyGraph:
    g = PropertyGraph("task")
    g.add_node(Node("retrieve_and_stack", {"task"}, {
        "description": "open the drawer, take out the cup and stack it on the cup on the table"}))
    subtasks = {
        "open_drawer": [("approach_handle", "approach", "gripper", "drawer_handle"),
                        ("grasp_handle", "grasp", "gripper", "drawer_handle"),
                        ("pull_handle", "pull", "gripper", "drawer_handle"),
                        ("release_handle", "release", "gripper", "drawer_handle")],
        "retrieve_cup": [("approach_cup", "approach", "gripper", "cup_1"),
                         ("pick_cup", "pick", "gripper", "cup_1")],
        "stack_cup": [("place_cup", "stack", "cup_1", "cup_2")],
    }
    for sid in subtasks:
        g.add_node(Node(sid, {"subtask"}, {}))
    for prims in subtasks.values():
        for pid, prim, actor, target in prims:
            g.add_node(Node(pid, {"action-primitive"}, {"primitive": prim, "actor": actor, "target": target}))
    names = list(subtasks)
    g.add_edge("retrieve_and_stack", names[0], "start")
    for a, b in zip(names, names[1:]):
        g.add_edge(a, b, "next")
    g.add_edge(names[-1], "retrieve_and_stack", "end")
    for sid, prims in subtasks.items():
        ids = [p[0] for p in prims]
        for pid in ids:
            g.add_edge(sid, pid, "contain")
        g.add_edge(sid, ids[0], "start")
        for a, b in zip(ids, ids[1:]):
            g.add_edge(a, b, "next")
        g.add_edge(ids[-1], sid, "end")
    return g


DOOR_PLAN = [
    {"action": "approach", "actor": "gripper", "target": "door_handle"},
    {"action": "grasp", "actor": "gripper", "target": "door_handle"},
    {"action": "pull", "actor": "gripper", "target": "door_handle"},
    {"action": "release", "actor": "gripper", "target": "door_handle"},
    {"action": "approach", "actor": "gripper", "target": "cup_1"},
    {"action": "pick", "actor": "gripper", "target": "cup_1"},
    {"action": "stack", "actor": "cup_1", "target": "cup_2"},
]

DOOR_NOTES = [
    "only use actions from the library",
    "the cabinet door rotates about a vertical hinge, so pulling it follows an arc",
    "release the handle before picking up the cup",
]


def door_mock_script() -> dict:
    body = json.dumps(DOOR_PLAN, indent=2)
    return {"0": "The drawer routine carries over to the hinged door.\n```json\n" + body + "\n```\n"
                 "The pull on door_handle swings the door open about its hinge."}


def _doc(scene, scenario) -> dict:
    return {"graphs": {"task": drawer_task_graph().to_dict(), "scene": scene.to_dict(),
                       "state": state_graph().to_dict()},
            "scenario": scenario}


def drawer_document() -> dict:
    return _doc(drawer_scene(), {
        "name": "drawer", "gripper": "gripper", "bounds": BOUNDS,
        "plan": {"source": "reference"},
        "target_orientation": IDENT,
        "config": {},
    })


def door_document() -> dict:
    return _doc(door_scene(), {
        "name": "door", "gripper": "gripper", "bounds": BOUNDS,
        "plan": {"source": "transfer"},
        "transfer": {"task_description": "open the cabinet door, take out the cup and stack it on the cup on the table",
                     "notes": DOOR_NOTES, "mock_script": "door_mock.json"},
        "target_orientation": IDENT,
        "config": {},
    })


def corridor_document() -> dict:
    return _doc(corridor_scene(), {
        "name": "corridor", "gripper": "gripper", "bounds": [[0.0, -0.4, 0.4], [1.0, 0.4, 1.2]],
        "plan": {"source": "explicit",
                 "steps": [{"action": "approach", "actor": "gripper", "target": "cup_1"}]},
        "config": {"planner": {"hard_check": False}},
    })


def write_fixtures(outdir) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"drawer.json": drawer_document(), "door.json": door_document(),
             "corridor.json": corridor_document(), "door_mock.json": door_mock_script()}
    paths = []
    for name, doc in files.items():
        p = out / name
        p.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        paths.append(p)
    return paths


if __name__ == "__main__":
    for p in write_fixtures(sys.argv[1] if len(sys.argv) > 1 else "fixtures"):
        print(p)
