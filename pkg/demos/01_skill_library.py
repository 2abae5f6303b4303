"""A skill library is three property graphs: what to do, what is there, and what must hold.

Run: python3 demos/01_skill_library.py
"""
# %%
from skilltransfer.fixtures import drawer_scene, drawer_task_graph, state_graph
from skilltransfer.graph import export_triples, get_binding, query_require, apply_obtain
from skilltransfer.transfer import reference_plan

task, scene, state = drawer_task_graph(), drawer_scene(), state_graph()
print(f"task graph: {len(task.nodes)} nodes, scene graph: {len(scene.nodes)} nodes")

# %% [markdown]
# The scene graph flattens to ``a-rel-b`` triples, the form handed to a language model.

# %%
for t in export_triples(scene):
    print("  ", t)

# %% [markdown]
# Walking start/next/contain edges of the task graph gives the reference plan.

# %%
plan = reference_plan(task)
for i, s in enumerate(plan):
    print(f"{i}: {s.action:9s} {s.actor} -> {s.target}")

# %% [markdown]
# Every primitive carries preconditions (require) and effects (obtain). A pull
# needs the handle held and the drawer shut; the drawer here is reached as ``$body``.

# %%
b = get_binding(state, "pull")
print("require:", [(p.subject, p.attribute, p.comparator, p.value) for p in b.require])
print("obtain: ", [(e.subject, e.attribute, e.value) for e in b.obtain])

ctx = {"$actor": "gripper", "$target": "drawer_handle", "$gripper": "gripper", "$body": "drawer"}
print("pull ready at start?", query_require(state, scene, "pull", ctx).satisfied)
scene = scene.copy()
scene.set_attribute("gripper", "holding", "drawer_handle")
print("pull ready once holding the handle?", query_require(state, scene, "pull", ctx).satisfied)
after = apply_obtain(state, scene, "pull", ctx)
print("drawer.open after pull:", after.get_attribute("drawer", "open"))
