"""Transfer the drawer routine to a hinged cabinet door.

The four prompt stages are sent as one conversation. With no API key set the
scripted mock provider stands in; set SKILL_LLM_BASE_URL and SKILL_LLM_API_KEY
and pass ``--http`` to ask a real chat-completions endpoint instead.

Run: python3 demos/02_task_transfer.py [--http]
"""
# %%
import sys
from pathlib import Path

from skilltransfer.sim import load_scenario
from skilltransfer.transfer import HttpProvider, MockProvider, build_stage_prompts, reference_plan, transfer_task
from skilltransfer.graph import bindings

FIX = Path(__file__).resolve().parents[1] / "fixtures"
scn = load_scenario(FIX / "door.json")
lib, tr = scn.library, scn.transfer
ref = reference_plan(lib.task)

# %% [markdown]
# The stages: library code, scene triples, the new task, then notes. Only the
# first lines of each are printed here.

# %%
stages = build_stage_prompts(lib.task, lib.scene, bindings(lib.state), ref, tr["task_description"], tr["notes"])
for st in stages:
    role, text = st.messages[-1]
    print(f"--- stage {st.index} ({role}, {len(text)} chars)")
    for line in text.splitlines()[:3]:
        print("   ", line[:100])

# %%
if "--http" in sys.argv:
    provider = HttpProvider()
else:
    provider = MockProvider.from_file(FIX / tr["mock_script"])
resp = transfer_task(provider, lib, ref, tr["task_description"], tr["notes"])
print("\ntransferred plan:")
for i, s in enumerate(resp.plan):
    print(f"{i}: {s.action:9s} {s.actor} -> {s.target}")
