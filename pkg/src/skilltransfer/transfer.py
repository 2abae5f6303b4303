"""Subtask sequences: prompt staging, chat providers, plan parsing and validation."""

from __future__ import annotations

import json
import os
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

from .graph import PropertyGraph, SkillLibrary, StateBinding, bindings, export_triples

API_KEY_ENV = "SKILL_LLM_API_KEY"
BASE_URL_ENV = "SKILL_LLM_BASE_URL"
PLAN_KEYS = ("action", "actor", "target")


class TransferError(Exception):
    code = "transfer-error"


class PlanParseError(TransferError):
    code = "plan-unparseable"

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics) or [message]


class EmptyPlan(PlanParseError):
    code = "empty-plan"


class PlanInvalid(TransferError):
    code = "plan-invalid-after-retry"

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class ProviderError(TransferError):
    code = "provider-error"


class ProviderUnreachable(ProviderError):
    code = "provider-unreachable"


@dataclass(frozen=True)
class Subtask:
    action: str
    actor: str
    target: str

    def to_dict(self) -> dict:
        return {"action": self.action, "actor": self.actor, "target": self.target}

    @classmethod
    def from_dict(cls, d: dict) -> "Subtask":
        return cls(str(d["action"]), str(d["actor"]), str(d["target"]))


@dataclass
class PromptStage:
    index: int
    messages: list[tuple[str, str]]


@dataclass
class PlanResponse:
    raw_text: str
    plan: list[Subtask]
    diagnostics: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"plan": [s.to_dict() for s in self.plan], "diagnostics": self.diagnostics,
                "raw_text": self.raw_text}


@dataclass(frozen=True)
class Violation:
    index: int
    kind: str
    detail: str

    def to_dict(self) -> dict:
        return {"index": self.index, "kind": self.kind, "detail": self.detail}

    def __str__(self):
        return f"step {self.index}: {self.kind} ({self.detail})"


# --- task graph helpers ------------------------------------------------------

def _follow(graph: PropertyGraph, node_id: str, relation: str) -> str | None:
    out = graph.out_edges(node_id, relation)
    return out[0].target if out else None


def _chain(graph: PropertyGraph, head: str) -> list[str]:
    """Nodes reached from ``head`` by a start edge and then next edges."""
    seq = []
    cur = _follow(graph, head, "start")
    while cur is not None and cur != head:
        if cur in seq:
            raise TransferError(f"cycle in next chain at {cur!r}")
        seq.append(cur)
        cur = _follow(graph, cur, "next")
    return seq


def reference_plan(task: PropertyGraph, root: str | None = None) -> list[Subtask]:
    """Walk task -> subtasks -> primitives and read each primitive's binding."""
    if root is None:
        roots = [n.id for n in task.nodes.values() if "task" in n.labels]
        if not roots:
            raise TransferError("task graph has no node labelled 'task'")
        root = roots[0]
    plan = []
    for sub in _chain(task, root):
        for prim in _chain(task, sub):
            a = task.nodes[prim].attributes
            plan.append(Subtask(a["primitive"], a["actor"], a["target"]))
    return plan


def action_vocabulary(task: PropertyGraph) -> set[str]:
    return {n.attributes["primitive"] for n in task.nodes.values()
            if "action-primitive" in n.labels and "primitive" in n.attributes}


# --- prompts -------------------------------------------------------------------

def _fmt_attrs(attrs: dict) -> str:
    return json.dumps(attrs, sort_keys=True, separators=(", ", ": "))


def render_graph_code(graph: PropertyGraph) -> list[str]:
    lines = []
    for n in graph.nodes.values():
        lines.append(f"NODE {n.id} {_fmt_attrs({'labels': sorted(n.labels), **n.attributes})}")
    for e in graph.edges.values():
        lines.append(f"EDGE {e.source} -{e.relation}-> {e.target} {_fmt_attrs(e.attributes)}")
    return lines


def _describe_binding(b: StateBinding) -> str:
    req = ", ".join(f"{p.subject}.{p.attribute} {p.comparator} {json.dumps(p.value)}" for p in b.require) or "nothing"
    obt = ", ".join(f"{e.subject}.{e.attribute} := {json.dumps(e.value)}" for e in b.obtain) or "nothing"
    return f"- {b.subtask_id}: require {req}; obtain {obt}"


SYSTEM_PROMPT = (
    "You plan manipulation tasks for a single-arm robot. You reuse a skill library stored as "
    "graphs and answer with subtask sequences that the robot can execute directly."
)

OUTPUT_CONTRACT = (
    "Answer with a JSON array only. Each element is an object with the keys "
    '"action", "actor" and "target". "action" must be one of the library actions, '
    '"actor" and "target" must be node ids of the scene graph and must differ.'
)


def build_stage_prompts(task: PropertyGraph, scene: PropertyGraph, state_bindings: list[StateBinding],
                        reference: list[Subtask], description: str, notes: list[str]) -> list[PromptStage]:
    if not reference:
        raise TransferError("reference plan is empty")
    if not description or not description.strip():
        raise TransferError("task description is empty")

    s1 = "\n".join([
        f"New task: {description.strip()}",
        "Placeholders: $actor and $target are the subtask's objects, $gripper is the end effector, "
        "$body is the part the target is attached to.",
        "State graph (preconditions and effects of each action):",
        *[_describe_binding(b) for b in sorted(state_bindings, key=lambda b: b.subtask_id)],
    ])
    s2 = "\n".join([
        "Skill library as graph construction statements.",
        "Task graph:", *render_graph_code(task),
        "Scene graph:", *render_graph_code(scene),
    ])
    triples = export_triples(scene)
    s3_intro = ("Spatial and functional relations of the current scene follow, one per line, "
                "written as Object1-ConnectionType-Object2.")
    vocab = sorted(action_vocabulary(task))
    s4 = "\n".join([
        "Reference plan of the known task:",
        json.dumps([s.to_dict() for s in reference]),
        f"Plan the new task: {description.strip()}",
        f"Available actions: {', '.join(vocab)}",
        "Notes:",
        *[f"- {n}" for n in notes],
        OUTPUT_CONTRACT,
    ])
    return [
        PromptStage(1, [("system", SYSTEM_PROMPT), ("user", s1)]),
        PromptStage(2, [("user", s2)]),
        PromptStage(3, [("user", s3_intro), ("user", "\n".join(triples) or "(no relations)")]),
        PromptStage(4, [("user", s4)]),
    ]


# --- parsing and validation ------------------------------------------------------

def parse_plan_response(raw_text: str) -> PlanResponse:
    decoder = json.JSONDecoder()
    pos = raw_text.find("[")
    while pos != -1:
        try:
            value, _ = decoder.raw_decode(raw_text, pos)
        except json.JSONDecodeError:
            value = None
        if isinstance(value, list) and all(isinstance(v, dict) for v in value):
            if not value:
                raise EmptyPlan("plan array is empty")
            plan = []
            for i, item in enumerate(value):
                missing = [k for k in PLAN_KEYS if k not in item]
                if missing:
                    raise PlanParseError(f"element {i} is missing {', '.join(missing)}",
                                         [f"element {i}: missing key {k!r}" for k in missing])
                plan.append(Subtask.from_dict(item))
            return PlanResponse(raw_text, plan, [])
        pos = raw_text.find("[", pos + 1)
    raise PlanParseError("no JSON array of subtasks found in response")


def validate_plan(plan: list[Subtask], task: PropertyGraph, scene: PropertyGraph) -> list[Violation]:
    vocab = action_vocabulary(task)
    out = []
    for i, s in enumerate(plan):
        if s.action not in vocab:
            out.append(Violation(i, "unknown-action", s.action))
        for role in ("actor", "target"):
            ref = getattr(s, role)
            if ref not in scene.nodes:
                out.append(Violation(i, "unknown-node", f"{role} {ref}"))
        if s.actor == s.target:
            out.append(Violation(i, "actor-equals-target", s.actor))
    return out


# --- providers ---------------------------------------------------------------------

class MockProvider:
    """Replays canned responses keyed by call index ("0", "1", ...)."""

    def __init__(self, script: dict[str, str]):
        self.script = {str(k): v for k, v in script.items()}
        self.calls = 0
        self.transcripts: list[list[dict]] = []

    @classmethod
    def from_file(cls, path) -> "MockProvider":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ProviderError("mock script must be a JSON object")
        return cls(doc)

    def complete(self, messages: list[dict]) -> str:
        self.transcripts.append([dict(m) for m in messages])
        key = str(self.calls)
        self.calls += 1
        if key not in self.script:
            raise ProviderError(f"mock script has no response for call {key}")
        return self.script[key]


class HttpProvider:
    def __init__(self, base_url: str | None = None, model: str = "gpt-4o", api_key: str | None = None,
                 timeout: float = 60.0):
        self.base_url = base_url or os.environ.get(BASE_URL_ENV)
        if not self.base_url:
            raise ProviderError(f"no base URL given and {BASE_URL_ENV} is unset")
        self.model = model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout

    @property
    def endpoint(self) -> str:
        url = self.base_url.rstrip("/")
        return url if url.endswith("/chat/completions") else url + "/chat/completions"

    def complete(self, messages: list[dict]) -> str:
        body = json.dumps({"model": self.model, "messages": messages, "temperature": 0}).encode()
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        req = urllib.request.Request(self.endpoint, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except (socket.timeout, TimeoutError) as exc:
            raise ProviderUnreachable(f"provider timed out: {exc}") from None
        except urllib.error.HTTPError as exc:
            raise ProviderError(f"provider returned HTTP {exc.code}") from None
        except urllib.error.URLError as exc:
            raise ProviderUnreachable(f"provider unreachable: {exc.reason}") from None
        except json.JSONDecodeError:
            raise ProviderError("provider returned invalid JSON") from None
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ProviderError("provider response lacks choices[0].message.content") from None


# --- end to end ----------------------------------------------------------------------

def stage_messages(stages: list[PromptStage]) -> list[dict]:
    return [{"role": role, "content": text} for st in stages for role, text in st.messages]


def _attempt(text: str, library: SkillLibrary) -> tuple[PlanResponse | None, list[str]]:
    try:
        resp = parse_plan_response(text)
    except PlanParseError as exc:
        return None, exc.diagnostics
    problems = validate_plan(resp.plan, library.task, library.scene)
    return resp, [str(v) for v in problems]


def transfer_task(provider, library: SkillLibrary, reference: list[Subtask], description: str,
                  notes: list[str]) -> PlanResponse:
    """Run the four prompt stages as one conversation, with one corrective retry."""
    stages = build_stage_prompts(library.task, library.scene, bindings(library.state),
                                 reference, description, notes)
    messages = stage_messages(stages)
    text = provider.complete(messages)
    resp, problems = _attempt(text, library)
    if resp is not None and not problems:
        return resp
    first = problems
    messages = messages + [
        {"role": "assistant", "content": text},
        {"role": "user", "content": "Your answer could not be used:\n"
         + "\n".join(f"- {p}" for p in problems) + "\n" + OUTPUT_CONTRACT},
    ]
    text = provider.complete(messages)
    resp, problems = _attempt(text, library)
    if resp is not None and not problems:
        resp.diagnostics = [f"retry after: {p}" for p in first]
        return resp
    raise PlanInvalid("plan invalid after retry", first + problems)
