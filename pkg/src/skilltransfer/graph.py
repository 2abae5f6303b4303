"""In-process property graphs for the task, scene and state layers of a skill library."""

from __future__ import annotations

import copy
import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import quaternion as quat

SPATIAL_RELATIONS = frozenset({
    "inside", "on", "beside", "above", "below", "near",
    "in_front_of", "behind", "left_of", "right_of",
})

RELATIONS = {
    "task": frozenset({"start", "next", "end", "contain"}),
    "scene": frozenset({"joint", "attach"}) | SPATIAL_RELATIONS,
    "state": frozenset({"require", "obtain", "next"}),
}

COMPARATORS = ("eq", "neq", "lt", "gt")

DEFAULT_LIMITS = {"prismatic": (0.0, 0.4), "revolute": (0.0, math.pi / 2), "fixed": (0.0, 0.0)}


class GraphError(Exception):
    code = "graph-error"


class DuplicateId(GraphError):
    code = "duplicate-id"


class DanglingEndpoint(GraphError):
    code = "dangling-endpoint"


class RelationNotAllowed(GraphError):
    code = "relation-not-allowed"


class InvalidAttribute(GraphError):
    code = "invalid-attribute"


class JointSpecError(GraphError):
    code = "invalid-joint"


class SchemaError(GraphError):
    code = "schema-violation"


class UnknownSubtask(GraphError):
    code = "unknown-subtask"


class UnresolvableSubject(GraphError):
    code = "unresolvable-subject"


class RequireUnsatisfied(GraphError):
    code = "require-unsatisfied"

    def __init__(self, message, failing=()):
        super().__init__(message)
        self.failing = list(failing)


@dataclass
class Node:
    id: str
    labels: set[str] = field(default_factory=set)
    attributes: dict[str, Any] = field(default_factory=dict)

    def get(self, key, default=None):
        return self.attributes.get(key, default)

    def to_dict(self) -> dict:
        return {"id": self.id, "labels": sorted(self.labels), "attributes": self.attributes}


@dataclass
class Edge:
    id: str
    source: str
    target: str
    relation: str
    attributes: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "from": self.source, "to": self.target,
                "relation": self.relation, "attributes": self.attributes}


@dataclass(frozen=True)
class JointSpec:
    joint_type: str
    axis: tuple[float, float, float]
    origin: tuple[float, float, float]
    parent: str
    child: str
    limits: tuple[float, float]

    def to_xml(self) -> str:
        f = lambda v: " ".join(repr(float(x)) for x in v)
        return (f'<joint type="{self.joint_type}"><axis xyz="{f(self.axis)}"/>'
                f'<origin xyz="{f(self.origin)}"/><parent link="{self.parent}"/>'
                f'<child link="{self.child}"/>'
                f'<limit lower="{float(self.limits[0])!r}" upper="{float(self.limits[1])!r}"/></joint>')


def _xyz(elem, what) -> tuple[float, float, float]:
    raw = elem.get("xyz")
    if raw is None:
        raise JointSpecError(f"{what} element has no xyz attribute")
    try:
        vals = tuple(float(t) for t in raw.split())
    except ValueError:
        raise JointSpecError(f"{what} xyz is not numeric: {raw!r}") from None
    if len(vals) != 3 or not all(math.isfinite(v) for v in vals):
        raise JointSpecError(f"{what} xyz needs three finite numbers: {raw!r}")
    return vals


def parse_joint_spec(xml_text: str, limits: dict | None = None) -> JointSpec:
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise JointSpecError(f"malformed joint XML: {exc}") from None
    if root.tag != "joint":
        joint = root.find(".//joint")
        if joint is None:
            raise JointSpecError("no <joint> element")
        root = joint
    jtype = root.get("type")
    if jtype not in DEFAULT_LIMITS:
        raise JointSpecError(f"unknown joint type {jtype!r}")

    axis_el = root.find("axis")
    if axis_el is None:
        raise JointSpecError("joint is missing <axis>")
    axis = np.array(_xyz(axis_el, "axis"))
    n = np.linalg.norm(axis)
    if n == 0:
        raise JointSpecError("joint axis is zero")
    if abs(n - 1.0) > 1e-12:  # leave already-unit axes alone so XML round trips are exact
        axis = axis / n
    axis = tuple(float(v) for v in axis)

    origin_el = root.find("origin")
    origin = _xyz(origin_el, "origin") if origin_el is not None else (0.0, 0.0, 0.0)

    links = {}
    for role in ("parent", "child"):
        el = root.find(role)
        name = el.get("link") if el is not None else None
        if not name:
            raise JointSpecError(f"joint is missing <{role}>")
        links[role] = name

    lo, hi = (limits or DEFAULT_LIMITS)[jtype]
    lim_el = root.find("limit")
    if lim_el is not None:
        try:
            lo = float(lim_el.get("lower", lo))
            hi = float(lim_el.get("upper", hi))
        except ValueError:
            raise JointSpecError("joint limits are not numeric") from None
    if lo > hi:
        raise JointSpecError(f"joint limits out of order: [{lo}, {hi}]")
    return JointSpec(jtype, axis, tuple(float(v) for v in origin), links["parent"], links["child"], (lo, hi))


def _check_scene_node(node: Node):
    a = node.attributes
    if "position" in a:
        p = a["position"]
        if not (isinstance(p, (list, tuple)) and len(p) == 3
                and all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in p)):
            raise InvalidAttribute(f"node {node.id}: position must be three finite numbers")
    if "orientation" in a:
        q = a["orientation"]
        if not (isinstance(q, (list, tuple)) and len(q) == 4) or not quat.is_unit(q, 1e-9):
            raise InvalidAttribute(f"node {node.id}: invalid-quaternion {q!r}")
    if "extent" in a:
        e = a["extent"]
        if not (isinstance(e, (list, tuple)) and len(e) == 3
                and all(isinstance(v, (int, float)) and math.isfinite(v) and v > 0 for v in e)):
            raise InvalidAttribute(f"node {node.id}: extent must be three positive numbers")


class PropertyGraph:
    """Typed nodes and edges with attribute maps.

    Node ids must not contain hyphens so that triples stay splittable.
    """

    def __init__(self, kind: str = "scene"):
        if kind not in RELATIONS:
            raise GraphError(f"unknown graph kind {kind!r}")
        self.kind = kind
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self._next_edge = 1

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, node_id):
        return node_id in self.nodes

    def __eq__(self, other):
        return isinstance(other, PropertyGraph) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"PropertyGraph({self.kind!r}, {len(self.nodes)} nodes, {len(self.edges)} edges)"

    def _validate_node(self, node: Node):
        if not isinstance(node.id, str) or not node.id:
            raise InvalidAttribute("node id must be a non-empty string")
        if "-" in node.id:
            raise InvalidAttribute(f"node id {node.id!r} contains a hyphen")
        if self.kind == "scene":
            _check_scene_node(node)

    def _validate_edge(self, edge: Edge):
        for end in (edge.source, edge.target):
            if end not in self.nodes:
                raise DanglingEndpoint(f"edge {edge.id}: endpoint {end!r} does not exist")
        if edge.relation not in RELATIONS[self.kind]:
            raise RelationNotAllowed(f"edge {edge.id}: relation {edge.relation!r} not allowed in a {self.kind} graph")
        if self.kind == "task" and edge.relation == "contain":
            src, dst = self.nodes[edge.source], self.nodes[edge.target]
            if "subtask" not in src.labels or "action-primitive" not in dst.labels:
                raise RelationNotAllowed(f"edge {edge.id}: contain must link a subtask to an action-primitive")
        if edge.relation == "joint":
            xml = edge.attributes.get("joint_xml")
            if not isinstance(xml, str):
                raise JointSpecError(f"edge {edge.id}: joint edge needs a joint_xml attribute")
            spec = parse_joint_spec(xml)
            if spec.child != edge.source or spec.parent != edge.target:
                raise JointSpecError(f"edge {edge.id}: joint child/parent do not match edge endpoints")

    def add_node(self, node: Node | str, labels: Iterable[str] = (), **attributes) -> str:
        if isinstance(node, str):
            node = Node(node, set(labels), dict(attributes))
        node = Node(node.id, set(node.labels), copy.deepcopy(node.attributes))
        if node.id in self.nodes:
            raise DuplicateId(f"node {node.id!r} already exists")
        self._validate_node(node)
        self.nodes[node.id] = node
        return node.id

    def add_edge(self, source: str, target: str, relation: str, attrs: dict | None = None,
                 edge_id: str | None = None) -> str:
        if edge_id is None:
            while f"e{self._next_edge:04d}" in self.edges:
                self._next_edge += 1
            edge_id = f"e{self._next_edge:04d}"
        elif edge_id in self.edges:
            raise DuplicateId(f"edge {edge_id!r} already exists")
        edge = Edge(edge_id, source, target, relation, copy.deepcopy(dict(attrs or {})))
        self._validate_edge(edge)
        self.edges[edge_id] = edge
        return edge_id

    def node(self, node_id: str) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise GraphError(f"no node {node_id!r}") from None

    def out_edges(self, node_id: str, relation: str | None = None) -> list[Edge]:
        return [e for e in self.edges.values()
                if e.source == node_id and (relation is None or e.relation == relation)]

    def in_edges(self, node_id: str, relation: str | None = None) -> list[Edge]:
        return [e for e in self.edges.values()
                if e.target == node_id and (relation is None or e.relation == relation)]

    def set_attribute(self, subject: str, key: str, value):
        if subject in self.nodes:
            n = self.nodes[subject]
            trial = Node(n.id, n.labels, {**n.attributes, key: copy.deepcopy(value)})
            self._validate_node(trial)
            n.attributes[key] = trial.attributes[key]
        elif subject in self.edges:
            self.edges[subject].attributes[key] = copy.deepcopy(value)
        else:
            raise UnresolvableSubject(f"subject {subject!r} not found in {self.kind} graph")

    def get_attribute(self, subject: str, key: str):
        if subject in self.nodes:
            return self.nodes[subject].attributes.get(key)
        if subject in self.edges:
            return self.edges[subject].attributes.get(key)
        raise UnresolvableSubject(f"subject {subject!r} not found in {self.kind} graph")

    def joint_spec(self, edge_id: str) -> JointSpec:
        return parse_joint_spec(self.edges[edge_id].attributes["joint_xml"])

    def copy(self) -> "PropertyGraph":
        return copy.deepcopy(self)

    def validate(self):
        for n in self.nodes.values():
            self._validate_node(n)
        for e in self.edges.values():
            self._validate_edge(e)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "nodes": [n.to_dict() for n in self.nodes.values()],
            "edges": [e.to_dict() for e in self.edges.values()],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "PropertyGraph":
        if not isinstance(doc, dict):
            raise SchemaError("graph document must be a JSON object")
        g = cls(doc.get("kind", "scene"))
        for i, nd in enumerate(doc.get("nodes", [])):
            if not isinstance(nd, dict) or "id" not in nd:
                raise SchemaError(f"node #{i} has no id")
            labels = nd.get("labels", [])
            attrs = nd.get("attributes", {})
            if not isinstance(labels, list) or not isinstance(attrs, dict):
                raise SchemaError(f"node {nd['id']}: labels must be a list and attributes an object")
            try:
                g.add_node(Node(nd["id"], set(labels), attrs))
            except GraphError as exc:
                raise SchemaError(f"node {nd['id']}: {exc}") from None
        for i, ed in enumerate(doc.get("edges", [])):
            if not isinstance(ed, dict) or "id" not in ed:
                raise SchemaError(f"edge #{i} has no id")
            missing = [k for k in ("from", "to", "relation") if k not in ed]
            if missing:
                raise SchemaError(f"edge {ed['id']}: missing {', '.join(missing)}")
            try:
                g.add_edge(ed["from"], ed["to"], ed["relation"], ed.get("attributes", {}), edge_id=ed["id"])
            except GraphError as exc:
                raise SchemaError(f"edge {ed['id']}: {exc}") from None
        return g


def add_node(graph: PropertyGraph, node: Node) -> str:
    return graph.add_node(node)


def add_edge(graph: PropertyGraph, source: str, target: str, relation: str, attrs: dict | None = None) -> str:
    return graph.add_edge(source, target, relation, attrs)


def export_triples(graph: PropertyGraph) -> list[str]:
    return [f"{e.source}-{e.relation}-{e.target}" for _, e in sorted(graph.edges.items())]


def save_graph(graph: PropertyGraph, path):
    Path(path).write_text(graph.dumps(), encoding="utf-8")


def load_graph(path) -> PropertyGraph:
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return PropertyGraph("scene")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return PropertyGraph.from_dict(doc)


# --- require / obtain -------------------------------------------------------

@dataclass(frozen=True)
class Predicate:
    subject: str
    attribute: str
    comparator: str
    value: Any

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise GraphError(f"unknown comparator {self.comparator!r}")


@dataclass(frozen=True)
class Effect:
    subject: str
    attribute: str
    value: Any


@dataclass
class StateBinding:
    subtask_id: str
    require: list[Predicate] = field(default_factory=list)
    obtain: list[Effect] = field(default_factory=list)


@dataclass
class PredicateResult:
    predicate: Predicate
    actual: Any
    satisfied: bool


@dataclass
class RequireReport:
    subtask_id: str
    results: list[PredicateResult]

    @property
    def satisfied(self) -> bool:
        return all(r.satisfied for r in self.results)

    @property
    def failing(self) -> list[PredicateResult]:
        return [r for r in self.results if not r.satisfied]

    def describe(self) -> str:
        return "; ".join(
            f"{r.predicate.subject}.{r.predicate.attribute} {r.predicate.comparator} "
            f"{r.predicate.value!r} (actual {r.actual!r})" for r in self.failing)


def add_binding(state: PropertyGraph, binding: StateBinding) -> str:
    return state.add_node(Node(binding.subtask_id, {"binding"}, {
        "require": [[p.subject, p.attribute, p.comparator, p.value] for p in binding.require],
        "obtain": [[e.subject, e.attribute, e.value] for e in binding.obtain],
    }))


def get_binding(state: PropertyGraph, subtask_id: str) -> StateBinding:
    node = state.nodes.get(subtask_id)
    if node is None or ("require" not in node.attributes and "obtain" not in node.attributes):
        raise UnknownSubtask(f"no state binding for subtask {subtask_id!r}")
    return StateBinding(
        subtask_id,
        [Predicate(*p) for p in node.attributes.get("require", [])],
        [Effect(*e) for e in node.attributes.get("obtain", [])],
    )


def bindings(state: PropertyGraph) -> list[StateBinding]:
    return [get_binding(state, nid) for nid, n in state.nodes.items()
            if "require" in n.attributes or "obtain" in n.attributes]


def _substitute(value, context):
    if context and isinstance(value, str) and value in context:
        return context[value]
    return value


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _compare(actual, comparator, value) -> bool:
    if comparator == "eq":
        if _is_number(actual) and _is_number(value):
            return actual == value
        return type(actual) is type(value) and actual == value
    if comparator == "neq":
        return not _compare(actual, "eq", value)
    try:
        return bool(actual < value) if comparator == "lt" else bool(actual > value)
    except TypeError:
        return False


def query_require(state: PropertyGraph, scene: PropertyGraph, subtask_id: str,
                  context: dict | None = None) -> RequireReport:
    """Evaluate a subtask's preconditions against live scene values.

    ``context`` maps placeholders such as ``$actor`` to scene ids.
    """
    binding = get_binding(state, subtask_id)
    results = []
    for p in binding.require:
        subject = _substitute(p.subject, context)
        value = _substitute(p.value, context)
        actual = scene.get_attribute(subject, p.attribute)
        results.append(PredicateResult(Predicate(subject, p.attribute, p.comparator, value),
                                       actual, _compare(actual, p.comparator, value)))
    return RequireReport(subtask_id, results)


def apply_obtain(state: PropertyGraph, scene: PropertyGraph, subtask_id: str,
                 context: dict | None = None) -> PropertyGraph:
    """Return a copy of ``scene`` with the subtask's effects applied (all or none)."""
    report = query_require(state, scene, subtask_id, context)
    if not report.satisfied:
        raise RequireUnsatisfied(f"{subtask_id}: {report.describe()}", report.failing)
    binding = get_binding(state, subtask_id)
    out = scene.copy()
    for e in binding.obtain:
        subject = _substitute(e.subject, context)
        if subject not in out.nodes and subject not in out.edges:
            raise UnresolvableSubject(f"{subtask_id}: effect subject {subject!r} not in scene graph")
        out.set_attribute(subject, e.attribute, _substitute(e.value, context))
    return out


@dataclass
class SkillLibrary:
    task: PropertyGraph
    scene: PropertyGraph
    state: PropertyGraph
