"""
Feature spaces, tree models, samples and root-to-leaf paths.

A model file is UTF-8 JSON:

    {
      "features": [{"name": "x1", "domain": [0, 1]}, ...],
      "task": "regression" | "classification",
      "classes": ["no", "yes"],              # classification only
      "root": 1,
      "nodes": [
        {"id": 1, "feature": "x1", "edges": [{"values": [1], "child": 3}, ...]},
        {"id": 3, "leaf": "1/2"},
        ...
      ]
    }

Regression leaves are integers or "p/q" strings; classification leaves
name one of the declared classes. An instance file is
{"point": {name: value, ...}, "output": optional}.
"""

import itertools
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from .serialization import format_rational, parse_rational

logger = logging.getLogger(__name__)

Value = Union[int, str]
Output = Union[Fraction, str]
Point = Tuple[Value, ...]

REGRESSION = "regression"
CLASSIFICATION = "classification"
TASKS = (REGRESSION, CLASSIFICATION)

ORDINAL = "ordinal"
CATEGORICAL = "categorical"
KINDS = (ORDINAL, CATEGORICAL)


class ModelError(ValueError):
    """Base class for model file problems."""


class ModelSyntaxError(ModelError):
    def __init__(self, message: str, position: Optional[str] = None):
        self.position = position
        super().__init__(f"{message} (at {position})" if position else message)


class ModelValidationError(ModelError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"{invariant}: {detail}" if detail else invariant)


class DomainError(ValueError):
    """A coordinate lies outside its feature's domain."""


class InstanceError(ValueError):
    """Malformed instance file or a stale declared output."""


def _is_value(raw) -> bool:
    return isinstance(raw, (int, str)) and not isinstance(raw, bool)


# ──────────────────────────────────────────────
# Feature space
# ──────────────────────────────────────────────

@dataclass(frozen=True)
class FeatureDecl:
    id: int
    name: str
    domain: Tuple[Value, ...]
    kind: str = ORDINAL

    @cached_property
    def _positions(self) -> Dict[Value, int]:
        return {value: pos for pos, value in enumerate(self.domain)}

    def __contains__(self, value) -> bool:
        return _is_value(value) and value in self._positions

    def position(self, value) -> int:
        if value not in self:
            raise DomainError(f"{value!r} is not in the domain of {self.name}")
        return self._positions[value]

    def ordered(self, values: Iterable[Value]) -> List[Value]:
        """Values sorted in domain order."""
        return sorted(values, key=self.position)

    def distance(self, a: Value, b: Value) -> Fraction:
        """Per-coordinate distance: Hamming for categorical, |a - b| for ordinal."""
        if self.kind == CATEGORICAL:
            return Fraction(0 if a == b else 1)
        return Fraction(abs(a - b))


@dataclass(frozen=True)
class FeatureSpace:
    features: Tuple[FeatureDecl, ...]

    def __post_init__(self):
        if not self.features:
            raise ModelValidationError("empty feature space")
        seen = set()
        for pos, decl in enumerate(self.features, 1):
            if decl.id != pos:
                raise ModelValidationError("duplicate feature", f"feature ids must be 1..m, got {decl.id} at {pos}")
            if decl.name in seen:
                raise ModelValidationError("duplicate feature", decl.name)
            seen.add(decl.name)
            if not decl.domain:
                raise ModelValidationError("empty domain", decl.name)
            if len(set(decl.domain)) != len(decl.domain):
                raise ModelValidationError("duplicate value", decl.name)
            if decl.kind not in KINDS:
                raise ModelValidationError("unknown feature kind", f"{decl.name}: {decl.kind}")
            if decl.kind == ORDINAL and not all(isinstance(v, int) for v in decl.domain):
                raise ModelValidationError("ordinal domain must be integer", decl.name)

    @property
    def m(self) -> int:
        return len(self.features)

    @property
    def ids(self) -> FrozenSet[int]:
        return frozenset(decl.id for decl in self.features)

    @property
    def size(self) -> int:
        """|𝔽|, the number of points; Python ints do not overflow."""
        total = 1
        for decl in self.features:
            total *= len(decl.domain)
        return total

    def feature(self, feature_id: int) -> FeatureDecl:
        if not 1 <= feature_id <= self.m:
            raise ModelValidationError("unknown feature", str(feature_id))
        return self.features[feature_id - 1]

    def by_name(self, name: str) -> FeatureDecl:
        for decl in self.features:
            if decl.name == name:
                return decl
        raise ModelValidationError("unknown feature", name)

    def check_point(self, x) -> Point:
        x = tuple(x)
        if len(x) != self.m:
            raise DomainError(f"point has {len(x)} coordinates, expected {self.m}")
        for decl, value in zip(self.features, x):
            if value not in decl:
                raise DomainError(f"{value!r} is not in the domain of {decl.name}")
        return x

    def points(self) -> Iterator[Point]:
        return itertools.product(*(decl.domain for decl in self.features))

    def point_key(self, x: Point) -> Tuple[int, ...]:
        """Lexicographic sort key on domain order."""
        return tuple(decl.position(value) for decl, value in zip(self.features, x))

    def format_point(self, x: Point) -> str:
        return "(" + ",".join(str(value) for value in x) + ")"

    def format_set(self, feature_ids: Iterable[int]) -> str:
        return "{" + ",".join(self.feature(i).name for i in sorted(feature_ids)) + "}"


# ──────────────────────────────────────────────
# Tree structure
# ──────────────────────────────────────────────

@dataclass(frozen=True)
class Edge:
    values: FrozenSet[Value]
    child: int


@dataclass(frozen=True)
class Internal:
    id: int
    feature: int
    edges: Tuple[Edge, ...]


@dataclass(frozen=True)
class Leaf:
    id: int
    output: Output


Node = Union[Internal, Leaf]


@dataclass(frozen=True)
class Path:
    """One root-to-leaf branch; literals intersect every edge set met for a feature."""

    literals: Mapping[int, FrozenSet[Value]]
    leaf_output: Output
    node_ids: Tuple[int, ...]

    def consistent_with(self, x: Point) -> bool:
        return all(x[i - 1] in values for i, values in self.literals.items())

    def format_nodes(self) -> str:
        return "<" + ",".join(str(n) for n in self.node_ids) + ">"


@dataclass(frozen=True)
class Restriction:
    """Υ(𝒮; v): the points agreeing with the anchor on every fixed feature."""

    fixed: FrozenSet[int]
    anchor: Point

    def contains(self, x: Point) -> bool:
        return all(x[i - 1] == self.anchor[i - 1] for i in self.fixed)

    def size(self, space: FeatureSpace) -> int:
        total = 1
        for decl in space.features:
            if decl.id not in self.fixed:
                total *= len(decl.domain)
        return total

    def points(self, space: FeatureSpace) -> Iterator[Point]:
        axes = [
            (self.anchor[decl.id - 1],) if decl.id in self.fixed else decl.domain
            for decl in space.features
        ]
        return itertools.product(*axes)


@dataclass(frozen=True)
class TreeModel:
    space: FeatureSpace
    task: str
    nodes: Mapping[int, Node]
    root: int
    classes: Tuple[str, ...] = ()

    def __post_init__(self):
        _validate_tree(self)
        # Path construction rejects dead branches and constant models.
        _ = self.paths

    @property
    def is_classification(self) -> bool:
        return self.task == CLASSIFICATION

    @cached_property
    def paths(self) -> Tuple[Path, ...]:
        found = _collect_paths(self)
        outputs = {self.numeric(path.leaf_output) for path in found}
        if len(outputs) < 2:
            raise ModelValidationError("constant model", "every leaf carries the same output")
        return tuple(found)

    def numeric(self, output: Output) -> Fraction:
        """Leaf output as a rational; ordinal classes map to their 0-based position."""
        if self.is_classification:
            return Fraction(self.classes.index(output))
        return output

    def format_output(self, output: Output) -> str:
        if self.is_classification:
            return str(output)
        return format_rational(output)


def _validate_tree(model: TreeModel) -> None:
    space = model.space
    if model.task not in TASKS:
        raise ModelValidationError("unknown task", str(model.task))
    if model.is_classification:
        if len(model.classes) < 2 or len(set(model.classes)) != len(model.classes):
            raise ModelValidationError("invalid classes", "need at least two distinct class names")
    elif model.classes:
        raise ModelValidationError("invalid classes", "regression models do not declare classes")

    if model.root not in model.nodes:
        raise ModelValidationError("unknown node", f"root {model.root}")

    parent_of: Dict[int, int] = {}
    for node_id, node in model.nodes.items():
        if node.id != node_id:
            raise ModelValidationError("unknown node", f"node keyed {node_id} has id {node.id}")
        if isinstance(node, Leaf):
            if model.is_classification and node.output not in model.classes:
                raise ModelValidationError("unknown class", f"node {node_id}: {node.output!r}")
            if not model.is_classification and not isinstance(node.output, Fraction):
                raise ModelValidationError("invalid leaf", f"node {node_id}: {node.output!r}")
            continue

        decl = space.feature(node.feature)
        covered = set()
        for edge in node.edges:
            if not edge.values:
                raise ModelValidationError("edges do not partition domain", f"node {node_id} has an empty edge")
            if covered & edge.values:
                raise ModelValidationError("edges do not partition domain", f"node {node_id} has overlapping edges")
            if not all(value in decl for value in edge.values):
                raise ModelValidationError("edges do not partition domain", f"node {node_id} tests values outside {decl.name}")
            covered |= edge.values
            if edge.child not in model.nodes:
                raise ModelValidationError("unknown node", f"node {node_id} points to {edge.child}")
            if edge.child in parent_of:
                raise ModelValidationError("multiple parents", f"node {edge.child}")
            parent_of[edge.child] = node_id
        if covered != set(decl.domain):
            raise ModelValidationError("edges do not partition domain", f"node {node_id} on {decl.name}")

    if model.root in parent_of:
        raise ModelValidationError("cycle", f"root {model.root} has a parent")

    reached = set()
    stack = [model.root]
    while stack:
        node_id = stack.pop()
        if node_id in reached:
            raise ModelValidationError("cycle", f"node {node_id}")
        reached.add(node_id)
        node = model.nodes[node_id]
        if isinstance(node, Internal):
            stack.extend(edge.child for edge in node.edges)
    unreached = set(model.nodes) - reached
    if unreached:
        raise ModelValidationError("unreachable node", ", ".join(str(n) for n in sorted(unreached)))


def _collect_paths(model: TreeModel) -> List[Path]:
    found: List[Path] = []
    # Depth-first in edge order, so path order follows the model file.
    stack = [(model.root, {}, (model.root,))]
    while stack:
        node_id, literals, trail = stack.pop()
        node = model.nodes[node_id]
        if isinstance(node, Leaf):
            found.append(Path(literals=literals, leaf_output=node.output, node_ids=trail))
            continue
        children = []
        for edge in node.edges:
            current = literals.get(node.feature)
            narrowed = edge.values if current is None else current & edge.values
            if not narrowed:
                raise ModelValidationError(
                    "dead branch",
                    f"edge {node_id}->{edge.child} can never be taken",
                )
            children.append((edge.child, {**literals, node.feature: frozenset(narrowed)}, trail + (edge.child,)))
        stack.extend(reversed(children))
    return found


# ──────────────────────────────────────────────
# Evaluation
# ──────────────────────────────────────────────

def evaluate(model: TreeModel, x) -> Output:
    """τ(x): walk from the root to the unique leaf consistent with x."""
    x = model.space.check_point(x)
    node = model.nodes[model.root]
    while isinstance(node, Internal):
        value = x[node.feature - 1]
        for edge in node.edges:
            if value in edge.values:
                node = model.nodes[edge.child]
                break
    return node.output


def paths(model: TreeModel) -> List[Path]:
    return list(model.paths)


# ──────────────────────────────────────────────
# Model file codec
# ──────────────────────────────────────────────

def _expect(condition: bool, message: str, position: str) -> None:
    if not condition:
        raise ModelSyntaxError(message, position)


def _parse_leaf(raw, task: str, position: str) -> Output:
    if task == CLASSIFICATION:
        _expect(isinstance(raw, str), "class leaf must be a string", position)
        return raw
    try:
        return parse_rational(raw)
    except ValueError as exc:
        raise ModelSyntaxError(str(exc), position) from exc


def model_from_dict(doc) -> TreeModel:
    _expect(isinstance(doc, dict), "model must be a JSON object", "$")
    for key in ("features", "task", "root", "nodes"):
        _expect(key in doc, f"missing key {key!r}", "$")

    raw_features = doc["features"]
    _expect(isinstance(raw_features, list), "features must be a list", "features")
    decls = []
    for pos, raw in enumerate(raw_features):
        where = f"features[{pos}]"
        _expect(isinstance(raw, dict), "feature must be an object", where)
        _expect(isinstance(raw.get("name"), str), "feature name must be a string", f"{where}.name")
        domain = raw.get("domain")
        _expect(isinstance(domain, list), "domain must be a list", f"{where}.domain")
        for k, value in enumerate(domain):
            _expect(_is_value(value), "domain values must be integers or strings", f"{where}.domain[{k}]")
        kind = raw.get("kind")
        if kind is None:
            kind = ORDINAL if all(isinstance(v, int) for v in domain) else CATEGORICAL
        decls.append(FeatureDecl(id=pos + 1, name=raw["name"], domain=tuple(domain), kind=kind))
    space = FeatureSpace(tuple(decls))

    task = doc["task"]
    _expect(task in TASKS, f"task must be one of {TASKS}", "task")
    classes = doc.get("classes", [])
    _expect(isinstance(classes, list) and all(isinstance(c, str) for c in classes),
            "classes must be a list of strings", "classes")
    _expect(isinstance(doc["root"], int), "root must be a node id", "root")

    raw_nodes = doc["nodes"]
    _expect(isinstance(raw_nodes, list), "nodes must be a list", "nodes")
    nodes: Dict[int, Node] = {}
    for pos, raw in enumerate(raw_nodes):
        where = f"nodes[{pos}]"
        _expect(isinstance(raw, dict), "node must be an object", where)
        node_id = raw.get("id")
        _expect(isinstance(node_id, int) and not isinstance(node_id, bool), "node id must be an integer", f"{where}.id")
        _expect(node_id not in nodes, f"duplicate node id {node_id}", f"{where}.id")
        _expect(("leaf" in raw) != ("feature" in raw), "node needs exactly one of 'leaf' or 'feature'", where)
        if "leaf" in raw:
            nodes[node_id] = Leaf(id=node_id, output=_parse_leaf(raw["leaf"], task, f"{where}.leaf"))
            continue
        _expect(isinstance(raw["feature"], str), "feature must be a name", f"{where}.feature")
        decl = space.by_name(raw["feature"])
        raw_edges = raw.get("edges")
        _expect(isinstance(raw_edges, list) and raw_edges, "edges must be a non-empty list", f"{where}.edges")
        edges = []
        for k, raw_edge in enumerate(raw_edges):
            edge_where = f"{where}.edges[{k}]"
            _expect(isinstance(raw_edge, dict), "edge must be an object", edge_where)
            values = raw_edge.get("values")
            _expect(isinstance(values, list) and all(_is_value(v) for v in values),
                    "edge values must be a list of domain values", f"{edge_where}.values")
            _expect(len(set(values)) == len(values), "edge lists a value twice", f"{edge_where}.values")
            child = raw_edge.get("child")
            _expect(isinstance(child, int) and not isinstance(child, bool), "edge child must be a node id", f"{edge_where}.child")
            edges.append(Edge(values=frozenset(values), child=child))
        nodes[node_id] = Internal(id=node_id, feature=decl.id, edges=tuple(edges))

    model = TreeModel(space=space, task=task, nodes=nodes, root=doc["root"], classes=tuple(classes))
    logger.info("Parsed %s model: %d features, %d nodes, %d paths",
                task, space.m, len(nodes), len(model.paths))
    return model


def parse_model(text: str) -> TreeModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return model_from_dict(doc)


def _leaf_to_json(output: Output):
    if isinstance(output, Fraction):
        return output.numerator if output.denominator == 1 else format_rational(output)
    return output


def model_to_dict(model: TreeModel) -> dict:
    space = model.space
    doc = {
        "features": [
            {"name": decl.name, "domain": list(decl.domain), "kind": decl.kind}
            for decl in space.features
        ],
        "task": model.task,
        "root": model.root,
        "nodes": [],
    }
    if model.is_classification:
        doc["classes"] = list(model.classes)
    for node_id in sorted(model.nodes):
        node = model.nodes[node_id]
        if isinstance(node, Leaf):
            doc["nodes"].append({"id": node_id, "leaf": _leaf_to_json(node.output)})
            continue
        decl = space.feature(node.feature)
        doc["nodes"].append({
            "id": node_id,
            "feature": decl.name,
            "edges": [
                {"values": decl.ordered(edge.values), "child": edge.child}
                for edge in node.edges
            ],
        })
    return doc


def print_model(model: TreeModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, ensure_ascii=False)


# ──────────────────────────────────────────────
# Samples
# ──────────────────────────────────────────────

@dataclass(frozen=True)
class Sample:
    point: Point
    output: Output


def make_sample(model: TreeModel, x) -> Sample:
    x = model.space.check_point(x)
    return Sample(point=x, output=evaluate(model, x))


def sample_from_dict(doc, model: TreeModel) -> Sample:
    if not isinstance(doc, dict) or not isinstance(doc.get("point"), dict):
        raise InstanceError("instance must be an object with a 'point' mapping")
    raw_point = doc["point"]
    space = model.space
    unknown = set(raw_point) - {decl.name for decl in space.features}
    if unknown:
        raise DomainError(f"unknown feature(s) in instance: {', '.join(sorted(unknown))}")
    values = []
    for decl in space.features:
        if decl.name not in raw_point:
            raise DomainError(f"instance has no value for {decl.name}")
        values.append(raw_point[decl.name])
    sample = make_sample(model, values)

    declared = doc.get("output")
    if declared is not None:
        if model.is_classification:
            expected = declared
        else:
            try:
                expected = parse_rational(declared)
            except ValueError as exc:
                raise InstanceError(str(exc)) from exc
        if expected != sample.output:
            raise InstanceError(
                f"declared output {declared} does not match model output "
                f"{model.format_output(sample.output)} (stale instance file?)"
            )
    return sample


def parse_instance(text: str, model: TreeModel) -> Sample:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{exc.msg} (at line {exc.lineno} column {exc.colno})") from exc
    return sample_from_dict(doc, model)


def sample_to_dict(sample: Sample, model: TreeModel) -> dict:
    output = sample.output
    return {
        "point": {decl.name: value for decl, value in zip(model.space.features, sample.point)},
        "output": output if model.is_classification else format_rational(output),
    }
