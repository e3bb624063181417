import logging
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .model import FeatureSpace, Output, TreeModel, Value
from .oracle import DistanceBound, consistent_dissimilar_path, feature_subset, is_waxp, is_wcxp
from .semantics import ExplanationProblem
from .serialization import format_rational, parse_rational

logger = logging.getLogger(__name__)

AXP = "AXp"
CXP = "CXp"
WAXP = "WAXp"
WCXP = "WCXp"
KINDS = (AXP, CXP, WAXP, WCXP)


class InfeasibleQueryError(Exception):
    """The query has no answer for this problem (e.g. no CXp exists)."""


@dataclass(frozen=True)
class TraceStep:
    """One row of a deletion run: try to drop `feature` from `current`."""

    current: Tuple[int, ...]
    feature: int
    path: Optional[Tuple[int, ...]]
    result: Tuple[int, ...]

    @property
    def dropped(self) -> bool:
        return self.feature not in self.result

    def to_dict(self) -> dict:
        return {
            "current": list(self.current),
            "feature": self.feature,
            "path": None if self.path is None else list(self.path),
            "result": list(self.result),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TraceStep":
        path = payload.get("path")
        return cls(
            current=tuple(payload["current"]),
            feature=payload["feature"],
            path=None if path is None else tuple(path),
            result=tuple(payload["result"]),
        )


@dataclass(frozen=True)
class Explanation:
    kind: str
    features: Tuple[int, ...]
    fingerprint: str
    trace: Tuple[TraceStep, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown explanation kind {self.kind!r}")
        object.__setattr__(self, "features", tuple(sorted(self.features)))

    @property
    def feature_set(self) -> FrozenSet[int]:
        return frozenset(self.features)

    def format(self, space: FeatureSpace) -> str:
        return f"{self.kind}: {space.format_set(self.features)}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "features": list(self.features),
            "fingerprint": self.fingerprint,
            "trace": [step.to_dict() for step in self.trace],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Explanation":
        return cls(
            kind=payload["kind"],
            features=tuple(payload["features"]),
            fingerprint=payload["fingerprint"],
            trace=tuple(TraceStep.from_dict(step) for step in payload.get("trace", [])),
        )


def feature_order(problem: ExplanationProblem, order: Optional[Sequence[int]] = None) -> Tuple[int, ...]:
    if order is None:
        return tuple(sorted(problem.features))
    order = tuple(order)
    if len(order) != len(set(order)) or set(order) != problem.features:
        raise ValueError(f"order {list(order)} is not a permutation of the features")
    return order


def _path_nodes(problem: ExplanationProblem, fixed: FrozenSet[int],
                bound: Optional[DistanceBound]) -> Optional[Tuple[int, ...]]:
    if bound is not None and bound.bounded:
        return None
    path = consistent_dissimilar_path(problem, fixed)
    return None if path is None else path.node_ids


def shrink(problem: ExplanationProblem, start: Iterable[int], order: Sequence[int],
           holds: Callable[[FrozenSet[int]], bool],
           fixed_side: Callable[[FrozenSet[int]], FrozenSet[int]],
           bound: Optional[DistanceBound] = None) -> Tuple[FrozenSet[int], List[TraceStep]]:
    """
    Deletion over a monotone predicate: drop each feature of `order` that
    `holds` can spare. One predicate call per feature in `order`.
    """
    current = frozenset(start)
    trace = []
    for i in order:
        if i not in current:
            continue
        candidate = current - {i}
        before = tuple(sorted(current))
        if holds(candidate):
            current = candidate
        path = _path_nodes(problem, fixed_side(candidate), bound)
        step = TraceStep(current=before, feature=i, path=path, result=tuple(sorted(current)))
        trace.append(step)
        logger.debug("drop %d from %s: %s", i, list(before), "dropped" if step.dropped else "kept")
    return current, trace


def one_axp(problem: ExplanationProblem, order: Optional[Sequence[int]] = None,
            bound: Optional[DistanceBound] = None) -> Explanation:
    """
    One subset-minimal WAXp by deletion: start from every feature fixed and
    free each feature in `order` whenever the rest still guarantees a
    similar output. Exactly one WAXp check per feature.
    """
    order = feature_order(problem, order)
    fixed, trace = shrink(
        problem, problem.features, order,
        holds=lambda s: is_waxp(problem, s, bound),
        fixed_side=lambda s: s,
        bound=bound,
    )
    explanation = Explanation(kind=AXP, features=tuple(fixed), fingerprint=problem.fingerprint, trace=tuple(trace))
    logger.info("Found %s", explanation.format(problem.space))
    return explanation


def one_cxp(problem: ExplanationProblem, order: Optional[Sequence[int]] = None,
            bound: Optional[DistanceBound] = None) -> Explanation:
    """One subset-minimal WCXp by deletion over the free set."""
    order = feature_order(problem, order)
    if not is_wcxp(problem, problem.features, bound):
        logger.warning("No dissimilar output is reachable; the empty set is the only AXp")
        raise InfeasibleQueryError("no CXp exists; every AXp is the empty set")
    features = problem.features
    free, trace = shrink(
        problem, features, order,
        holds=lambda s: is_wcxp(problem, s, bound),
        fixed_side=lambda s: features - s,
        bound=bound,
    )
    explanation = Explanation(kind=CXP, features=tuple(free), fingerprint=problem.fingerprint, trace=tuple(trace))
    logger.info("Found %s", explanation.format(problem.space))
    return explanation


def is_axp(problem: ExplanationProblem, features: Iterable[int],
           bound: Optional[DistanceBound] = None) -> bool:
    features = feature_subset(problem, features)
    if not is_waxp(problem, features, bound):
        return False
    return not any(is_waxp(problem, features - {i}, bound) for i in features)


def is_cxp(problem: ExplanationProblem, features: Iterable[int],
           bound: Optional[DistanceBound] = None) -> bool:
    features = feature_subset(problem, features)
    if not is_wcxp(problem, features, bound):
        return False
    return not any(is_wcxp(problem, features - {i}, bound) for i in features)


# ──────────────────────────────────────────────
# Inflated explanations
# ──────────────────────────────────────────────

@dataclass(frozen=True)
class InflatedExplanation:
    literals: Mapping[int, FrozenSet[Value]]
    output: Output
    fingerprint: str
    removable: Tuple[int, ...] = ()

    def concrete(self, v) -> Dict[int, FrozenSet[Value]]:
        """Intersect each literal with {v_i}, recovering the plain AXp."""
        return {i: values & {v[i - 1]} for i, values in self.literals.items()}

    def render(self, model: TreeModel) -> str:
        space = model.space
        if not self.literals:
            condition = "TRUE"
        else:
            parts = []
            for i in sorted(self.literals):
                decl = space.feature(i)
                shown = ",".join(str(u) for u in decl.ordered(self.literals[i]))
                parts.append(f"{decl.name} in {{{shown}}}")
            condition = " AND ".join(parts)
        return f"IF {condition} THEN output = {model.format_output(self.output)}"

    def to_dict(self, model: TreeModel) -> dict:
        space = model.space
        payload = {
            "literals": {str(i): space.feature(i).ordered(values) for i, values in sorted(self.literals.items())},
            "fingerprint": self.fingerprint,
            "removable": list(self.removable),
            "rule": self.render(model),
        }
        if model.is_classification:
            payload["class"] = self.output
        else:
            payload["output"] = format_rational(self.output)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "InflatedExplanation":
        output = payload["class"] if "class" in payload else parse_rational(payload["output"])
        return cls(
            literals={int(i): frozenset(values) for i, values in payload["literals"].items()},
            output=output,
            fingerprint=payload["fingerprint"],
            removable=tuple(payload.get("removable", [])),
        )


def _admits_dissimilar(problem: ExplanationProblem, literals: Mapping[int, set]) -> bool:
    for path in problem.dissimilar_paths:
        if all(values & literals[i] for i, values in path.literals.items() if i in literals):
            return True
    return False


def inflate(problem: ExplanationProblem, axp, value_order: Optional[Mapping[int, Sequence[Value]]] = None) -> InflatedExplanation:
    """
    Grow each literal x_i = v_i of an AXp into x_i ∈ V_i, greedily in
    ascending feature id and then `value_order` (domain order by default),
    keeping a value only while no dissimilar path stays reachable.
    """
    features = axp.features if isinstance(axp, Explanation) else tuple(sorted(axp))
    features = feature_subset(problem, features)
    if not is_waxp(problem, features):
        raise ValueError(f"{problem.space.format_set(features)} is not a weak AXp")
    value_order = value_order or {}
    space, v = problem.space, problem.v

    literals = {i: {v[i - 1]} for i in features}
    for i in sorted(features):
        decl = space.feature(i)
        candidates = value_order.get(i, decl.domain)
        for u in candidates:
            if u not in decl:
                raise ValueError(f"{u!r} is not in the domain of {decl.name}")
            if u in literals[i]:
                continue
            literals[i].add(u)
            if _admits_dissimilar(problem, literals):
                literals[i].discard(u)

    removable = tuple(i for i in sorted(features) if len(literals[i]) == len(space.feature(i).domain))
    if removable:
        logger.warning("Inflated literals cover the whole domain of %s; the input was not minimal",
                       space.format_set(removable))
    inflated = InflatedExplanation(
        literals={i: frozenset(values) for i, values in literals.items()},
        output=problem.sample.output,
        fingerprint=problem.fingerprint,
        removable=removable,
    )
    logger.info("Inflated explanation: %s", inflated.render(problem.model))
    return inflated
