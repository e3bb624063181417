import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .model import FeatureDecl, FeatureSpace, Output, Path, Point, Value
from .semantics import ExplanationProblem
from .serialization import format_rational, parse_rational

logger = logging.getLogger(__name__)

INF = "inf"
NORMS = (0, 1, INF)

Norm = Union[int, str]


def parse_norm(raw) -> Norm:
    text = str(raw).strip().lower()
    if text in ("inf", "infinity", "linf"):
        return INF
    if text in ("0", "l0"):
        return 0
    if text in ("1", "l1"):
        return 1
    raise ValueError(f"unsupported norm {raw!r}; expected one of 0, 1, inf")


def parse_eps(raw) -> Optional[Fraction]:
    if raw is None or str(raw).strip().lower() == "unbounded":
        return None
    eps = parse_rational(raw)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return eps


def coordinate_distance(decl: FeatureDecl, norm: Norm, a: Value, b: Value) -> Fraction:
    if norm == 0:
        return Fraction(0 if a == b else 1)
    return decl.distance(a, b)


def combine(norm: Norm, distances: Iterable[Fraction]) -> Fraction:
    distances = list(distances)
    if norm == INF:
        return max(distances, default=Fraction(0))
    return sum(distances, Fraction(0))


def point_distance(space: FeatureSpace, norm: Norm, x: Point, v: Point) -> Fraction:
    """||x - v||_p with Hamming coordinates on categorical features."""
    return combine(norm, (coordinate_distance(d, norm, a, b) for d, a, b in zip(space.features, x, v)))


@dataclass(frozen=True)
class DistanceBound:
    """The l_p ball of radius eps around the sample; eps None means unbounded."""

    norm: Norm = 0
    eps: Optional[Fraction] = None

    def __post_init__(self):
        if self.norm not in NORMS:
            raise ValueError(f"unsupported norm {self.norm!r}")
        if self.eps is not None and self.eps < 0:
            raise ValueError("eps must be nonnegative")

    @property
    def bounded(self) -> bool:
        return self.eps is not None

    def describe(self) -> str:
        radius = "unbounded" if self.eps is None else format_rational(self.eps)
        return f"l{self.norm} <= {radius}"


@dataclass(frozen=True)
class AdversarialQuery:
    norm: Norm
    eps: Optional[Fraction]
    fixed: frozenset

    @property
    def bound(self) -> DistanceBound:
        return DistanceBound(norm=self.norm, eps=self.eps)


@dataclass(frozen=True)
class Witness:
    point: Point
    output: Output
    distance: Fraction

    def to_dict(self) -> dict:
        payload = {"point": list(self.point), "distance": format_rational(self.distance)}
        if isinstance(self.output, str):
            payload["class"] = self.output
        else:
            payload["output"] = format_rational(self.output)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "Witness":
        output = payload["class"] if "class" in payload else parse_rational(payload["output"])
        return cls(point=tuple(payload["point"]), output=output, distance=parse_rational(payload["distance"]))


def feature_subset(problem: ExplanationProblem, features: Iterable[int]) -> frozenset:
    subset = frozenset(features)
    unknown = subset - problem.features
    if unknown:
        raise ValueError(f"unknown feature ids {sorted(unknown)}")
    return subset


def _agrees_on_fixed(path: Path, fixed: frozenset, v: Point) -> bool:
    return all(v[i - 1] in values for i, values in path.literals.items() if i in fixed)


def consistent_dissimilar_path(problem: ExplanationProblem, fixed: Iterable[int]) -> Optional[Path]:
    """
    First path (in model order) with a dissimilar leaf that some point
    agreeing with v on `fixed` follows. Free tested features always have
    a nonempty literal, since dead branches are rejected at parse time.
    """
    fixed = feature_subset(problem, fixed)
    for path in problem.dissimilar_paths:
        if _agrees_on_fixed(path, fixed, problem.v):
            return path
    return None


def _closest_on_path(problem: ExplanationProblem, path: Path, fixed: frozenset,
                     norm: Norm) -> Tuple[Fraction, Point]:
    space, v = problem.space, problem.v
    allowed: List[Sequence[Value]] = []
    best: List[Fraction] = []
    for decl in space.features:
        i = decl.id
        if i in fixed:
            options = [v[i - 1]]
        elif i in path.literals:
            options = decl.ordered(path.literals[i])
        else:
            options = list(decl.domain)
        allowed.append(options)
        best.append(min(coordinate_distance(decl, norm, u, v[i - 1]) for u in options))
    radius = combine(norm, best)

    # Lexicographically smallest point of the path at distance `radius`:
    # sums need every coordinate at its minimum, the max-norm only needs
    # each coordinate inside the radius.
    point = []
    for decl, options, floor in zip(space.features, allowed, best):
        limit = radius if norm == INF else floor
        point.append(next(u for u in options if coordinate_distance(decl, norm, u, v[decl.id - 1]) <= limit))
    return radius, tuple(point)


def closest_dissimilar(problem: ExplanationProblem, fixed: Iterable[int],
                       bound: DistanceBound) -> Optional[Witness]:
    fixed = feature_subset(problem, fixed)
    space = problem.space
    best_key = None
    best: Optional[Witness] = None
    for path in problem.dissimilar_paths:
        if not _agrees_on_fixed(path, fixed, problem.v):
            continue
        radius, point = _closest_on_path(problem, path, fixed, bound.norm)
        if bound.bounded and radius > bound.eps:
            continue
        key = (radius, space.point_key(point))
        if best_key is None or key < best_key:
            best_key = key
            best = Witness(point=point, output=path.leaf_output, distance=radius)
    return best


def _blocked(problem: ExplanationProblem, fixed: frozenset, bound: Optional[DistanceBound]) -> bool:
    """True when some dissimilar point agrees with v on `fixed` (inside the bound, if any)."""
    if bound is None or not bound.bounded:
        return consistent_dissimilar_path(problem, fixed) is not None
    return closest_dissimilar(problem, fixed, bound) is not None


def is_waxp(problem: ExplanationProblem, fixed: Iterable[int],
            bound: Optional[DistanceBound] = None) -> bool:
    """WAXp(𝒮): every point with x_𝒮 = v_𝒮 (inside the bound, if any) is similar."""
    return not _blocked(problem, feature_subset(problem, fixed), bound)


def is_wcxp(problem: ExplanationProblem, free: Iterable[int],
            bound: Optional[DistanceBound] = None) -> bool:
    """WCXp(𝒮): releasing 𝒮 (inside the bound, if any) reaches a dissimilar output."""
    free = feature_subset(problem, free)
    return _blocked(problem, problem.features - free, bound)


def wcxp_witness(problem: ExplanationProblem, free: Iterable[int]) -> Optional[Witness]:
    """
    A dissimilar point that changes only features in `free`. Free tested
    features take the first value of the path literal in domain order,
    everything else keeps its value in v. The distance is the l0 count of
    changed features.
    """
    free = feature_subset(problem, free)
    path = consistent_dissimilar_path(problem, problem.features - free)
    if path is None:
        return None
    space, v = problem.space, problem.v
    point = tuple(
        space.feature(i).ordered(path.literals[i])[0] if i in free and i in path.literals else v[i - 1]
        for i in range(1, space.m + 1)
    )
    return Witness(point=point, output=path.leaf_output, distance=point_distance(space, 0, point, v))


def find_adversarial_example(problem: ExplanationProblem, query: AdversarialQuery) -> Optional[Witness]:
    """
    Minimum-distance constrained adversarial example: a dissimilar point with
    x_𝒮 = v_𝒮 and ||x - v||_p <= eps. Ties go to the lexicographically
    smallest point in domain order.
    """
    witness = closest_dissimilar(problem, query.fixed, query.bound)
    if witness is None:
        logger.info("No adversarial example within %s with %d fixed features",
                    query.bound.describe(), len(query.fixed))
    else:
        logger.info("Adversarial example %s at distance %s",
                    problem.space.format_point(witness.point), format_rational(witness.distance))
    return witness
