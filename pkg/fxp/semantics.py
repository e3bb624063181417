import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional, Tuple

from .model import (
    FeatureSpace,
    Output,
    Path,
    Restriction,
    Sample,
    TreeModel,
    evaluate,
    model_to_dict,
    sample_to_dict,
)
from .serialization import canonical_json_hash, format_rational, parse_rational

logger = logging.getLogger(__name__)

DEFAULT_BRUTE_CAP = 20_000
BRUTE_CAP_ENV = "FXP_BRUTE_CAP"

CLASS_EQUALITY = "class"
THRESHOLD = "threshold"


class CapExceededError(Exception):
    """Raised when a brute-force scan or subset-lattice walk exceeds its cap."""


class ProblemError(ValueError):
    """The similarity settings do not fit the model or the sample."""


def brute_force_cap() -> int:
    raw = os.environ.get(BRUTE_CAP_ENV)
    if raw is None:
        return DEFAULT_BRUTE_CAP
    try:
        cap = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r: not an integer", BRUTE_CAP_ENV, raw)
        return DEFAULT_BRUTE_CAP
    if cap <= 0:
        logger.warning("Ignoring %s=%r: must be positive", BRUTE_CAP_ENV, raw)
        return DEFAULT_BRUTE_CAP
    return cap


@dataclass(frozen=True)
class SimilaritySpec:
    mode: str
    delta: Optional[Fraction] = None
    strict: bool = False

    @classmethod
    def class_equality(cls) -> "SimilaritySpec":
        return cls(mode=CLASS_EQUALITY)

    @classmethod
    def threshold(cls, delta, strict: bool = False) -> "SimilaritySpec":
        return cls(mode=THRESHOLD, delta=Fraction(delta), strict=strict)

    def describe(self) -> str:
        if self.mode == CLASS_EQUALITY:
            return "class equality"
        op = "<" if self.strict else "<="
        return f"|delta| {op} {format_rational(self.delta)}"

    def to_dict(self) -> dict:
        if self.mode == CLASS_EQUALITY:
            return {"mode": self.mode}
        return {"mode": self.mode, "delta": format_rational(self.delta), "strict": self.strict}

    @classmethod
    def from_dict(cls, payload: dict) -> "SimilaritySpec":
        if payload["mode"] == CLASS_EQUALITY:
            return cls.class_equality()
        return cls.threshold(parse_rational(payload["delta"]), strict=payload.get("strict", False))


@dataclass(frozen=True)
class ExplanationProblem:
    """ℰ = (ℳ, (v, q)) together with the similarity predicate σ."""

    model: TreeModel
    sample: Sample
    similarity: SimilaritySpec

    def __post_init__(self):
        model, similarity = self.model, self.similarity
        if similarity.mode == CLASS_EQUALITY:
            if not model.is_classification:
                raise ProblemError("class-equality similarity needs a classification model")
        elif similarity.mode == THRESHOLD:
            if model.is_classification:
                raise ProblemError("delta cannot be used with a classification task")
            if similarity.delta is None or similarity.delta < 0:
                raise ProblemError("delta must be a nonnegative rational")
            if similarity.strict and similarity.delta == 0:
                raise ProblemError("strict comparison with delta = 0 makes every output dissimilar")
        else:
            raise ProblemError(f"unknown similarity mode {similarity.mode!r}")

        point = model.space.check_point(self.sample.point)
        if evaluate(model, point) != self.sample.output:
            raise ProblemError(
                f"sample output {model.format_output(self.sample.output)} does not match "
                f"the model at {model.space.format_point(point)}"
            )

    @property
    def space(self) -> FeatureSpace:
        return self.model.space

    @property
    def features(self) -> frozenset:
        return self.model.space.ids

    @property
    def v(self):
        return self.sample.point

    def output_similar(self, output: Output) -> bool:
        if self.similarity.mode == CLASS_EQUALITY:
            return output == self.sample.output
        gap = abs(output - self.sample.output)
        if self.similarity.strict:
            return gap < self.similarity.delta
        return gap <= self.similarity.delta

    @cached_property
    def dissimilar_paths(self) -> Tuple[Path, ...]:
        return tuple(p for p in self.model.paths if not self.output_similar(p.leaf_output))

    @cached_property
    def fingerprint(self) -> str:
        return canonical_json_hash({
            "model": model_to_dict(self.model),
            "sample": sample_to_dict(self.sample, self.model),
            "similarity": self.similarity.to_dict(),
        })


def default_similarity(model: TreeModel) -> SimilaritySpec:
    if model.is_classification:
        return SimilaritySpec.class_equality()
    return SimilaritySpec.threshold(0)


def make_problem(model: TreeModel, sample: Sample, similarity: Optional[SimilaritySpec] = None) -> ExplanationProblem:
    return ExplanationProblem(model=model, sample=sample, similarity=similarity or default_similarity(model))


def similar(problem: ExplanationProblem, x) -> bool:
    """σ(x; ℰ)."""
    return problem.output_similar(evaluate(problem.model, x))


def path_weight(space: FeatureSpace, path: Path, restriction: Restriction) -> Fraction:
    """Probability that a uniform point of Υ(𝒮; v) follows this path."""
    weight = Fraction(1)
    for i, values in path.literals.items():
        if i in restriction.fixed:
            if restriction.anchor[i - 1] not in values:
                return Fraction(0)
        else:
            weight *= Fraction(len(values), len(space.feature(i).domain))
    return weight


def _check_restriction(model: TreeModel, restriction: Restriction) -> None:
    unknown = set(restriction.fixed) - model.space.ids
    if unknown:
        raise ValueError(f"unknown feature ids {sorted(unknown)}")
    model.space.check_point(restriction.anchor)


def expected_value(model: TreeModel, restriction: Restriction) -> Fraction:
    """𝐄[τ(x) | x_𝒮 = v_𝒮], summed over paths."""
    _check_restriction(model, restriction)
    return sum(
        (model.numeric(path.leaf_output) * path_weight(model.space, path, restriction) for path in model.paths),
        Fraction(0),
    )


def expected_value_oracle(model: TreeModel, restriction: Restriction, cap: Optional[int] = None) -> Fraction:
    """Reference 𝐄[τ(x) | x_𝒮 = v_𝒮] by literal enumeration of Υ(𝒮; v)."""
    _check_restriction(model, restriction)
    cap = brute_force_cap() if cap is None else cap
    count = restriction.size(model.space)
    if count > cap:
        raise CapExceededError(f"{count} points to enumerate exceeds the brute-force cap {cap}")
    total = sum((model.numeric(evaluate(model, x)) for x in restriction.points(model.space)), Fraction(0))
    return total / count


def dissimilarity_probability(problem: ExplanationProblem, free: Iterable[int]) -> Fraction:
    """𝐏(¬σ(x) | x_𝒮 = v_𝒮) with 𝒮 = ℱ ∖ free."""
    restriction = Restriction(fixed=problem.features - frozenset(free), anchor=problem.v)
    _check_restriction(problem.model, restriction)
    return sum(
        (path_weight(problem.space, path, restriction) for path in problem.dissimilar_paths),
        Fraction(0),
    )


def waxp_probability(problem: ExplanationProblem, fixed: Iterable[int]) -> Fraction:
    """𝐏(σ(x) | x_𝒮 = v_𝒮); 𝒮 is a WAXp exactly when this is 1."""
    return 1 - dissimilarity_probability(problem, problem.features - frozenset(fixed))
