"""
Exact SHAP scores for tree models and an audit of those scores against
feature relevancy.

cf(𝒮) is the expected model output when the features in 𝒮 are fixed to
the sample and the rest are uniform. Every cf value is computed once and
shared by all features; the efficiency identity Σ sv(i) = cf(ℱ) − cf(∅)
is checked exactly before a report is returned.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple

from .enumeration import RelevancyReport, relevant_features
from .model import FeatureSpace, Restriction
from .semantics import CapExceededError, ExplanationProblem, ProblemError, SimilaritySpec, expected_value, make_problem
from .serialization import format_rational, parse_rational

logger = logging.getLogger(__name__)

DEFAULT_MAX_SHAP_FEATURES = 20

IRRELEVANT_NONZERO = "IrrelevantNonzero"
RELEVANT_ZERO = "RelevantZero"
CONSISTENT = "Consistent"


class EfficiencyError(ArithmeticError):
    """Scores do not add up to cf(ℱ) − cf(∅). Always a bug."""


def shapley_weight(m: int, k: int) -> Fraction:
    """ς(k) = k!(m−k−1)!/m!"""
    if not 0 <= k < m:
        raise ValueError(f"subset size {k} out of range for {m} features")
    return Fraction(factorial(k) * factorial(m - k - 1), factorial(m))


def subsets_in_order(features) -> Iterator[FrozenSet[int]]:
    """By cardinality, then lexicographically."""
    ordered = sorted(features)
    for k in range(len(ordered) + 1):
        for combo in combinations(ordered, k):
            yield frozenset(combo)


def characteristic_value(problem: ExplanationProblem, subset) -> Fraction:
    fixed = frozenset(subset)
    unknown = fixed - problem.features
    if unknown:
        raise ValueError(f"unknown feature ids {sorted(unknown)}")
    return expected_value(problem.model, Restriction(fixed=fixed, anchor=problem.v))


@dataclass(frozen=True)
class Contribution:
    subset: Tuple[int, ...]
    delta: Fraction
    weight: Fraction

    def to_dict(self) -> dict:
        return {
            "subset": list(self.subset),
            "delta": format_rational(self.delta),
            "weight": format_rational(self.weight),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Contribution":
        return cls(
            subset=tuple(payload["subset"]),
            delta=parse_rational(payload["delta"]),
            weight=parse_rational(payload["weight"]),
        )


@dataclass(frozen=True)
class ShapReport:
    scores: Mapping[int, Fraction]
    baseline: Fraction
    full: Fraction
    ledger: Mapping[int, Tuple[Contribution, ...]] = field(default_factory=dict)

    @property
    def total(self) -> Fraction:
        return sum(self.scores.values(), Fraction(0))

    def to_dict(self, space: FeatureSpace) -> dict:
        payload = {
            "scores": {space.feature(i).name: format_rational(s) for i, s in sorted(self.scores.items())},
            "baseline": format_rational(self.baseline),
            "full": format_rational(self.full),
            "efficiency_check": "ok",
        }
        if self.ledger:
            payload["ledger"] = [
                {"feature": space.feature(i).name, **row.to_dict()}
                for i, rows in sorted(self.ledger.items())
                for row in rows
            ]
        return payload

    @classmethod
    def from_dict(cls, payload: dict, space: FeatureSpace) -> "ShapReport":
        ledger: Dict[int, List[Contribution]] = {}
        for row in payload.get("ledger", []):
            ledger.setdefault(space.by_name(row["feature"]).id, []).append(Contribution.from_dict(row))
        return cls(
            scores={space.by_name(name).id: parse_rational(s) for name, s in payload["scores"].items()},
            baseline=parse_rational(payload["baseline"]),
            full=parse_rational(payload["full"]),
            ledger={i: tuple(rows) for i, rows in ledger.items()},
        )


def _check_size(problem: ExplanationProblem, max_features: int) -> None:
    m = problem.space.m
    if m > max_features:
        raise CapExceededError(
            f"exact SHAP over {m} features needs 2^{m} expected values; the limit is {max_features} features"
        )


def _score(problem: ExplanationProblem, i: int, cf: Mapping[FrozenSet[int], Fraction],
           keep_ledger: bool) -> Tuple[Fraction, Tuple[Contribution, ...]]:
    m = problem.space.m
    score = Fraction(0)
    rows = []
    for subset in subsets_in_order(problem.features - {i}):
        delta = cf[subset | {i}] - cf[subset]
        weight = shapley_weight(m, len(subset))
        score += weight * delta
        if keep_ledger:
            rows.append(Contribution(subset=tuple(sorted(subset)), delta=delta, weight=weight))
    return score, tuple(rows)


def shap_score(problem: ExplanationProblem, i: int, max_features: int = DEFAULT_MAX_SHAP_FEATURES) -> Fraction:
    if i not in problem.features:
        raise ValueError(f"unknown feature id {i}")
    _check_size(problem, max_features)
    cf: Dict[FrozenSet[int], Fraction] = {}
    for subset in subsets_in_order(problem.features - {i}):
        cf[subset] = characteristic_value(problem, subset)
        cf[subset | {i}] = characteristic_value(problem, subset | {i})
    score, _ = _score(problem, i, cf, keep_ledger=False)
    return score


def shap_all(problem: ExplanationProblem, ledger: bool = False,
             max_features: int = DEFAULT_MAX_SHAP_FEATURES) -> ShapReport:
    _check_size(problem, max_features)
    cf = {subset: characteristic_value(problem, subset) for subset in subsets_in_order(problem.features)}
    logger.debug("Computed %d characteristic values", len(cf))

    scores: Dict[int, Fraction] = {}
    rows: Dict[int, Tuple[Contribution, ...]] = {}
    for i in sorted(problem.features):
        scores[i], contributions = _score(problem, i, cf, keep_ledger=ledger)
        if ledger:
            rows[i] = contributions

    report = ShapReport(scores=scores, baseline=cf[frozenset()], full=cf[problem.features], ledger=rows)
    if report.total != report.full - report.baseline:
        raise EfficiencyError(
            f"scores sum to {format_rational(report.total)} but cf(F) - cf(0) is "
            f"{format_rational(report.full - report.baseline)}"
        )
    logger.info("SHAP scores: %s", ", ".join(
        f"{problem.space.feature(i).name}={format_rational(s)}" for i, s in sorted(scores.items())
    ))
    return report


@dataclass(frozen=True)
class Finding:
    feature: int
    relevant: bool
    score: Fraction
    flag: str

    def to_dict(self, space: FeatureSpace) -> dict:
        return {
            "feature": space.feature(self.feature).name,
            "relevancy": "relevant" if self.relevant else "irrelevant",
            "score": format_rational(self.score),
            "flag": self.flag,
        }

    @classmethod
    def from_dict(cls, payload: dict, space: FeatureSpace) -> "Finding":
        return cls(
            feature=space.by_name(payload["feature"]).id,
            relevant=payload["relevancy"] == "relevant",
            score=parse_rational(payload["score"]),
            flag=payload["flag"],
        )


def classify(relevant: bool, score: Fraction) -> str:
    if not relevant and score != 0:
        return IRRELEVANT_NONZERO
    if relevant and score == 0:
        return RELEVANT_ZERO
    return CONSISTENT


@dataclass(frozen=True)
class AuditReport:
    findings: Tuple[Finding, ...]
    similarity: SimilaritySpec
    shap: ShapReport
    relevancy: RelevancyReport

    @property
    def misleading(self) -> Tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.flag != CONSISTENT)

    def to_dict(self, space: FeatureSpace) -> dict:
        payload = self.shap.to_dict(space)
        payload["relevancy_similarity"] = self.similarity.to_dict()
        payload["relevancy"] = self.relevancy.to_dict()
        payload["audit"] = [f.to_dict(space) for f in self.findings]
        return payload

    @classmethod
    def from_dict(cls, payload: dict, space: FeatureSpace) -> "AuditReport":
        return cls(
            findings=tuple(Finding.from_dict(f, space) for f in payload["audit"]),
            similarity=SimilaritySpec.from_dict(payload["relevancy_similarity"]),
            shap=ShapReport.from_dict(payload, space),
            relevancy=RelevancyReport.from_dict(payload["relevancy"]),
        )


def audit(problem: ExplanationProblem, relevancy_similarity: Optional[SimilaritySpec] = None,
          allow_mismatch: bool = False, limit: Optional[int] = None,
          max_features: int = DEFAULT_MAX_SHAP_FEATURES, ledger: bool = False) -> AuditReport:
    """
    Join SHAP scores with feature relevancy. The relevancy side uses the
    problem's own similarity unless another one is given, which then
    requires `allow_mismatch`.
    """
    similarity = relevancy_similarity or problem.similarity
    if similarity != problem.similarity:
        if not allow_mismatch:
            raise ProblemError(
                f"relevancy similarity ({similarity.describe()}) differs from the problem's "
                f"({problem.similarity.describe()}); pass allow_mismatch to compare anyway"
            )
        logger.warning("Auditing against %s instead of %s", similarity.describe(), problem.similarity.describe())
    relevancy_problem = problem if similarity == problem.similarity else make_problem(
        problem.model, problem.sample, similarity
    )

    shap = shap_all(problem, ledger=ledger, max_features=max_features)
    relevancy = relevant_features(relevancy_problem, limit=limit)
    findings = tuple(
        Finding(feature=i, relevant=i in relevancy.relevant, score=shap.scores[i],
                flag=classify(i in relevancy.relevant, shap.scores[i]))
        for i in sorted(problem.features)
    )
    for finding in findings:
        if finding.flag != CONSISTENT:
            logger.warning("%s: %s with score %s", problem.space.feature(finding.feature).name,
                           finding.flag, format_rational(finding.score))
    return AuditReport(findings=findings, similarity=similarity, shap=shap, relevancy=relevancy)
