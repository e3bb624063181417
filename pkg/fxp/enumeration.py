"""
Enumeration of every AXp and CXp with a MARCO-style loop.

The map holds clauses over one selector per feature (true = fixed to v_i).
A seed that is a WAXp shrinks to an AXp X and blocks its supersets with
(∨_{i∈X} ¬u_i); any other seed grows to a maximal non-WAXp whose
complement Y is a CXp, blocked with (∨_{i∈Y} u_i). The loop ends when the
map has no model left.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .explain import AXP, CXP, Explanation, shrink
from .model import FeatureSpace
from .oracle import DistanceBound, is_waxp
from .semantics import CapExceededError, ExplanationProblem

logger = logging.getLogger(__name__)

MAX_SELECTORS = 64


class EnumerationLimitError(CapExceededError):
    """Relevancy needs a complete enumeration but the limit stopped it."""


class MapSolver:
    """Clause store over selector variables, with unit propagation and true-first branching."""

    def __init__(self, variables: Iterable[int]):
        self.variables = tuple(sorted(variables))
        if len(self.variables) > MAX_SELECTORS:
            raise CapExceededError(f"{len(self.variables)} selectors exceed the map solver limit {MAX_SELECTORS}")
        self.clauses: List[Tuple[int, ...]] = []

    def block_up(self, fixed: Iterable[int]) -> None:
        """Forbid every superset of `fixed`."""
        self.clauses.append(tuple(-i for i in sorted(fixed)))

    def block_down(self, released: Iterable[int]) -> None:
        """Require at least one feature of `released` to be fixed."""
        self.clauses.append(tuple(sorted(released)))

    def next_seed(self) -> Optional[FrozenSet[int]]:
        assignment = self._solve({})
        if assignment is None:
            return None
        return frozenset(var for var, value in assignment.items() if value)

    def _propagate(self, assignment: Dict[int, bool]) -> Optional[Dict[int, bool]]:
        assignment = dict(assignment)
        changed = True
        while changed:
            changed = False
            for clause in self.clauses:
                open_literals = []
                satisfied = False
                for literal in clause:
                    var = abs(literal)
                    if var in assignment:
                        if assignment[var] == (literal > 0):
                            satisfied = True
                            break
                    else:
                        open_literals.append(literal)
                if satisfied:
                    continue
                if not open_literals:
                    return None
                if len(open_literals) == 1:
                    unit = open_literals[0]
                    assignment[abs(unit)] = unit > 0
                    changed = True
        return assignment

    def _solve(self, assignment: Dict[int, bool]) -> Optional[Dict[int, bool]]:
        assignment = self._propagate(assignment)
        if assignment is None:
            return None
        for var in self.variables:
            if var not in assignment:
                for value in (True, False):
                    result = self._solve({**assignment, var: value})
                    if result is not None:
                        return result
                return None
        return assignment


@dataclass
class EnumerationState:
    fingerprint: str
    axps: List[Explanation] = field(default_factory=list)
    cxps: List[Explanation] = field(default_factory=list)
    exhausted: bool = False

    def axp_sets(self) -> List[Tuple[int, ...]]:
        return [x.features for x in self.axps]

    def cxp_sets(self) -> List[Tuple[int, ...]]:
        return [y.features for y in self.cxps]

    def relevant(self) -> FrozenSet[int]:
        return frozenset(i for x in self.axps for i in x.features)

    def necessary(self) -> FrozenSet[int]:
        if not self.axps:
            return frozenset()
        return reduce(lambda acc, x: acc & x.feature_set, self.axps[1:], self.axps[0].feature_set)

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "axps": [list(s) for s in self.axp_sets()],
            "cxps": [list(s) for s in self.cxp_sets()],
            "relevant": sorted(self.relevant()),
            "necessary": sorted(self.necessary()),
            "exhausted": self.exhausted,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EnumerationState":
        fingerprint = payload["fingerprint"]
        return cls(
            fingerprint=fingerprint,
            axps=[Explanation(AXP, tuple(s), fingerprint) for s in payload["axps"]],
            cxps=[Explanation(CXP, tuple(s), fingerprint) for s in payload["cxps"]],
            exhausted=payload["exhausted"],
        )


def grow(problem: ExplanationProblem, seed: Iterable[int],
         bound: Optional[DistanceBound] = None) -> FrozenSet[int]:
    """Extend a non-WAXp fixed set, in ascending feature order, to a maximal one."""
    grown = set(seed)
    for i in sorted(problem.features - grown):
        if not is_waxp(problem, grown | {i}, bound):
            grown.add(i)
    return frozenset(grown)


def enumerate_explanations(problem: ExplanationProblem, limit: Optional[int] = None,
                           bound: Optional[DistanceBound] = None) -> EnumerationState:
    """
    All AXps and all CXps, in discovery order. With `limit`, stop once that
    many explanations were found and report exhausted=False unless the map
    was already empty.
    """
    state = EnumerationState(fingerprint=problem.fingerprint)
    solver = MapSolver(problem.features)
    features = problem.features
    while True:
        seed = solver.next_seed()
        if seed is None:
            state.exhausted = True
            break
        if limit is not None and len(state.axps) + len(state.cxps) >= limit:
            logger.warning("Enumeration stopped at its limit of %d explanations", limit)
            break
        if is_waxp(problem, seed, bound):
            fixed, _ = shrink(
                problem, seed, sorted(seed),
                holds=lambda s: is_waxp(problem, s, bound),
                fixed_side=lambda s: s,
                bound=bound,
            )
            state.axps.append(Explanation(AXP, tuple(fixed), problem.fingerprint))
            solver.block_up(fixed)
            logger.debug("seed %s -> AXp %s", sorted(seed), sorted(fixed))
        else:
            released = features - grow(problem, seed, bound)
            state.cxps.append(Explanation(CXP, tuple(released), problem.fingerprint))
            solver.block_down(released)
            logger.debug("seed %s -> CXp %s", sorted(seed), sorted(released))
    logger.info("Enumerated %d AXps and %d CXps (exhausted=%s)",
                len(state.axps), len(state.cxps), state.exhausted)
    return state


def _canonical(sets: Iterable[FrozenSet[int]]) -> List[Tuple[int, ...]]:
    unique = {tuple(sorted(s)) for s in sets}
    return sorted(unique, key=lambda s: (len(s), s))


def minimal_hitting_sets(sets: Iterable[Iterable[int]], universe: Iterable[int]) -> List[Tuple[int, ...]]:
    """
    Every subset-minimal H ⊆ universe meeting each given set, by branching on
    the elements of the first set not yet hit and pruning any partial choice
    that already contains a hitting set found earlier.
    """
    universe = frozenset(universe)
    family = []
    for raw in sets:
        s = frozenset(raw)
        if not s <= universe:
            raise ValueError(f"{sorted(s)} is not a subset of the universe {sorted(universe)}")
        if not s:
            raise ValueError("the empty set cannot be hit; the duals are inconsistent")
        family.append(s)
    family = [frozenset(s) for s in _canonical(family)]

    found: List[FrozenSet[int]] = []

    def extend(chosen: FrozenSet[int]) -> None:
        if any(h <= chosen for h in found):
            return
        unhit = next((s for s in family if not s & chosen), None)
        if unhit is None:
            found.append(chosen)
            return
        for element in sorted(unhit):
            extend(chosen | {element})

    extend(frozenset())
    return _canonical(h for h in found if not any(other < h for other in found))


@dataclass(frozen=True)
class RelevancyReport:
    relevant: FrozenSet[int]
    irrelevant: FrozenSet[int]
    necessary: FrozenSet[int]
    witnesses: Mapping[int, Tuple[int, ...]]

    def format(self, space: FeatureSpace) -> str:
        return "\n".join([
            f"relevant: {space.format_set(self.relevant)}",
            f"irrelevant: {space.format_set(self.irrelevant)}",
            f"necessary: {space.format_set(self.necessary)}",
        ])

    def to_dict(self) -> dict:
        return {
            "relevant": sorted(self.relevant),
            "irrelevant": sorted(self.irrelevant),
            "necessary": sorted(self.necessary),
            "witnesses": {str(i): list(x) for i, x in sorted(self.witnesses.items())},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "RelevancyReport":
        return cls(
            relevant=frozenset(payload["relevant"]),
            irrelevant=frozenset(payload["irrelevant"]),
            necessary=frozenset(payload["necessary"]),
            witnesses={int(i): tuple(x) for i, x in payload["witnesses"].items()},
        )


def relevant_features(problem: ExplanationProblem, limit: Optional[int] = None,
                      bound: Optional[DistanceBound] = None) -> RelevancyReport:
    state = enumerate_explanations(problem, limit=limit, bound=bound)
    if not state.exhausted:
        raise EnumerationLimitError(
            f"enumeration stopped after {len(state.axps) + len(state.cxps)} explanations; "
            "raise the limit to decide relevancy"
        )
    relevant = state.relevant()
    witnesses = {}
    for i in sorted(relevant):
        witnesses[i] = next(x.features for x in state.axps if i in x.feature_set)
    return RelevancyReport(
        relevant=relevant,
        irrelevant=problem.features - relevant,
        necessary=state.necessary(),
        witnesses=witnesses,
    )


def necessary_features_fast(problem: ExplanationProblem,
                            bound: Optional[DistanceBound] = None) -> FrozenSet[int]:
    """Features whose release alone breaks WAXp(ℱ); m oracle calls, no enumeration."""
    features = problem.features
    return frozenset(i for i in features if not is_waxp(problem, features - {i}, bound))
