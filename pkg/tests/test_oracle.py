"""
Tests for the WAXp/WCXp predicates, distances and adversarial examples.
"""

import random
import unittest
from fractions import Fraction

from fxp.oracle import (
    INF,
    AdversarialQuery,
    DistanceBound,
    Witness,
    consistent_dissimilar_path,
    find_adversarial_example,
    is_waxp,
    is_wcxp,
    parse_eps,
    parse_norm,
    point_distance,
    wcxp_witness,
)
from fxp.model import evaluate
from fxp.semantics import similar

from tests.factories import (
    brute_closest,
    brute_waxp,
    brute_wcxp,
    problem_010,
    problem_112,
    random_problem,
    running_example,
    subsets,
)


class TestPredicates(unittest.TestCase):

    def test_running_example_strict(self):
        problem = problem_112(strict=True)
        self.assertTrue(is_waxp(problem, {1}))
        self.assertFalse(is_waxp(problem, {2, 3}))
        self.assertTrue(is_wcxp(problem, {1}))
        self.assertFalse(is_wcxp(problem, {2, 3}))

    def test_running_example_nonstrict(self):
        problem = problem_112(strict=False)
        self.assertTrue(is_waxp(problem, {3}))
        self.assertFalse(is_waxp(problem, {2}))
        self.assertFalse(is_wcxp(problem, {1}))
        self.assertTrue(is_wcxp(problem, {1, 3}))

    def test_blocking_path(self):
        problem = problem_112(strict=True)
        self.assertEqual(consistent_dissimilar_path(problem, {2, 3}).format_nodes(), "<1,2,5>")
        self.assertIsNone(consistent_dissimilar_path(problem, {1}))

    def test_unknown_feature(self):
        with self.assertRaises(ValueError):
            is_waxp(problem_112(), {4})

    def test_matches_brute_force(self):
        rng = random.Random(3)
        for _ in range(100):
            problem = random_problem(rng)
            for s in subsets(problem.features):
                self.assertEqual(is_waxp(problem, s), brute_waxp(problem, s))
                self.assertEqual(is_wcxp(problem, s), brute_wcxp(problem, s))

    def test_monotone(self):
        rng = random.Random(4)
        pairs = 0
        while pairs < 1000:
            problem = random_problem(rng)
            for s in subsets(problem.features):
                waxp, wcxp = is_waxp(problem, s), is_wcxp(problem, s)
                for i in problem.features - s:
                    pairs += 1
                    if waxp:
                        self.assertTrue(is_waxp(problem, s | {i}))
                    if wcxp:
                        self.assertTrue(is_wcxp(problem, s | {i}))

    def test_bounded_matches_brute_force(self):
        rng = random.Random(8)
        for _ in range(40):
            problem = random_problem(rng)
            bound = DistanceBound(norm=rng.choice((0, 1, INF)), eps=Fraction(rng.randint(0, 3)))
            for s in subsets(problem.features):
                self.assertEqual(is_waxp(problem, s, bound), brute_waxp(problem, s, bound))
                self.assertEqual(is_wcxp(problem, s, bound), brute_wcxp(problem, s, bound))

    def test_unbounded_is_plain(self):
        problem = problem_010()
        unbounded = DistanceBound(norm=1, eps=None)
        for s in subsets(problem.features):
            self.assertEqual(is_waxp(problem, s, unbounded), is_waxp(problem, s))


class TestWitnesses(unittest.TestCase):

    def test_wcxp_witness(self):
        witness = wcxp_witness(problem_010(), {3})
        self.assertEqual(witness.point, (0, 1, 1))
        self.assertEqual(witness.output, Fraction(9, 4))
        self.assertEqual(witness.distance, 1)

    def test_wcxp_witness_none(self):
        self.assertIsNone(wcxp_witness(problem_010(), {2}))

    def test_wcxp_witness_is_dissimilar(self):
        rng = random.Random(9)
        for _ in range(40):
            problem = random_problem(rng)
            for s in subsets(problem.features):
                witness = wcxp_witness(problem, s)
                self.assertEqual(witness is not None, is_wcxp(problem, s))
                if witness is None:
                    continue
                self.assertFalse(similar(problem, witness.point))
                for i in problem.features - s:
                    self.assertEqual(witness.point[i - 1], problem.v[i - 1])

    def test_adversarial_l0(self):
        query = AdversarialQuery(norm=0, eps=Fraction(1), fixed=frozenset())
        witness = find_adversarial_example(problem_112(strict=True), query)
        self.assertEqual(witness.point, (0, 1, 2))
        self.assertEqual(witness.output, 0)
        self.assertEqual(witness.distance, 1)

    def test_adversarial_linf_zero_radius(self):
        query = AdversarialQuery(norm=INF, eps=Fraction(0), fixed=frozenset())
        self.assertIsNone(find_adversarial_example(problem_112(strict=True), query))

    def test_adversarial_fixed_feature(self):
        query = AdversarialQuery(norm=0, eps=None, fixed=frozenset({1}))
        self.assertIsNone(find_adversarial_example(problem_112(strict=True), query))

    def test_adversarial_matches_brute_force(self):
        rng = random.Random(12)
        for _ in range(40):
            problem = random_problem(rng)
            norm = rng.choice((0, 1, INF))
            eps = rng.choice((None, Fraction(1), Fraction(2)))
            for fixed in subsets(problem.features):
                query = AdversarialQuery(norm=norm, eps=eps, fixed=fixed)
                witness = find_adversarial_example(problem, query)
                expected = brute_closest(problem, fixed, query.bound)
                if expected is None:
                    self.assertIsNone(witness)
                    continue
                self.assertEqual((witness.point, witness.distance), expected)
                self.assertEqual(point_distance(problem.space, norm, witness.point, problem.v), witness.distance)

    def test_adversarial_iff_wcxp(self):
        rng = random.Random(13)
        for _ in range(100):
            problem = random_problem(rng)
            for free in subsets(problem.features):
                fixed = problem.features - free
                witness = find_adversarial_example(problem, AdversarialQuery(norm=0, eps=None, fixed=fixed))
                self.assertEqual(witness is not None, is_wcxp(problem, free))
                if witness is None:
                    continue
                self.assertEqual(witness.output, evaluate(problem.model, witness.point))
                self.assertFalse(similar(problem, witness.point))
                for i in fixed:
                    self.assertEqual(witness.point[i - 1], problem.v[i - 1])
                self.assertEqual(witness.distance, point_distance(problem.space, 0, witness.point, problem.v))

    def test_witness_round_trip(self):
        witness = Witness(point=(0, 1, 1), output=Fraction(9, 4), distance=Fraction(1))
        self.assertEqual(Witness.from_dict(witness.to_dict()), witness)
        labelled = Witness(point=("sunny", 0), output="play", distance=Fraction(1))
        self.assertEqual(Witness.from_dict(labelled.to_dict()), labelled)


class TestDistances(unittest.TestCase):

    def setUp(self):
        self.space = running_example().space

    def test_norms(self):
        x, v = (0, 0, 0), (1, 1, 2)
        self.assertEqual(point_distance(self.space, 0, x, v), 3)
        self.assertEqual(point_distance(self.space, 1, x, v), 4)
        self.assertEqual(point_distance(self.space, INF, x, v), 2)

    def test_parse(self):
        self.assertEqual(parse_norm("inf"), INF)
        self.assertEqual(parse_norm("1"), 1)
        self.assertIsNone(parse_eps("unbounded"))
        self.assertEqual(parse_eps("1/2"), Fraction(1, 2))
        with self.assertRaises(ValueError):
            parse_norm("2")
        with self.assertRaises(ValueError):
            parse_eps("-1")


if __name__ == '__main__':
    unittest.main()
