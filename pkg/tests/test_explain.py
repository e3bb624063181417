"""
Tests for single AXp/CXp extraction, minimality checks and inflation.
"""

import random
import unittest
from fractions import Fraction
from unittest import mock

from fxp.explain import (
    AXP,
    CXP,
    Explanation,
    InfeasibleQueryError,
    InflatedExplanation,
    inflate,
    is_axp,
    is_cxp,
    one_axp,
    one_cxp,
)
from fxp.model import make_sample
from fxp.oracle import DistanceBound, is_waxp
from fxp.semantics import SimilaritySpec, make_problem, similar

from tests.factories import brute_axps, brute_cxps, problem_010, problem_112, random_problem, running_example


class TestOneAxp(unittest.TestCase):

    def test_running_example_strict(self):
        explanation = one_axp(problem_112(strict=True))
        self.assertEqual(explanation.kind, AXP)
        self.assertEqual(explanation.features, (1,))
        self.assertEqual(explanation.format(running_example().space), "AXp: {x1}")

    def test_deletion_trace(self):
        trace = one_axp(problem_112(strict=True), order=(1, 2, 3)).trace
        self.assertEqual([step.feature for step in trace], [1, 2, 3])
        self.assertEqual(trace[0].current, (1, 2, 3))
        self.assertEqual(trace[0].path, (1, 2, 5))
        self.assertFalse(trace[0].dropped)
        self.assertIsNone(trace[1].path)
        self.assertTrue(trace[1].dropped)
        self.assertEqual(trace[1].result, (1, 3))
        self.assertTrue(trace[2].dropped)
        self.assertEqual(trace[2].result, (1,))

    def test_order_changes_the_answer(self):
        problem = problem_112(strict=False)
        self.assertEqual(one_axp(problem, order=(1, 2, 3)).features, (3,))
        self.assertEqual(one_axp(problem, order=(3, 1, 2)).features, (1,))

    def test_one_oracle_call_per_feature(self):
        problem = problem_010()
        with mock.patch("fxp.explain.is_waxp", wraps=is_waxp) as oracle:
            one_axp(problem)
        self.assertEqual(oracle.call_count, problem.space.m)

    def test_bad_order(self):
        with self.assertRaises(ValueError):
            one_axp(problem_112(), order=(1, 2))
        with self.assertRaises(ValueError):
            one_axp(problem_112(), order=(1, 1, 2))

    def test_empty_axp_when_nothing_is_reachable(self):
        model = running_example()
        problem = make_problem(model, make_sample(model, (1, 1, 2)), SimilaritySpec.threshold(5))
        self.assertEqual(one_axp(problem).features, ())

    def test_always_an_axp(self):
        rng = random.Random(21)
        for _ in range(500):
            problem = random_problem(rng)
            order = sorted(problem.features)
            rng.shuffle(order)
            explanation = one_axp(problem, order=order)
            self.assertIn(explanation.features, brute_axps(problem))
            self.assertTrue(is_axp(problem, explanation.features))


class TestOneCxp(unittest.TestCase):

    def test_running_example(self):
        self.assertEqual(one_cxp(problem_112(strict=True)).features, (1,))
        self.assertEqual(one_cxp(problem_112(strict=False)).features, (1, 3))

    def test_order_on_second_sample(self):
        problem = problem_010()
        self.assertEqual(one_cxp(problem, order=(1, 2, 3)).features, (3,))
        self.assertEqual(one_cxp(problem, order=(3, 1, 2)).features, (1,))

    def test_no_cxp(self):
        model = running_example()
        problem = make_problem(model, make_sample(model, (1, 1, 2)), SimilaritySpec.threshold(5))
        with self.assertRaises(InfeasibleQueryError):
            one_cxp(problem)

    def test_always_a_cxp(self):
        rng = random.Random(22)
        for _ in range(500):
            problem = random_problem(rng)
            order = sorted(problem.features)
            rng.shuffle(order)
            cxps = brute_cxps(problem)
            if not cxps:
                with self.assertRaises(InfeasibleQueryError):
                    one_cxp(problem, order=order)
                continue
            explanation = one_cxp(problem, order=order)
            self.assertEqual(explanation.kind, CXP)
            self.assertIn(explanation.features, cxps)
            self.assertTrue(is_cxp(problem, explanation.features))


class TestMinimality(unittest.TestCase):

    def test_is_axp(self):
        problem = problem_112(strict=False)
        self.assertTrue(is_axp(problem, {1}))
        self.assertTrue(is_axp(problem, {3}))
        self.assertFalse(is_axp(problem, {1, 3}))
        self.assertFalse(is_axp(problem, {2}))

    def test_is_cxp(self):
        problem = problem_010()
        self.assertTrue(is_cxp(problem, {1}))
        self.assertTrue(is_cxp(problem, {3}))
        self.assertFalse(is_cxp(problem, {1, 3}))
        self.assertFalse(is_cxp(problem, {2}))

    def test_bounded_axp(self):
        problem = problem_010()
        bound = DistanceBound(norm=0, eps=Fraction(1))
        axp = one_axp(problem, bound=bound)
        self.assertEqual(axp.features, (1, 3))
        self.assertTrue(is_axp(problem, axp.features, bound))
        self.assertEqual(one_axp(problem, bound=DistanceBound(norm=0, eps=Fraction(0))).features, ())
        self.assertIsNone(axp.trace[0].path)

    def test_explanation_round_trip(self):
        explanation = one_axp(problem_112(strict=True))
        self.assertEqual(Explanation.from_dict(explanation.to_dict()), explanation)


class TestInflate(unittest.TestCase):

    def test_running_example_rule(self):
        problem = problem_010()
        inflated = inflate(problem, one_axp(problem))
        self.assertEqual(inflated.render(problem.model), "IF x1 in {0} AND x3 in {0,2} THEN output = 0")
        self.assertEqual(inflated.literals, {1: frozenset({0}), 3: frozenset({0, 2})})
        self.assertEqual(inflated.removable, ())

    def test_concrete_recovers_axp(self):
        problem = problem_010()
        inflated = inflate(problem, {1, 3})
        self.assertEqual(inflated.concrete(problem.v), {1: {0}, 3: {0}})

    def test_rejects_non_waxp(self):
        with self.assertRaises(ValueError):
            inflate(problem_010(), {1})

    def test_non_minimal_input_warns(self):
        problem = problem_112(strict=True)
        with self.assertLogs("fxp.explain", level="WARNING"):
            inflated = inflate(problem, {1, 2})
        self.assertEqual(inflated.removable, (2,))

    def test_empty_rule(self):
        model = running_example()
        problem = make_problem(model, make_sample(model, (1, 1, 2)), SimilaritySpec.threshold(5))
        self.assertEqual(inflate(problem, ()).render(model), "IF TRUE THEN output = 1/2")

    def test_inflated_rule_still_holds(self):
        rng = random.Random(23)
        for _ in range(40):
            problem = random_problem(rng)
            inflated = inflate(problem, one_axp(problem))
            for x in problem.space.points():
                if all(x[i - 1] in values for i, values in inflated.literals.items()):
                    self.assertTrue(similar(problem, x))

    def test_round_trip(self):
        problem = problem_010()
        inflated = inflate(problem, {1, 3})
        payload = inflated.to_dict(problem.model)
        self.assertEqual(InflatedExplanation.from_dict(payload), inflated)
        self.assertEqual(payload["output"], "0")


if __name__ == '__main__':
    unittest.main()
