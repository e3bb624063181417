"""
Tests for loading model and instance files and writing reports.
"""

import os
import shutil
import tempfile
import unittest
from fractions import Fraction

from fxp.model import InstanceError, ModelValidationError, model_to_dict
from fxp.persistence import load_instance, load_model, read_report, save_model, write_report
from fxp.serialization import canonical_json_hash, format_rational, format_rational_text, parse_rational

from tests.factories import fixture, running_example


class TestPersistence(unittest.TestCase):

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_load_fixture(self):
        model = load_model(fixture("running_example.json"))
        self.assertEqual(model_to_dict(model), model_to_dict(running_example()))

    def test_load_instance(self):
        model = load_model(fixture("running_example.json"))
        sample = load_instance(fixture("v112.json"), model)
        self.assertEqual(sample.point, (1, 1, 2))
        self.assertEqual(sample.output, Fraction(1, 2))

    def test_stale_instance(self):
        model = load_model(fixture("running_example.json"))
        with self.assertRaises(InstanceError):
            load_instance(fixture("stale.json"), model)

    def test_invalid_model_file(self):
        with self.assertRaises(ModelValidationError) as cm:
            load_model(fixture("bad_partition.json"))
        self.assertEqual(cm.exception.invariant, "edges do not partition domain")
        with self.assertRaises(ModelValidationError) as cm:
            load_model(fixture("constant.json"))
        self.assertEqual(cm.exception.invariant, "constant model")

    def test_missing_file(self):
        with self.assertRaises(FileNotFoundError):
            load_model(os.path.join(self.tmpdir, "nope.json"))

    def test_save_model_round_trip(self):
        path = os.path.join(self.tmpdir, "tree.json")
        save_model(running_example(), path)
        self.assertEqual(model_to_dict(load_model(path)), model_to_dict(running_example()))

    def test_write_report_creates_directories(self):
        path = os.path.join(self.tmpdir, "out", "report.json")
        write_report({"axps": [[1]], "exhausted": True}, path)
        self.assertEqual(read_report(path), {"axps": [[1]], "exhausted": True})
        self.assertEqual([f for f in os.listdir(os.path.dirname(path)) if f.endswith(".tmp")], [])


class TestSerialization(unittest.TestCase):

    def test_rationals(self):
        self.assertEqual(parse_rational("9/4"), Fraction(9, 4))
        self.assertEqual(parse_rational(3), Fraction(3))
        self.assertEqual(format_rational(Fraction(-1, 16)), "-1/16")
        self.assertEqual(format_rational(Fraction(2)), "2")
        self.assertEqual(format_rational_text(Fraction(13, 16)), "13/16 (0.8125)")
        for raw in (0.5, True, "x", "1/0", None, "0.5", "1e3", "2E-1"):
            with self.assertRaises(ValueError):
                parse_rational(raw)

    def test_hash_ignores_key_order(self):
        self.assertEqual(canonical_json_hash({"a": 1, "b": [1, 2]}), canonical_json_hash({"b": [1, 2], "a": 1}))
        self.assertNotEqual(canonical_json_hash({"a": 1}), canonical_json_hash({"a": 2}))


if __name__ == '__main__':
    unittest.main()
