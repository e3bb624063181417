"""
Reading models and instances from disk and writing reports back.

Writes go through a temp file in the target directory and a rename.

Usage:
    from fxp.persistence import load_model, load_instance, write_report

    model = load_model("tree.json")
    sample = load_instance("v112.json", model)
    write_report(report, "out/axp.json")
"""

import json
import logging
import os
import tempfile

from .model import Sample, TreeModel, model_to_dict, parse_instance, parse_model

logger = logging.getLogger(__name__)


def load_model(filepath: str) -> TreeModel:
    """
    Raises:
        FileNotFoundError: if the file is missing.
        ModelError:        if it does not parse or breaks a tree invariant.
    """
    model = parse_model(_read_text(filepath))
    logger.info("Loaded %s tree over %d features from '%s'", model.task, model.space.m, filepath)
    return model


def load_instance(filepath: str, model: TreeModel) -> Sample:
    sample = parse_instance(_read_text(filepath), model)
    logger.info("Loaded instance %s from '%s'", model.space.format_point(sample.point), filepath)
    return sample


def save_model(model: TreeModel, filepath: str) -> None:
    _atomic_write_json(filepath, model_to_dict(model))
    logger.info("Saved model with %d nodes to '%s'", len(model.nodes), filepath)


def write_report(report: dict, filepath: str) -> None:
    _atomic_write_json(filepath, report)
    logger.info("Wrote report to '%s'", filepath)


def read_report(filepath: str) -> dict:
    return json.loads(_read_text(filepath))


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _atomic_write_json(filepath: str, data) -> None:
    """Write JSON atomically with fsync for durability."""
    dir_name = os.path.dirname(filepath) or "."
    os.makedirs(dir_name, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=dir_name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, filepath)
    except BaseException:
        try:
            os.unlink(tmp_path)
        except OSError:
            pass
        raise


def _read_text(filepath: str) -> str:
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"File not found: '{filepath}'")
    with open(filepath, "r", encoding="utf-8") as f:
        return f.read()
