"""Python front end to the breaklab core."""

import csv
import io
import json
from pathlib import Path

from ._core import (
    BreaklabError,
    ConvergenceError,
    Potential,
    SchemaError,
    __version__,
    amgm_slack,
    eigenvalues,
    set_threads,
    solve_sdot,
    unit_det_sweep,
)
from . import _core

__all__ = [
    "BreaklabError",
    "ConvergenceError",
    "Potential",
    "SchemaError",
    "__version__",
    "amgm_slack",
    "eigenvalues",
    "polar",
    "read_table",
    "run",
    "set_threads",
    "solve_sdot",
    "solve_sdot_scenario",
    "unit_det_sweep",
    "validate",
]


def _text(scenario):
    """Scenario as JSON text from a dict, a path or a JSON string."""
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    if isinstance(scenario, Path) or (isinstance(scenario, str) and not scenario.lstrip().startswith("{")):
        return Path(scenario).read_text()
    return scenario


def validate(scenario):
    return _core.validate(_text(scenario))


def run(scenario, seed=None):
    """Returns (report dict, {table name: CSV text})."""
    report, tables = _core.run(_text(scenario), seed)
    return json.loads(report), tables


def solve_sdot_scenario(scenario, seed=None):
    report, tables = _core.solve_sdot_scenario(_text(scenario), seed)
    return json.loads(report), tables


def polar(scenario, seed=None):
    report, tables = _core.polar(_text(scenario), seed)
    return json.loads(report), tables


def read_table(text):
    """Rows of a CSV table as dicts."""
    return list(csv.DictReader(io.StringIO(text, newline="")))
