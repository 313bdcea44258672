"""Python front end for the iotstage co-simulation core."""

import json

from ._core import (
    IotstageError,
    Scenario,
    distance_traveled,
    estimate,
    format_summary,
    in_range,
    probe,
    run,
    summarize,
    validate,
)
from ._core import run_repeated as _run_repeated

__all__ = [
    "IotstageError",
    "Scenario",
    "distance_traveled",
    "estimate",
    "format_summary",
    "in_range",
    "load",
    "probe",
    "run",
    "run_repeated",
    "summarize",
    "validate",
]

__version__ = "0.1.0"


def load(path):
    return Scenario.load(str(path))


def run_repeated(scenario, n, trace_path=""):
    """Run n seeds (seed, seed+1, ...) and return the aggregated report as a dict."""
    return json.loads(_run_repeated(scenario, n, str(trace_path)))
