"""Safe execution of learned dynamic movement primitives."""

import json

from ._core import (
    DmpModel,
    Obstacle,
    SafeDmpError,
    builtin_demo,
    inverse_log_error,
    learn,
    log_error,
    reroute,
    rollout,
    run,
    stt_control,
)
from ._core import bench as _bench
from ._core import run_scenario as _run_scenario

__all__ = [
    "DmpModel",
    "Obstacle",
    "SafeDmpError",
    "bench",
    "builtin_demo",
    "inverse_log_error",
    "learn",
    "log_error",
    "reroute",
    "rollout",
    "run",
    "run_scenario",
    "stt_control",
]


def run_scenario(path, method=None):
    """Evaluate one scenario file; returns (metrics row dict, log dict)."""
    report, log = _run_scenario(str(path), method)
    return json.loads(report)["rows"][0], log


def bench(paths):
    """Both methods over the given scenario files; returns the parsed report."""
    return json.loads(_bench([str(p) for p in paths]))
