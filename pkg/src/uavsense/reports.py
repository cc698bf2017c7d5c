"""JSON exchange format for trajectories and solver reports.

Waypoints are written 1-based, as ``[[i, j], ...]``. Derived metrics
(``f_d_m``, ``f_p``, ``total_prob``) are informative; readers recompute
them from the waypoints.
"""
from __future__ import annotations

import json
from typing import List, Optional

from .graph import Trajectory
from .scenario import GridIndex
from .solvers import SolverReport


def _clean(value):
    if isinstance(value, float) and value != value:
        return None
    return value


def trajectory_to_dict(t: Trajectory) -> dict:
    return {
        "waypoints": [[i + 1, j + 1] for i, j in t.waypoints],
        "f_d_m": t.distance,
        "f_p": t.inverse_prob,
        "total_prob": t.total_prob,
    }


def report_to_dict(report: SolverReport, max_distance: Optional[float] = None) -> dict:
    doc = {"solver": report.solver_tag}
    if report.initial_tag is not None:
        doc["initial"] = report.initial_tag
    if max_distance is not None:
        doc["dbar_m"] = max_distance
    doc.update(trajectory_to_dict(report.trajectory))
    if report.dual_bound is not None:
        doc["dual_bound"] = report.dual_bound
    doc["wallclock_s"] = report.wallclock_s
    doc["details"] = {k: _clean(v) for k, v in sorted(report.details.items())}
    return doc


def dumps(doc: dict) -> bytes:
    """Indented JSON with one ``[i, j]`` pair per line in ``waypoints``."""
    doc = dict(doc)
    wps = doc.get("waypoints")
    marker = "\x00waypoints\x00"
    if isinstance(wps, list):
        doc["waypoints"] = marker
    text = json.dumps(doc, indent=2, sort_keys=False)
    if isinstance(wps, list):
        body = ",\n    ".join(json.dumps(w) for w in wps)
        text = text.replace(json.dumps(marker), "[\n    " + body + "\n  ]")
    return (text + "\n").encode("utf-8")


def read_waypoints(source) -> List[GridIndex]:
    """0-based waypoints from a trajectory or report document."""
    if hasattr(source, "read"):
        source = source.read()
    doc = json.loads(source)
    raw = doc.get("waypoints") if isinstance(doc, dict) else None
    if not isinstance(raw, list) or not raw:
        raise ValueError("trajectory document needs a non-empty 'waypoints' list")
    out = []
    for k, w in enumerate(raw):
        if not (isinstance(w, list) and len(w) == 2 and all(isinstance(v, int) for v in w)):
            raise ValueError(f"waypoints[{k}] must be a pair of integers")
        out.append((w[0] - 1, w[1] - 1))
    return out
