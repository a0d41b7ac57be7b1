"""
Report writers: JSON and CSV reports, minimizer grids and radial profiles as plot-ready CSV.
"""

import csv
import io
import json
import logging
from pathlib import Path

import numpy as np

from lab.numerics.capacity import CapacityResult

logger = logging.getLogger(__name__)

VERDICT_COLUMNS = ("name", "status", "kind", "lhs", "rhs", "slack", "tolerance_used")


def to_json(report: dict) -> str:
    # allow_nan=False: every non-finite value must already be encoded as a string
    return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _flatten(prefix, value, rows):
    if isinstance(value, dict):
        for key, item in value.items():
            _flatten(f"{prefix}.{key}" if prefix else str(key), item, rows)
    elif isinstance(value, list) and value and isinstance(value[0], dict):
        for i, item in enumerate(value):
            _flatten(f"{prefix}[{i}]", item, rows)
    else:
        rows.append((prefix, json.dumps(value, ensure_ascii=False) if isinstance(value, list) else value))


def to_csv(report: dict) -> str:
    """
    Verify reports become one row per verdict; other reports become key,value rows of the flattened result.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    result = report.get("result", {})

    if isinstance(result, dict) and "verdicts" in result:
        writer.writerow(VERDICT_COLUMNS)
        for verdict in result["verdicts"]:
            writer.writerow([verdict[column] for column in VERDICT_COLUMNS])
    else:
        rows = []
        _flatten("", result, rows)
        writer.writerow(("key", "value"))
        writer.writerows(rows)

    return buffer.getvalue()


def render(report: dict, format: str = "json") -> str:
    return to_csv(report) if format == "csv" else to_json(report)


def write_text(text: str, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("wrote %s", path)


def write_minimizer_csv(result: CapacityResult, path) -> None:
    """One row per domain cell: the cell-centre coordinates and the minimizer value."""
    centers = result.domain.cell_centers()
    inside = np.isfinite(result.minimizer)
    n = result.domain.dimension

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"x{k}" for k in range(n)] + ["u"])
    for point, value in zip(centers[inside], result.minimizer[inside]):
        writer.writerow([f"{c:.10g}" for c in point] + [f"{value:.10g}"])

    write_text(buffer.getvalue(), path)


def radial_profile(result: CapacityResult, center=None, bins=None):
    """
    Minimizer averaged over spherical shells about a centre (default: the domain centre).

    :return: (radii, values) at the shell midpoints, skipping empty shells
    """
    domain = result.domain
    if center is None:
        lower, upper = domain.bounds()
        center = domain.center if domain.center is not None else 0.5 * (lower + upper)

    inside = np.isfinite(result.minimizer)
    distance = np.linalg.norm(domain.cell_centers()[inside] - np.asarray(center, dtype=float), axis=-1)
    values = result.minimizer[inside]

    bins = bins or domain.grid // 2
    edges = np.linspace(0.0, distance.max(), bins + 1)
    which = np.clip(np.digitize(distance, edges) - 1, 0, bins - 1)

    counts = np.bincount(which, minlength=bins)
    sums = np.bincount(which, weights=values, minlength=bins)
    filled = counts > 0
    midpoints = 0.5 * (edges[:-1] + edges[1:])
    return midpoints[filled], sums[filled] / counts[filled]


def write_profile_csv(result: CapacityResult, path, center=None, bins=None) -> None:
    radii, values = radial_profile(result, center, bins)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(("radius", "u"))
    writer.writerows((f"{r:.10g}", f"{v:.10g}") for r, v in zip(radii, values))

    write_text(buffer.getvalue(), path)
