"""CSV and JSON reading/writing for series, profiles and reports."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .core_approx import SampleSeries
from .detector import PointDiagnostics

PROFILE_COLUMNS = ("zeta", "delta_t", "variance", "z", "e_approx", "e_combined", "e_extrap")

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "config", "sigma_hat", "knots", "profile_path"],
    "properties": {
        "schema_version": {"const": 1},
        "config": {"type": "object"},
        "sigma_hat": {"type": ["number", "null"]},
        "knots": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["zeta", "delta_t", "z", "sign"],
                "properties": {
                    "zeta": {"type": "number"},
                    "delta_t": {"type": "number"},
                    "z": {"type": ["number", "null"]},
                    "sign": {"enum": [-1, 0, 1]},
                },
            },
        },
        "profile_path": {"type": ["string", "null"]},
    },
}

MONTECARLO_SCHEMA = {
    "type": "object",
    "required": [
        "schema_version", "m", "sigma", "num_points", "base_seed", "config",
        "detection_rate", "spurious_per_run", "knots",
    ],
    "properties": {
        "schema_version": {"const": 1},
        "m": {"type": "integer", "minimum": 1},
        "sigma": {"type": "number", "minimum": 0},
        "num_points": {"type": "integer", "minimum": 2},
        "base_seed": {"type": "integer"},
        "config": {"type": "object"},
        "detection_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "spurious_per_run": {"type": "number", "minimum": 0},
        "knots": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "true_location", "mean_error", "ci_halfwidth", "detection_rate", "n_detected",
                ],
                "properties": {
                    "true_location": {"type": "number"},
                    "mean_error": {"type": ["number", "null"]},
                    "ci_halfwidth": {"type": ["number", "null"]},
                    "detection_rate": {"type": "number", "minimum": 0, "maximum": 1},
                    "n_detected": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}


class DataError(ValueError):
    """Unparseable input data."""


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _column_index(selector, header, default):
    if selector is None:
        if header and default in header:
            return header.index(default)
        return {"x": 0, "y": 1}[default]
    if header and selector in header:
        return header.index(selector)
    try:
        return int(selector)
    except ValueError:
        raise DataError(f"no column named {selector!r}") from None


def read_series(path, x_col=None, y_col=None):
    """
    Read a comma-separated file into a SampleSeries.

    A first row that is not entirely numeric is taken as the header.  Columns
    are chosen by header name or 0-based index; without selectors the
    columns named ``x`` and ``y`` are used, else the first two.
    """
    text = Path(path).read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    ix = _column_index(x_col, header, "x")
    iy = _column_index(y_col, header, "y")
    try:
        data = np.array([[float(r[ix]), float(r[iy])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: {exc}") from None
    if data.shape[0] < 2:
        raise DataError(f"{path}: need at least two rows")
    try:
        return SampleSeries(data[:, 0], data[:, 1])
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def _fmt(v):
    return repr(float(v))


def write_series(series, path):
    lines = ["x,y"] + [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(series.x, series.y)]
    _write_text(path, "\n".join(lines) + "\n")


def write_profile(profile, path):
    lines = [",".join(PROFILE_COLUMNS)]
    for p in profile:
        vals = (p.zeta, p.delta_t, p.variance, p.z_score, p.e_approx, p.e_combined, p.e_extrap)
        lines.append(",".join(_fmt(v) for v in vals))
    _write_text(path, "\n".join(lines) + "\n")


def read_profile(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            PointDiagnostics(
                zeta=float(r["zeta"]),
                delta_t=float(r["delta_t"]),
                variance=float(r["variance"]),
                e_approx=float(r["e_approx"]),
                e_combined=float(r["e_combined"]),
                e_extrap=float(r["e_extrap"]),
                z_score=float(r["z"]),
            )
            for r in reader
        ]


def _finite_or_none(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite_or_none(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_none(v) for v in obj]
    return obj


def dump_json(obj, path):
    """Write JSON with non-finite floats as null; ``-`` means stdout."""
    _write_text(path, json.dumps(_finite_or_none(obj), indent=2, sort_keys=True) + "\n")


def _write_text(path, text):
    if str(path) == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text)
