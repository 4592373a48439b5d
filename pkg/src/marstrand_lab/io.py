"""Flat-file formats: JSON with sorted keys, CSV with a header row, point clouds."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import PreconditionError
from .fractals import PointCloud


def _plain(obj):
    """JSON-ready copy: numpy scalars and arrays unwrapped, tuples as lists,
    non-finite floats as null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_cloud(stem, cloud: PointCloud, extra=None):
    """``stem.csv`` with x,y rows and a ``stem.json`` sidecar carrying
    resolution and provenance."""
    stem = Path(stem)
    csv_path = write_csv(stem.with_suffix(".csv"), ["x", "y"], cloud.points.tolist())
    meta = {"resolution": cloud.resolution, "provenance": cloud.provenance, "n_points": len(cloud)}
    meta.update(extra or {})
    return csv_path, write_json(stem.with_suffix(".json"), meta)


def read_cloud(csv_path) -> PointCloud:
    csv_path = Path(csv_path)
    sidecar = csv_path.with_suffix(".json")
    if not sidecar.exists():
        raise PreconditionError(f"cloud {csv_path} has no {sidecar.name} sidecar with its resolution")
    meta = read_json(sidecar)
    header, rows = read_csv(csv_path)
    if [h.strip() for h in header] != ["x", "y"]:
        raise PreconditionError(f"cloud CSV header must be x,y, got {header}")
    pts = np.array(rows, dtype=float).reshape(-1, 2)
    return PointCloud(pts, float(meta["resolution"]), meta.get("provenance", {}))
