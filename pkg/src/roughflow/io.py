"""File formats: CSV sample paths and JSON rough paths, tangents and areas.

Floats are written with Python's shortest round-trip representation, so a
path written and read back is bit-identical.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError
from .roughpath import GridRoughPath, PairRoughPath, Phi
from .tangent import TangentRep


def read_csv_path(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``t,x1,...,xd`` rows; returns times and an ``(n, d)`` array of points."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0] != "t" or header[1:] != [f"x{i}" for i in range(1, len(header))]:
        raise InputError(f"{path}:1: header must read t,x1,...,xd")
    times, points = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise InputError(f"{path}:{lineno}: non-finite value")
        if times and vals[0] <= times[-1]:
            raise InputError(f"{path}:{lineno}: times must be strictly increasing")
        times.append(vals[0])
        points.append(vals[1:])
    if len(times) < 2:
        raise InputError(f"{path}: need at least two data rows")
    return np.array(times), np.array(points)


def write_csv_path(path: str | Path, times: np.ndarray, points: np.ndarray) -> None:
    points = np.asarray(points, dtype=float).reshape(len(times), -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i}" for i in range(1, points.shape[1] + 1)])
        for t, row in zip(times, points):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def path_to_json(X: GridRoughPath) -> dict[str, Any]:
    m = X.dim
    return {
        "dim": m,
        "times": [float(t) for t in X.times],
        "level1": X.level1.tolist(),
        "level2": X.level2.reshape(X.n_points, m * m).tolist(),
    }


def path_from_json(obj: dict[str, Any]) -> GridRoughPath:
    try:
        m = int(obj["dim"])
        times = np.array(obj["times"], dtype=float)
        l1 = np.array(obj["level1"], dtype=float)
        l2 = np.array(obj["level2"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed rough-path JSON: {exc}") from exc
    n = times.shape[0]
    if l1.shape != (n, m) or l2.shape != (n, m * m):
        raise InputError(f"rough-path JSON arrays do not match dim={m} and {n} times")
    return GridRoughPath(times, l1, l2.reshape(n, m, m))


def _dump(obj: Any, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, allow_nan=False))


def _load(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc


def write_path_json(X: GridRoughPath, path: str | Path) -> None:
    _dump(path_to_json(X), path)


def read_path_json(path: str | Path) -> GridRoughPath:
    return path_from_json(_load(path))


def tangent_to_json(rep: TangentRep) -> dict[str, Any]:
    return {
        "base": path_to_json(rep.base),
        "Z": path_to_json(rep.Z.path),
        "phi": rep.phi.values.tolist(),
    }


def tangent_from_json(obj: dict[str, Any]) -> TangentRep:
    try:
        base = path_from_json(obj["base"])
        Z = PairRoughPath(path_from_json(obj["Z"]))
        phi = Phi(np.array(obj["phi"], dtype=float))
    except KeyError as exc:
        raise InputError(f"malformed tangent JSON: missing {exc}") from exc
    return TangentRep(base, Z, phi)


def write_tangent_json(rep: TangentRep, path: str | Path) -> None:
    _dump(tangent_to_json(rep), path)


def read_tangent_json(path: str | Path) -> TangentRep:
    return tangent_from_json(_load(path))
