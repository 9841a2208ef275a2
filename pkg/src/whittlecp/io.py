"""CSV / JSON serialization of series, trajectories and curves."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DataError
from .synthesis import ProcessSpec, Trajectory


def _fmt(v):
    return repr(float(v))  # shortest round-trip repr, at most 17 significant digits


def write_series_csv(path, values, header="x"):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        for v in values:
            fh.write(_fmt(v) + "\n")


def read_series_csv(path) -> np.ndarray:
    """One value per line; a first line that is not a number is taken as a header.

    Multi-column files use their first column.
    """
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not UTF-8 text") from exc
    if rows:
        try:
            float(rows[0][0])
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise DataError(f"empty series in {path}")
    out = np.empty(len(rows))
    for i, r in enumerate(rows):
        try:
            out[i] = float(r[0])
        except ValueError:
            raise DataError(f"malformed CSV value {r[0]!r} on data line {i + 1} of {path}") from None
    if not np.all(np.isfinite(out)):
        raise DataError(f"non-finite values in {path}")
    return out


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "values": [float(v) for v in traj.values],
        "seed": traj.seed,
        "spec": None if traj.spec is None else traj.spec.to_dict(),
    }


def write_trajectory(path, traj: Trajectory):
    """Write CSV or JSON depending on the file suffix."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps(trajectory_to_dict(traj)))
    else:
        write_series_csv(path, traj.values)


def read_trajectory(path) -> Trajectory:
    path = Path(path)
    if path.suffix.lower() != ".json":
        return Trajectory(read_series_csv(path))
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict) or "values" not in data:
        raise DataError(f"{path} has no 'values' array")
    try:
        values = np.asarray(data["values"], dtype=float)
    except (TypeError, ValueError):
        raise DataError(f"non-numeric values in {path}") from None
    if values.ndim != 1 or values.size == 0:
        raise DataError(f"empty series in {path}")
    spec = ProcessSpec.from_dict(data["spec"]) if data.get("spec") else None
    return Trajectory(values, spec, data.get("seed"))


def emit_curve(result, path, slope: float = 0.0):
    """Write (K, 2 C(K), 2 C(K) + 2 slope K) rows for plotting the contrast curve."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "twice_contrast", "twice_penalized"])
        for row in result.rows:
            c = row.contrast
            pen = 2.0 * c + 2.0 * slope * row.k
            w.writerow([row.k, _fmt(2.0 * c) if math.isfinite(c) else "inf",
                        _fmt(pen) if math.isfinite(pen) else "inf"])


def write_periodogram_csv(path, prefix, window):
    """Debug dump of (j, lambda_j, I_T(lambda_j))."""
    I = prefix.periodogram(window)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "lambda", "I"])
        for j, (lam, val) in enumerate(zip(prefix.grid.lambdas, I), start=1):
            w.writerow([j, _fmt(lam), _fmt(val)])
