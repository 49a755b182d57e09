"""CSV and JSON persistence for trajectories and run manifests.

Trajectory CSVs carry the data (step, time, value_re, value_im at full
double precision); everything else about a run (model parameters, tau,
windows, seeds, labels) lives in the run manifest, which references the
CSV files by name.  Manifest writes go through a temporary file and an
atomic rename so a crash mid-run never leaves a corrupt manifest.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .observables import TrajectoryRecord

TRAJECTORY_HEADER = ["step", "time", "value_re", "value_im"]


def write_trajectory_csv(path: str, record: TrajectoryRecord) -> None:
    values = np.asarray(record.values)
    re = values.real
    im = values.imag if np.iscomplexobj(values) else np.zeros_like(re)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for step, (t, a, b) in enumerate(zip(record.times, re, im)):
            writer.writerow([step, f"{t:.17g}", f"{a:.17g}", f"{b:.17g}"])


def read_trajectory_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Return (times, values); values are complex only if any value_im != 0."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRAJECTORY_HEADER:
            raise ValueError(f"unexpected trajectory header {header!r} in {path}")
        rows = [(float(t), float(a), float(b)) for _, t, a, b in reader]
    times = np.array([r[0] for r in rows])
    re = np.array([r[1] for r in rows])
    im = np.array([r[2] for r in rows])
    values = re + 1j * im if np.any(im) else re
    return times, values


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    return obj


def write_manifest(path: str, manifest: dict) -> None:
    """Serialize atomically: write a sibling temp file, then rename over."""
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(_json_safe(manifest), fh, indent=1, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def read_manifest(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
