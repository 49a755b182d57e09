"""Reading and validation of run directories (manifest.json plus CSV files).

This package consumes only the documented output contract of the simulation
harness: a schema-versioned JSON manifest and per-trajectory CSV files with
columns step,time,value_re,value_im.  Nothing here imports the simulation
package.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

SUPPORTED_SCHEMA = 1
TRAJECTORY_HEADER = ["step", "time", "value_re", "value_im"]


class DataError(ValueError):
    """Input data is missing, malformed, or from an unsupported schema."""


class MissingSeriesError(DataError):
    """A panel asked for trajectory labels the run does not provide."""

    def __init__(self, run_path: str, labels):
        self.labels = sorted(labels)
        super().__init__(f"run {run_path}: missing series {', '.join(self.labels)}")


def read_trajectory_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRAJECTORY_HEADER:
            raise DataError(f"{path}: unexpected trajectory header {header}")
        rows = [(float(r[1]), float(r[2]), float(r[3])) for r in reader]
    if not rows:
        raise DataError(f"{path}: trajectory file has no samples")
    arr = np.asarray(rows)
    times, re, im = arr[:, 0], arr[:, 1], arr[:, 2]
    values = re + 1j * im if np.any(im != 0.0) else re
    return times, values


@dataclass(frozen=True)
class RunDir:
    """One completed experiment directory, addressed through its manifest."""

    path: str
    manifest: dict

    @property
    def experiment(self) -> str:
        return self.manifest["experiment"]

    @property
    def config(self) -> dict:
        return self.manifest["config"]

    @property
    def n_sites(self) -> int:
        return int(self.config["n_sites"])

    @property
    def h(self) -> float:
        return float(self.config["h"])

    def ok_jobs(self) -> list[dict]:
        jobs = [j for j in self.manifest["jobs"] if j.get("status") == "ok"]
        if all("tau" in j["params"] for j in jobs):
            jobs.sort(key=lambda j: j["params"]["tau"])
        return jobs

    def taus(self) -> np.ndarray:
        return np.array([j["params"]["tau"] for j in self.ok_jobs()])

    def results_column(self, key: str) -> np.ndarray:
        jobs = self.ok_jobs()
        missing = [str(j["index"]) for j in jobs if key not in j["results"]]
        if missing:
            raise DataError(f"run {self.path}: results lack {key!r} (jobs {', '.join(missing)})")
        return np.array([j["results"][key] for j in jobs])

    def series(self, job: dict, label: str) -> tuple[np.ndarray, np.ndarray]:
        for traj in job.get("trajectories", []):
            if traj["label"] == label:
                return read_trajectory_csv(os.path.join(self.path, traj["file"]))
        raise MissingSeriesError(self.path, [label])

    def require_labels(self, labels) -> None:
        """Raise one error naming every label absent from any completed job."""
        missing = set()
        for job in self.ok_jobs():
            have = {t["label"] for t in job.get("trajectories", [])}
            missing.update(set(labels) - have)
        if missing:
            raise MissingSeriesError(self.path, missing)


def load_run(path: str) -> RunDir:
    """Load a run directory (or a direct path to its manifest.json)."""
    manifest_path = path
    if os.path.isdir(path):
        manifest_path = os.path.join(path, "manifest.json")
    if not os.path.exists(manifest_path):
        raise DataError(f"no manifest found at {manifest_path}")
    run_dir = os.path.dirname(manifest_path) or "."
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: not valid JSON ({exc})") from exc
    if not isinstance(manifest, dict) or "schema_version" not in manifest:
        raise DataError(f"{manifest_path}: missing schema_version")
    if manifest["schema_version"] != SUPPORTED_SCHEMA:
        raise DataError(
            f"{manifest_path}: schema_version {manifest['schema_version']} "
            f"unsupported (expected {SUPPORTED_SCHEMA})"
        )
    for key in ("experiment", "config", "jobs"):
        if key not in manifest:
            raise DataError(f"{manifest_path}: missing {key!r}")
    run = RunDir(path=run_dir, manifest=manifest)
    if not run.ok_jobs():
        raise DataError(f"{manifest_path}: no completed jobs to plot")
    return run
