"""Experiment runner: validated configs, sweep execution, persistence.

A run is described by an `ExperimentConfig` (usually loaded from a JSON
file), expands into one job per grid point, and produces a run directory
containing `manifest.json` plus one `traj_<label>_<idx>.csv` per recorded
trajectory.  The manifest is rewritten atomically after every job, so a
crashed run leaves all completed jobs readable.

Exit-code contract used by the CLI: 0 all jobs ok, 2 invalid config,
3 at least one job failed (the manifest says which).
"""

from __future__ import annotations

import datetime
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import __version__
from .noise import NoiseConfig, ensemble_noise_run, timing_noise_run
from .observables import (
    ipr_dynamical,
    ipr_floquet,
    ipr_from_loschmidt,
    otoc_run,
    run_dynamics,
    stroboscopic_average,
    trotter_error_trajectory,
)
from .perturbation import (
    coefficient_report,
    lloyd_commutator_bound,
    trotter_global_defect,
)
from .io import write_manifest, write_trajectory_csv
from .spin_core import IsingModel

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "dynamics",
    "collapse",
    "ipr-sweep",
    "otoc-sweep",
    "qe-sweep",
    "coeffs",
    "noise",
    "lloyd-bound",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; raised before any work is done."""


class ThresholdNotFoundError(RuntimeError):
    """A sweep has no midpoint crossing; message carries plateau diagnostics."""


def default_tau_grid() -> tuple[float, ...]:
    """16 logarithmic points from 0.02/J to 2.0/J, straddling the crossover."""
    return tuple(float(t) for t in np.geomspace(0.02, 2.0, 16))


# per-experiment defaults: (tau_grid, n_steps, window)
_DEFAULTS = {
    "dynamics": ((0.05, 0.1), 20000, 10000),
    "collapse": ((0.05, 0.1), 0, 0),
    "ipr-sweep": (None, 20000, 10000),
    "otoc-sweep": (None, 1000, 300),
    "qe-sweep": (None, 20000, 10000),
    "coeffs": ((0.1,), 0, 0),
    "noise": ((0.1,), 2000, 0),
    "lloyd-bound": (None, 0, 0),
}

# experiments whose jobs consume n_steps / window directly
_STEPPED = ("dynamics", "ipr-sweep", "otoc-sweep", "qe-sweep")


@dataclass(frozen=True, eq=True)
class ExperimentConfig:
    experiment: str
    n_sites: int = 12
    j: float = 1.0
    h: float = 2.0
    g: float = 2.0
    tau_grid: tuple[float, ...] | None = None
    n_steps: int | None = None
    window: int | None = None
    t_total: float = 20.0
    seed: int = 0
    noise: dict | None = None
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}"
            )
        tau_default, steps_default, window_default = _DEFAULTS[self.experiment]
        if self.tau_grid is None:
            grid = tau_default if tau_default is not None else default_tau_grid()
            object.__setattr__(self, "tau_grid", tuple(grid))
        else:
            object.__setattr__(
                self, "tau_grid", tuple(float(t) for t in self.tau_grid)
            )
        if self.n_steps is None:
            object.__setattr__(self, "n_steps", steps_default)
        if self.window is None:
            object.__setattr__(self, "window", window_default)

        if not isinstance(self.n_sites, int) or not 1 <= self.n_sites <= 14:
            raise ConfigError(f"n_sites must be an integer in 1..14, got {self.n_sites}")
        if self.experiment == "lloyd-bound" and self.n_sites > 8:
            raise ConfigError("lloyd-bound uses dense matrices; n_sites must be <= 8")
        for name in ("j", "h", "g", "t_total"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if len(self.tau_grid) == 0:
            raise ConfigError("tau_grid must be nonempty")
        if any(not (math.isfinite(t) and t > 0) for t in self.tau_grid):
            raise ConfigError("tau_grid entries must be positive and finite")
        if self.experiment in ("collapse", "lloyd-bound") and self.t_total <= 0:
            raise ConfigError("t_total must be positive")
        if self.experiment in _STEPPED or self.experiment == "noise":
            if not isinstance(self.n_steps, int) or self.n_steps < 1:
                raise ConfigError("n_steps must be a positive integer")
        if self.experiment in _STEPPED:
            if not isinstance(self.window, int) or not 1 <= self.window <= self.n_steps:
                raise ConfigError(
                    f"window must be in 1..n_steps, got {self.window}"
                )
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers must be a positive integer")
        if self.experiment == "noise":
            object.__setattr__(self, "noise", _validate_noise_spec(self.noise))
        elif self.noise is not None:
            raise ConfigError("noise settings only apply to the noise experiment")


def _validate_noise_spec(spec) -> dict:
    if spec is None:
        raise ConfigError("noise experiment requires a noise section")
    if not isinstance(spec, dict):
        raise ConfigError("noise section must be a mapping")
    allowed = {"kind", "eta_grid", "realizations", "distribution"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown noise keys {sorted(unknown)}")
    kind = spec.get("kind")
    if kind not in ("timing", "ensemble"):
        raise ConfigError(f"noise kind must be 'timing' or 'ensemble', got {kind!r}")
    eta_grid = tuple(float(e) for e in spec.get("eta_grid", ()))
    if not eta_grid:
        raise ConfigError("noise eta_grid must be nonempty")
    if any(not (math.isfinite(e) and e >= 0) for e in eta_grid):
        raise ConfigError("noise eta_grid entries must be >= 0 and finite")
    realizations = spec.get("realizations", 100)
    if not isinstance(realizations, int) or realizations < 1:
        raise ConfigError("noise realizations must be a positive integer")
    distribution = spec.get("distribution", "uniform")
    if distribution != "uniform":
        raise ConfigError("only the uniform noise distribution is implemented")
    return {
        "kind": kind,
        "eta_grid": eta_grid,
        "realizations": realizations,
        "distribution": distribution,
    }


_CONFIG_KEYS = {f.name for f in fields(ExperimentConfig)}


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config schema_version {version!r} not supported (expected {SCHEMA_VERSION})"
        )
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "experiment" not in data:
        raise ConfigError("config requires an 'experiment' field")
    if "tau_grid" in data and data["tau_grid"] is not None:
        data["tau_grid"] = tuple(data["tau_grid"])
    return ExperimentConfig(**data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = {"schema_version": SCHEMA_VERSION}
    for f in fields(ExperimentConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = list(value)
        elif isinstance(value, dict):
            value = {
                k: list(v) if isinstance(v, tuple) else v for k, v in value.items()
            }
        out[f.name] = value
    return out


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


@dataclass
class ResultBundle:
    config: ExperimentConfig
    jobs: list
    status: str
    out_dir: str
    manifest_path: str
    elapsed_seconds: float

    def ok_jobs(self) -> list:
        return [j for j in self.jobs if j["status"] == "ok"]


def _build_jobs(cfg: ExperimentConfig) -> list[dict]:
    if cfg.experiment == "coeffs":
        return [{"index": 0}]
    if cfg.experiment == "noise":
        eta_grid = cfg.noise["eta_grid"]
        if 0.0 not in eta_grid:
            eta_grid = (0.0,) + eta_grid  # always carry the noiseless baseline
        jobs = []
        for tau in cfg.tau_grid:
            for eta in eta_grid:
                jobs.append(
                    {
                        "index": len(jobs),
                        "tau": tau,
                        "eta": eta,
                        "n_steps": cfg.n_steps,
                        "kind": cfg.noise["kind"],
                        "realizations": cfg.noise["realizations"],
                        "seed": cfg.seed + len(jobs),
                    }
                )
        return jobs
    jobs = []
    for i, tau in enumerate(cfg.tau_grid):
        params = {"index": i, "tau": tau}
        if cfg.experiment == "collapse":
            params["n_steps"] = max(1, round(cfg.t_total / tau))
        elif cfg.experiment == "lloyd-bound":
            params["n_steps"] = max(1, round(cfg.t_total / tau))
            params["t_total"] = cfg.t_total
        else:
            params["n_steps"] = cfg.n_steps
            params["window"] = cfg.window
        jobs.append(params)
    return jobs


def _execute_job(cfg: ExperimentConfig, params: dict):
    """Run one grid point; returns (results dict, list of TrajectoryRecord)."""
    model = IsingModel(cfg.n_sites, j=cfg.j, h=cfg.h, g=cfg.g)
    exp = cfg.experiment

    if exp == "coeffs":
        report = dict(coefficient_report(model))
        report.update({"j": cfg.j, "h": cfg.h, "g": cfg.g})
        return report, []

    if exp == "dynamics":
        recs = run_dynamics(model, params["tau"], params["n_steps"])
        results = {}
        for label, rec in recs.items():
            avg = stroboscopic_average(rec, params["window"])
            results[label] = {"mean": avg.mean, "fluctuation": avg.fluctuation}
        return results, list(recs.values())

    if exp == "qe-sweep":
        recs = run_dynamics(model, params["tau"], params["n_steps"])
        qe = stroboscopic_average(recs["q_energy"], params["window"])
        mag = stroboscopic_average(recs["magnetization"], params["window"])
        ipr = ipr_from_loschmidt(
            recs["loschmidt"].values, model.n_sites, params["window"]
        )
        results = {
            "qe_avg": qe.mean,
            "qe_fluct": qe.fluctuation,
            "m_avg": mag.mean,
            "m_fluct": mag.fluctuation,
            "ipr": ipr.ipr,
            "lambda_ipr": ipr.lambda_ipr,
            "lambda_d": ipr.lambda_d,
            "lambda_ratio": ipr.ratio,
        }
        return results, [recs["q_energy"]]

    if exp == "collapse":
        recs = trotter_error_trajectory(model, params["tau"], params["n_steps"])
        norm = np.abs(recs["delta_m_normalized"].values)
        third = max(1, norm.size // 3)
        results = {
            "max_delta_normalized": float(norm.max()),
            "mid_window_mean": float(norm[third : 2 * third].mean()),
            "trailing_mean": float(norm[-third:].mean()),
        }
        # the two magnetization curves share a label; rename so the per-job
        # trajectory files stay distinct
        records = []
        for key in ("delta_m", "delta_m_normalized", "m_trotter", "m_exact"):
            rec = recs[key]
            if rec.label != key:
                rec = replace(rec, label=key)
            records.append(rec)
        return results, records

    if exp == "ipr-sweep":
        dyn = ipr_dynamical(model, params["tau"], params["n_steps"], params["window"])
        results = {
            "ipr": dyn.ipr,
            "lambda_ipr": dyn.lambda_ipr,
            "lambda_d": dyn.lambda_d,
            "lambda_ratio": dyn.ratio,
        }
        if model.dim <= 1024:  # dense Floquet diagonalization stays cheap
            ipr_f, fsys = ipr_floquet(model, params["tau"])
            results.update(
                {
                    "ipr_floquet": ipr_f,
                    "lambda_ratio_floquet": float(
                        (np.log(ipr_f) / model.n_sites) / dyn.lambda_d
                    ),
                    "min_quasienergy_gap": fsys.min_gap,
                    "degenerate": bool(fsys.degenerate),
                }
            )
        return results, []

    if exp == "otoc-sweep":
        rec, avg = otoc_run(model, params["tau"], params["n_steps"], params["window"])
        results = {
            "re_f_over_f0": avg.mean,
            "fluctuation": avg.fluctuation,
            "f_initial": float(rec.values[0].real),
        }
        return results, [rec]

    if exp == "noise":
        ncfg = NoiseConfig(
            kind=params["kind"],
            eta=params["eta"],
            realizations=params["realizations"],
            seed=params["seed"],
        )
        runner = timing_noise_run if params["kind"] == "timing" else ensemble_noise_run
        res = runner(model, params["tau"], params["n_steps"], ncfg)
        results = {
            "eta": params["eta"],
            "realizations": res.realizations,
            "final_mean": float(res.mean.values[-1]),
            "final_stderr": float(res.stderr.values[-1]),
        }
        return results, [res.mean, res.stderr]

    if exp == "lloyd-bound":
        t, n = params["t_total"], params["n_steps"]
        results = {
            "n_periods": n,
            "bound": lloyd_commutator_bound(model, t, n),
            "defect": trotter_global_defect(model, t, n),
        }
        return results, []

    raise ConfigError(f"unknown experiment {exp!r}")  # pragma: no cover


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> ResultBundle:
    out = out_dir or cfg.out
    if out is None:
        raise ConfigError("output directory required (config 'out' or out_dir argument)")
    os.makedirs(out, exist_ok=True)
    manifest_path = os.path.join(out, "manifest.json")

    jobs = _build_jobs(cfg)
    started = time.perf_counter()
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "experiment": cfg.experiment,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config_to_dict(cfg),
        "status": "running",
        "jobs": [
            {"index": j["index"], "params": j, "status": "pending"} for j in jobs
        ],
    }
    write_manifest(manifest_path, manifest)

    def finish(row, job, outcome):
        results, records, error, elapsed = outcome
        row["elapsed_seconds"] = elapsed
        if error is not None:
            row["status"] = "failed"
            row["error"] = error
            return
        row["status"] = "ok"
        row["results"] = results
        row["trajectories"] = []
        for rec in records:
            fname = f"traj_{rec.label}_{job['index']}.csv"
            write_trajectory_csv(os.path.join(out, fname), rec)
            row["trajectories"].append(
                {"label": rec.label, "file": fname, "tau": rec.tau, "meta": rec.meta}
            )

    rows = {row["index"]: row for row in manifest["jobs"]}
    if cfg.workers == 1:
        for job in jobs:
            finish(rows[job["index"]], job, _timed_job(cfg, job))
            write_manifest(manifest_path, manifest)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {pool.submit(_timed_job, cfg, job): job for job in jobs}
            for future in as_completed(futures):
                job = futures[future]
                finish(rows[job["index"]], job, future.result())
                write_manifest(manifest_path, manifest)

    failed = [r for r in manifest["jobs"] if r["status"] != "ok"]
    manifest["status"] = (
        "complete" if not failed
        else ("failed" if len(failed) == len(jobs) else "partial")
    )
    manifest["elapsed_seconds"] = time.perf_counter() - started
    write_manifest(manifest_path, manifest)
    return ResultBundle(
        config=cfg,
        jobs=manifest["jobs"],
        status=manifest["status"],
        out_dir=out,
        manifest_path=manifest_path,
        elapsed_seconds=manifest["elapsed_seconds"],
    )


def _timed_job(cfg: ExperimentConfig, params: dict):
    """Wrapper run in workers: never raises, reports (results, records, error, dt)."""
    t0 = time.perf_counter()
    try:
        results, records = _execute_job(cfg, params)
        return results, records, None, time.perf_counter() - t0
    except Exception as exc:  # captured per job, run continues
        return None, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t0


@dataclass(frozen=True)
class ThresholdEstimate:
    tau: float
    uncertainty: float
    low_plateau: float
    high_plateau: float
    observable: str

    def __float__(self):
        return self.tau


_SWEEP_OBSERVABLES = {"qe-sweep": "qe_avg", "ipr-sweep": "lambda_ratio"}


def locate_threshold(bundle, observable: str | None = None) -> ThresholdEstimate:
    """First upward crossing of the midpoint between the two plateau fits.

    Plateaus are the means of the three smallest-tau and three largest-tau
    points; the crossing is interpolated linearly in log tau and reported
    with the local grid spacing as its uncertainty.
    """
    if isinstance(bundle, ResultBundle):
        experiment, jobs = bundle.config.experiment, bundle.jobs
    else:  # manifest dict
        experiment, jobs = bundle["experiment"], bundle["jobs"]
    if observable is None:
        observable = _SWEEP_OBSERVABLES.get(experiment)
        if observable is None:
            raise ValueError(f"no default observable for {experiment!r} bundles")

    points = sorted(
        (row["params"]["tau"], row["results"][observable])
        for row in jobs
        if row["status"] == "ok"
    )
    if len(points) < 8:
        raise ValueError(f"need >= 8 completed grid points, have {len(points)}")
    taus = np.array([p[0] for p in points])
    vals = np.array([p[1] for p in points])

    low = float(vals[:3].mean())
    high = float(vals[-3:].mean())
    mid = 0.5 * (low + high)
    diagnostics = (
        f"plateaus low={low:.4g} high={high:.4g}, midpoint {mid:.4g}, "
        f"values span [{vals.min():.4g}, {vals.max():.4g}]"
    )
    if high <= low:
        raise ThresholdNotFoundError(f"no rising crossover: {diagnostics}")
    for i in range(len(vals) - 1):
        if vals[i] < mid <= vals[i + 1]:
            frac = (mid - vals[i]) / (vals[i + 1] - vals[i])
            log_tau = np.log(taus[i]) + frac * (np.log(taus[i + 1]) - np.log(taus[i]))
            return ThresholdEstimate(
                tau=float(np.exp(log_tau)),
                uncertainty=float(taus[i + 1] - taus[i]),
                low_plateau=low,
                high_plateau=high,
                observable=observable,
            )
    raise ThresholdNotFoundError(f"no midpoint crossing found: {diagnostics}")
