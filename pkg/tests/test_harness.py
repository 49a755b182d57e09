"""Tests for experiment configs, the runner, threshold location, and the CLI."""

import json
import os

import numpy as np
import pytest

import trotterlab.harness as harness
from trotterlab.cli import main as cli_main
from trotterlab.harness import (
    ConfigError,
    ExperimentConfig,
    ThresholdNotFoundError,
    config_from_dict,
    config_to_dict,
    default_tau_grid,
    load_config,
    locate_threshold,
    run_experiment,
)
from trotterlab.io import read_manifest, read_trajectory_csv


def test_default_grid_spans_the_crossover():
    grid = default_tau_grid()
    assert len(grid) == 16
    assert grid[0] == pytest.approx(0.02)
    assert grid[-1] == pytest.approx(2.0)
    ratios = np.diff(np.log(grid))
    np.testing.assert_allclose(ratios, ratios[0])


def test_experiment_defaults():
    qe = ExperimentConfig("qe-sweep")
    assert qe.tau_grid == default_tau_grid()
    assert (qe.n_steps, qe.window) == (20000, 10000)
    otoc = ExperimentConfig("otoc-sweep")
    assert (otoc.n_steps, otoc.window) == (1000, 300)
    dyn = ExperimentConfig("dynamics")
    assert dyn.tau_grid == (0.05, 0.1)


@pytest.mark.parametrize(
    "data",
    [
        {"experiment": "warmup"},
        {"experiment": "qe-sweep", "tau_grid": []},
        {"experiment": "qe-sweep", "tau_grid": [0.1, -0.2]},
        {"experiment": "qe-sweep", "n_steps": 100, "window": 200},
        {"experiment": "qe-sweep", "seed": -1},
        {"experiment": "qe-sweep", "workers": 0},
        {"experiment": "noise"},
        {"experiment": "noise", "noise": {"kind": "thermal", "eta_grid": [0.1]}},
        {"experiment": "noise", "noise": {"kind": "timing", "eta_grid": []}},
        {"experiment": "qe-sweep", "noise": {"kind": "timing", "eta_grid": [0.1]}},
        {"experiment": "lloyd-bound", "n_sites": 10},
        {"experiment": "qe-sweep", "n_sites": 20},
        {"experiment": "qe-sweep", "typo_key": 1},
        {"experiment": "qe-sweep", "schema_version": 99},
        {},
    ],
)
def test_invalid_configs_rejected(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


@pytest.mark.parametrize(
    "data",
    [
        {"experiment": "qe-sweep", "n_sites": 6},
        {"experiment": "dynamics", "tau_grid": [0.25], "n_steps": 100, "window": 50},
        {
            "experiment": "noise",
            "n_sites": 4,
            "noise": {"kind": "timing", "eta_grid": [0.02, 0.04], "realizations": 10},
        },
        {"experiment": "collapse", "t_total": 5.0},
        {"experiment": "coeffs", "n_sites": 8},
    ],
)
def test_config_round_trip(data):
    cfg = config_from_dict(data)
    assert config_from_dict(config_to_dict(cfg)) == cfg


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text(json.dumps({"experiment": "dynamics", "n_sites": 3}))
    assert load_config(str(path)).experiment == "dynamics"


def _tiny_dynamics(**overrides):
    base = dict(
        experiment="dynamics", n_sites=3, tau_grid=(0.1, 0.2), n_steps=40, window=20
    )
    base.update(overrides)
    return config_from_dict(base)


def test_run_writes_manifest_and_trajectories(tmp_path):
    out = str(tmp_path / "run")
    bundle = run_experiment(_tiny_dynamics(), out_dir=out)
    assert bundle.status == "complete"
    manifest = read_manifest(os.path.join(out, "manifest.json"))
    assert manifest["schema_version"] == harness.SCHEMA_VERSION
    assert manifest["status"] == "complete"
    assert config_from_dict(manifest["config"]) == bundle.config
    for row in manifest["jobs"]:
        assert row["status"] == "ok"
        assert "tau" in row["params"]
        for traj in row["trajectories"]:
            times, values = read_trajectory_csv(os.path.join(out, traj["file"]))
            assert times.size == 41
    labels = {t["label"] for t in manifest["jobs"][0]["trajectories"]}
    assert labels == {"magnetization", "energy", "q_energy", "loschmidt"}


def test_collapse_run_keeps_both_magnetization_curves(tmp_path):
    out = str(tmp_path / "run")
    cfg = ExperimentConfig(experiment="collapse", n_sites=4, tau_grid=(0.1,), t_total=2.0)
    bundle = run_experiment(cfg, out_dir=out)
    assert bundle.status == "complete"
    trajs = {t["label"]: t["file"] for t in bundle.jobs[0]["trajectories"]}
    assert set(trajs) == {"delta_m", "delta_m_normalized", "m_trotter", "m_exact"}
    assert len(set(trajs.values())) == 4
    _, trot = read_trajectory_csv(os.path.join(out, trajs["m_trotter"]))
    _, exact = read_trajectory_csv(os.path.join(out, trajs["m_exact"]))
    _, delta = read_trajectory_csv(os.path.join(out, trajs["delta_m"]))
    assert not np.allclose(trot, exact)
    np.testing.assert_allclose(np.abs(exact - trot), delta, atol=1e-15)


def test_reruns_are_byte_identical(tmp_path):
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    run_experiment(_tiny_dynamics(), out_dir=out_a)
    run_experiment(_tiny_dynamics(), out_dir=out_b)
    for name in sorted(os.listdir(out_a)):
        if name.endswith(".csv"):
            assert (
                open(os.path.join(out_a, name), "rb").read()
                == open(os.path.join(out_b, name), "rb").read()
            ), name


def test_worker_pool_matches_serial(tmp_path):
    out_a, out_b = str(tmp_path / "serial"), str(tmp_path / "pool")
    run_experiment(_tiny_dynamics(workers=1), out_dir=out_a)
    run_experiment(_tiny_dynamics(workers=2), out_dir=out_b)
    for name in sorted(os.listdir(out_a)):
        if name.endswith(".csv"):
            assert (
                open(os.path.join(out_a, name), "rb").read()
                == open(os.path.join(out_b, name), "rb").read()
            ), name


def test_failed_job_recorded_not_fatal(tmp_path, monkeypatch):
    real = harness.run_dynamics

    def flaky(model, tau, n_steps, *args, **kwargs):
        if tau > 0.15:
            raise RuntimeError("synthetic job failure")
        return real(model, tau, n_steps, *args, **kwargs)

    monkeypatch.setattr(harness, "run_dynamics", flaky)
    out = str(tmp_path / "run")
    bundle = run_experiment(_tiny_dynamics(), out_dir=out)
    assert bundle.status == "partial"
    manifest = read_manifest(os.path.join(out, "manifest.json"))
    by_status = {row["status"] for row in manifest["jobs"]}
    assert by_status == {"ok", "failed"}
    failed = [r for r in manifest["jobs"] if r["status"] == "failed"][0]
    assert "synthetic job failure" in failed["error"]
    ok = [r for r in manifest["jobs"] if r["status"] == "ok"][0]
    assert os.path.exists(os.path.join(out, ok["trajectories"][0]["file"]))


def test_noise_jobs_include_baseline(tmp_path):
    cfg = config_from_dict(
        {
            "experiment": "noise",
            "n_sites": 3,
            "n_steps": 20,
            "tau_grid": [0.1],
            "noise": {"kind": "timing", "eta_grid": [0.1], "realizations": 3},
        }
    )
    bundle = run_experiment(cfg, out_dir=str(tmp_path / "nz"))
    etas = sorted(row["params"]["eta"] for row in bundle.jobs)
    assert etas == [0.0, 0.1]
    assert bundle.status == "complete"


def _synthetic_sweep(taus, values):
    jobs = [
        {
            "index": i,
            "status": "ok",
            "params": {"tau": float(t)},
            "results": {"qe_avg": float(v)},
        }
        for i, (t, v) in enumerate(zip(taus, values))
    ]
    return {"experiment": "qe-sweep", "jobs": jobs}


def test_locate_threshold_on_synthetic_step():
    taus = np.geomspace(0.1, 1.96, 12)
    values = np.where(taus < 0.7, 0.02, 0.98)
    est = locate_threshold(_synthetic_sweep(taus, values))
    assert abs(est.tau - 0.7) <= est.uncertainty
    idx = np.searchsorted(taus, est.tau)
    assert est.uncertainty == pytest.approx(taus[idx] - taus[idx - 1])
    assert float(est) == est.tau


def test_locate_threshold_without_crossing():
    taus = np.geomspace(0.1, 1.0, 10)
    with pytest.raises(ThresholdNotFoundError, match="plateaus"):
        locate_threshold(_synthetic_sweep(taus, np.full(10, 0.5)))
    with pytest.raises(ThresholdNotFoundError):
        locate_threshold(_synthetic_sweep(taus, np.linspace(1.0, 0.0, 10)))


def test_locate_threshold_needs_enough_points():
    taus = np.geomspace(0.1, 1.0, 5)
    with pytest.raises(ValueError):
        locate_threshold(_synthetic_sweep(taus, np.linspace(0, 1, 5)))


def _write_config(tmp_path, data):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_cli_runs_and_reports(tmp_path, capsys):
    cfg_path = _write_config(
        tmp_path,
        {"experiment": "dynamics", "n_sites": 3, "tau_grid": [0.1], "n_steps": 30, "window": 10},
    )
    out = str(tmp_path / "run")
    code = cli_main(["dynamics", "--config", cfg_path, "--out", out])
    assert code == 0
    assert os.path.exists(os.path.join(out, "manifest.json"))
    stdout = capsys.readouterr().out
    assert "job 0" in stdout and "complete" in stdout


def test_cli_validation_failure_writes_nothing(tmp_path, capsys):
    cfg_path = _write_config(
        tmp_path, {"experiment": "qe-sweep", "tau_grid": []}
    )
    out = str(tmp_path / "none")
    code = cli_main(["qe-sweep", "--config", cfg_path, "--out", out])
    assert code == 2
    assert not os.path.exists(out)
    assert "error:" in capsys.readouterr().err


def test_cli_rejects_experiment_mismatch(tmp_path, capsys):
    cfg_path = _write_config(tmp_path, {"experiment": "dynamics", "n_sites": 3})
    code = cli_main(["coeffs", "--config", cfg_path, "--out", str(tmp_path / "x")])
    assert code == 2


def test_cli_partial_failure_exit_code(tmp_path, monkeypatch, capsys):
    real = harness.run_dynamics

    def flaky(model, tau, n_steps, *args, **kwargs):
        if tau > 0.15:
            raise RuntimeError("boom")
        return real(model, tau, n_steps, *args, **kwargs)

    monkeypatch.setattr(harness, "run_dynamics", flaky)
    cfg_path = _write_config(
        tmp_path,
        {
            "experiment": "dynamics",
            "n_sites": 3,
            "tau_grid": [0.1, 0.2],
            "n_steps": 30,
            "window": 10,
        },
    )
    code = cli_main(["dynamics", "--config", cfg_path, "--out", str(tmp_path / "run")])
    assert code == 3
    assert "failed (RuntimeError: boom)" in capsys.readouterr().out
