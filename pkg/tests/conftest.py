"""Session-scoped fixtures for the expensive shared sweeps.

The full tau-grid sweeps at N = 12 and N = 10 take a few minutes each and
feed several acceptance tests, so they run once per session through the
harness (which also exercises the manifest plumbing end to end).
"""

import pytest

from trotterlab import IsingModel
from trotterlab.harness import ExperimentConfig, run_experiment
from trotterlab.perturbation import coefficient_report


def _qe_sweep(n_sites, tmp_path_factory):
    cfg = ExperimentConfig(experiment="qe-sweep", n_sites=n_sites)
    out = tmp_path_factory.mktemp(f"qe_sweep_n{n_sites}")
    return run_experiment(cfg, out_dir=out)


@pytest.fixture(scope="session")
def qe_sweep_n12(tmp_path_factory):
    return _qe_sweep(12, tmp_path_factory)


@pytest.fixture(scope="session")
def qe_sweep_n10(tmp_path_factory):
    return _qe_sweep(10, tmp_path_factory)


@pytest.fixture(scope="session")
def coefficients_n12():
    return coefficient_report(IsingModel(12))
