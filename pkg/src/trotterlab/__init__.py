"""Trotterization-error diagnostics for the driven quantum Ising chain."""

__version__ = "0.1.0"

from .spin_core import (
    IsingModel,
    all_up_state,
    apply_hx,
    dense_hamiltonian,
    dense_hx,
    hz_diagonal,
    magnetization_diagonal,
    spin_values,
)
from .evolvers import (
    TrotterStepper,
    dense_period_unitary,
    floquet_eigensystem,
    krylov_evolve,
    trotter_period,
)
from .observables import (
    TrajectoryRecord,
    exact_reference,
    ipr_dynamical,
    ipr_floquet,
    otoc_run,
    run_dynamics,
    stroboscopic_average,
    trotter_error_trajectory,
)
from .perturbation import (
    build_magnus,
    coefficient_report,
    compute_m,
    compute_qE,
    magnus_hf,
)
from .noise import (
    NoiseConfig,
    ensemble_noise_run,
    lindblad_oracle,
    timing_noise_run,
)
from .harness import (
    ExperimentConfig,
    ResultBundle,
    ThresholdEstimate,
    default_tau_grid,
    load_config,
    locate_threshold,
    run_experiment,
)

__all__ = [
    "__version__",
    "IsingModel",
    "all_up_state",
    "apply_hx",
    "dense_hamiltonian",
    "dense_hx",
    "hz_diagonal",
    "magnetization_diagonal",
    "spin_values",
    "TrotterStepper",
    "dense_period_unitary",
    "floquet_eigensystem",
    "krylov_evolve",
    "trotter_period",
    "TrajectoryRecord",
    "exact_reference",
    "ipr_dynamical",
    "ipr_floquet",
    "otoc_run",
    "run_dynamics",
    "stroboscopic_average",
    "trotter_error_trajectory",
    "build_magnus",
    "coefficient_report",
    "compute_m",
    "compute_qE",
    "magnus_hf",
    "NoiseConfig",
    "ensemble_noise_run",
    "lindblad_oracle",
    "timing_noise_run",
    "ExperimentConfig",
    "ResultBundle",
    "ThresholdEstimate",
    "default_tau_grid",
    "load_config",
    "locate_threshold",
    "run_experiment",
]
