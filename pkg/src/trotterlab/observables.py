"""Stroboscopic trajectories and heating diagnostics.

Every run starts from the all-up product state and records observables at
integer multiples of the period tau, including t = 0.  Recorded series:

  magnetization  M(n tau) = <psi| n^-1 sum_l S^z_l |psi>
  energy         E(n tau) = <psi| H |psi>
  q_energy       Q_E = (E - E_0)/(0 - E_0), the heating fraction towards
                 the infinite-temperature value E = 0; E_0 = <psi_0|H|psi_0>
  loschmidt      P_n = |<psi_0|psi(n tau)>|^2

The inverse participation ratio is the long-time stroboscopic average of
P_n; lambda_IPR = log(IPR)/n is compared against the delocalized reference
lambda_D built from IPR -> 2/2^n for a fully scrambled state.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .evolvers import FloquetEigensystem, TrotterStepper, floquet_eigensystem, krylov_evolve
from .spin_core import IsingModel, all_up_state, apply_hx, hz_diagonal, magnetization_diagonal

logger = logging.getLogger(__name__)

F0_REFERENCE = 0.125  # OTOC normalization <M^2>^2 scale used for reporting


@dataclass
class TrajectoryRecord:
    """One observable series on a uniform stroboscopic time grid."""

    times: np.ndarray
    values: np.ndarray
    label: str
    tau: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.shape != np.asarray(self.values).shape:
            raise ValueError("times and values must have matching shapes")
        if self.times.size >= 2:
            dt = np.diff(self.times)
            if np.any(dt <= 0) or not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-12):
                raise ValueError("times must be strictly increasing and uniformly spaced")


@dataclass
class LongTimeAverage:
    """Trailing-window stroboscopic mean and its standard deviation."""

    mean: float
    fluctuation: float
    window: int
    label: str = ""


@dataclass
class IprResult:
    """Inverse participation ratio and its delocalization diagnostics."""

    ipr: float
    lambda_ipr: float
    lambda_d: float
    ratio: float
    window: int


def model_meta(model: IsingModel, **extra) -> dict:
    meta = {"n_sites": model.n_sites, "j": model.j, "h": model.h, "g": model.g}
    meta.update(extra)
    return meta


def stroboscopic_average(record: TrajectoryRecord, window: int) -> LongTimeAverage:
    """Mean and std of the real part over the trailing `window` samples."""
    if not 0 < window <= record.values.size:
        raise ValueError(f"window {window} outside 1..{record.values.size}")
    tail = np.real(record.values[-window:])
    return LongTimeAverage(float(tail.mean()), float(tail.std()), window, record.label)


def run_dynamics(
    model: IsingModel,
    tau: float,
    n_steps: int,
    renorm_every: int = 1000,
    renorm_tol: float = 1e-10,
) -> dict[str, TrajectoryRecord]:
    """Trotterized evolution over `n_steps` periods, recording every period.

    The norm is checked every `renorm_every` periods and renormalized if it
    drifted beyond `renorm_tol`; corrections are counted in the metadata.
    """
    stepper = TrotterStepper(model, tau)
    hz = stepper.hz
    mdiag = magnetization_diagonal(model.n_sites)
    e0 = hz[0]
    psi = all_up_state(model.n_sites)
    buf = np.empty_like(psi)

    mag = np.empty(n_steps + 1)
    energy = np.empty(n_steps + 1)
    loschmidt = np.empty(n_steps + 1)
    renorms = 0
    for n in range(n_steps + 1):
        if n:
            stepper.period(psi)
            if n % renorm_every == 0:
                norm = np.linalg.norm(psi)
                if abs(norm - 1.0) > renorm_tol:
                    psi /= norm
                    renorms += 1
                    logger.info("renormalized at period %d (drift %.3e)", n, norm - 1.0)
        prob = np.real(psi) ** 2 + np.imag(psi) ** 2
        mag[n] = mdiag @ prob
        energy[n] = hz @ prob + np.real(np.vdot(psi, apply_hx(psi, model, out=buf)))
        loschmidt[n] = prob[0]

    times = tau * np.arange(n_steps + 1)
    meta = model_meta(model, tau=tau, renorm_corrections=renorms, evolution="trotter")
    qe = (energy - e0) / (0.0 - e0)
    return {
        "magnetization": TrajectoryRecord(times, mag, "magnetization", tau, meta),
        "energy": TrajectoryRecord(times, energy, "energy", tau, meta),
        "q_energy": TrajectoryRecord(times, qe, "q_energy", tau, meta),
        "loschmidt": TrajectoryRecord(times, loschmidt, "loschmidt", tau, meta),
    }


def exact_reference(
    model: IsingModel,
    times: np.ndarray,
    *,
    max_dim: int = 40,
    tol: float = 1e-10,
) -> dict[str, TrajectoryRecord]:
    """Same observables under continuous exp(-i H t) evolution on `times`.

    `times` must be a uniform grid starting at 0; each step is advanced with
    the Krylov propagator.
    """
    times = np.asarray(times, dtype=np.float64)
    if times[0] != 0.0:
        raise ValueError("exact reference grid must start at t=0")
    dt = times[1] - times[0] if times.size > 1 else 0.0
    hz = hz_diagonal(model)
    mdiag = magnetization_diagonal(model.n_sites)
    e0 = hz[0]
    psi = all_up_state(model.n_sites)
    buf = np.empty_like(psi)

    mag = np.empty(times.size)
    energy = np.empty(times.size)
    for n in range(times.size):
        if n:
            psi = krylov_evolve(psi, model, dt, max_dim=max_dim, tol=tol)
        prob = np.real(psi) ** 2 + np.imag(psi) ** 2
        mag[n] = mdiag @ prob
        energy[n] = hz @ prob + np.real(np.vdot(psi, apply_hx(psi, model, out=buf)))

    meta = model_meta(model, tau=dt, evolution="exact")
    qe = (energy - e0) / (0.0 - e0)
    return {
        "magnetization": TrajectoryRecord(times, mag, "magnetization", dt, meta),
        "energy": TrajectoryRecord(times, energy, "energy", dt, meta),
        "q_energy": TrajectoryRecord(times, qe, "q_energy", dt, meta),
    }


def trotter_error_trajectory(
    model: IsingModel,
    tau: float,
    n_steps: int,
    *,
    max_dim: int = 40,
    tol: float = 1e-10,
) -> dict[str, TrajectoryRecord]:
    """|M_exact(t) - M_trotter(t)| on the stroboscopic grid, raw and /(h tau)^2."""
    trot = run_dynamics(model, tau, n_steps)
    times = trot["magnetization"].times
    exact = exact_reference(model, times, max_dim=max_dim, tol=tol)
    delta = np.abs(exact["magnetization"].values - trot["magnetization"].values)
    scale = (model.h * tau) ** 2
    meta = model_meta(model, tau=tau, normalization=scale)
    return {
        "delta_m": TrajectoryRecord(times, delta, "delta_m", tau, meta),
        "delta_m_normalized": TrajectoryRecord(times, delta / scale, "delta_m_normalized", tau, meta),
        "m_trotter": trot["magnetization"],
        "m_exact": exact["magnetization"],
    }


def ipr_from_loschmidt(p_values: np.ndarray, n_sites: int, window: int) -> IprResult:
    """IPR diagnostics from a Loschmidt-probability series.

    lambda_D uses the delocalized-limit value IPR -> 2/2^n (Gaussian
    amplitude statistics), so ratio = lambda_IPR/lambda_D approaches 1 for
    fully scrambled dynamics and stays << 1 when the state remains close to
    its origin.
    """
    if not 0 < window <= p_values.size:
        raise ValueError(f"window {window} outside 1..{p_values.size}")
    ipr = float(np.mean(p_values[-window:]))
    lam_ipr = np.log(ipr) / n_sites
    lam_d = (np.log(2.0) - n_sites * np.log(2.0)) / n_sites
    return IprResult(ipr, float(lam_ipr), float(lam_d), float(lam_ipr / lam_d), window)


def ipr_dynamical(model: IsingModel, tau: float, n_steps: int, window: int) -> IprResult:
    """IPR from a fresh Trotter run of `n_steps` periods."""
    rec = run_dynamics(model, tau, n_steps)["loschmidt"]
    return ipr_from_loschmidt(rec.values, model.n_sites, window)


def ipr_floquet(model: IsingModel, tau: float) -> tuple[float, FloquetEigensystem]:
    """Eigenbasis IPR sum_nu |<nu|psi_0>|^4 from the exact Floquet system."""
    f = floquet_eigensystem(model, tau)
    p = f.initial_populations()
    return float(np.sum(p**2)), f


def otoc_run(
    model: IsingModel,
    tau: float,
    n_steps: int,
    window: int | None = None,
) -> tuple[TrajectoryRecord, LongTimeAverage | None]:
    """Out-of-time-order correlator F(n tau) = <V(t) W V(t) W> with V = W = M.

    Uses the two-state scheme: advance a = U^n psi_0 and b = U^n W psi_0
    incrementally, then for each n apply V, rewind n periods with the
    inverse gates (batched pair), and overlap W x against y.  Cost is
    Theta(n^2) period applications.  The long-time summary is the trailing
    mean of Re F divided by F_0 = 1/8.
    """
    stepper = TrotterStepper(model, tau)
    mdiag = magnetization_diagonal(model.n_sites)
    psi0 = all_up_state(model.n_sites)
    # rows: U^n psi_0 and U^n W psi_0, advanced together
    fw = np.stack([psi0, mdiag * psi0])

    f_vals = np.empty(n_steps + 1, dtype=np.complex128)
    for n in range(n_steps + 1):
        pair = fw * mdiag
        for _ in range(n):
            stepper.period_back(pair)
        f_vals[n] = np.vdot(mdiag * pair[0], pair[1])
        if n < n_steps:
            stepper.period(fw)

    times = tau * np.arange(n_steps + 1)
    meta = model_meta(model, tau=tau, f0=F0_REFERENCE)
    record = TrajectoryRecord(times, f_vals, "otoc", tau, meta)
    average = None
    if window is not None:
        if not 0 < window <= f_vals.size:
            raise ValueError(f"window {window} outside 1..{f_vals.size}")
        tail = np.real(f_vals[-window:]) / F0_REFERENCE
        average = LongTimeAverage(float(tail.mean()), float(tail.std()), window, "otoc_re_over_f0")
    return record, average


def otoc_dense_reference(model: IsingModel, tau: float, n_steps: int) -> np.ndarray:
    """F(n tau) from dense Heisenberg evolution; small-n oracle for `otoc_run`."""
    from .evolvers import dense_period_unitary

    u = dense_period_unitary(model, tau)
    mdiag = magnetization_diagonal(model.n_sites)
    psi0 = all_up_state(model.n_sites)
    un = np.eye(model.dim, dtype=np.complex128)
    out = np.empty(n_steps + 1, dtype=np.complex128)
    for n in range(n_steps + 1):
        if n:
            un = u @ un
        vt = un.conj().T @ (mdiag[:, None] * un)
        out[n] = np.vdot(psi0, vt @ (mdiag * (vt @ (mdiag * psi0))))
    return out
