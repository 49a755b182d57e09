"""Gate-strength noise models and their master-equation limit.

Two extrinsic error channels on top of the Trotterized drive:

  timing    each period p and each gate l in {Z, X} picks an independent
            jitter xi_l^p, applying exp(-i tau (1 + xi) H_l); heats the
            system at a rate proportional to eta^2 tau, so Q_E curves for
            different eta collapse against eta^2 t.
  ensemble  each realization picks static offsets Delta_Z, Delta_X once and
            keeps them for the whole run; this samples a family of
            Hamiltonians and does not heat.

Jitters are uniform on [-eta/2, eta/2] (variance eta^2/12).  Randomness is
counter-based: realization r uses its own Philox stream keyed by (seed, r)
and draws its full jitter table up front, so trajectory r never depends on
how many realizations run.

`lindblad_oracle` integrates the corresponding white-noise master equation
for small chains: drho/dt = -i[H + tau C1, rho] + gamma sum_l (2 H_l rho
H_l - H_l^2 rho - rho H_l^2) with gamma = (eta^2/12) tau/2, matching the
timing model's variance convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolvers import rotate_x
from .observables import TrajectoryRecord, model_meta
from .spin_core import IsingModel, all_up_state, apply_hx, dense_hx, hz_diagonal, magnetization_diagonal


@dataclass(frozen=True)
class NoiseConfig:
    """Noise channel parameters; `eta` is the uniform-jitter full width."""

    kind: str
    eta: float
    realizations: int
    seed: int = 0
    distribution: str = "uniform"

    def __post_init__(self) -> None:
        if self.kind not in ("timing", "ensemble"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.distribution != "uniform":
            raise ValueError("only the uniform distribution is implemented")


@dataclass
class EnsembleTrajectory:
    """Realization-averaged observable with its standard error.

    `rescaled_times` is times * eta^2, the natural axis for timing-noise
    collapse plots.  `samples` optionally keeps the per-realization curves.
    """

    mean: TrajectoryRecord
    stderr: TrajectoryRecord
    realizations: int
    eta: float
    rescaled_times: np.ndarray
    samples: np.ndarray | None = None


def _stream(seed: int, realization: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, realization]))


def _observable_row(state, model, hz, mdiag, e0, observable, out_row, hx_buf):
    prob = np.real(state) ** 2 + np.imag(state) ** 2
    if observable == "q_energy":
        cross = np.einsum("rd,rd->r", np.conj(state), apply_hx(state, model, out=hx_buf))
        if np.max(np.abs(cross.imag)) > 1e-10:
            raise RuntimeError("energy acquired an imaginary part beyond tolerance")
        energy = prob @ hz + cross.real
        out_row[:] = (energy - e0) / (0.0 - e0)
    elif observable == "magnetization":
        out_row[:] = prob @ mdiag
    else:
        raise ValueError(f"unknown observable {observable!r}")


def _bundle(samples, times, tau, eta, meta, keep_samples):
    n_real = samples.shape[0]
    mean = samples.mean(axis=0)
    if n_real > 1:
        stderr = samples.std(axis=0, ddof=1) / np.sqrt(n_real)
    else:
        stderr = np.zeros_like(mean)
    label = meta["observable"]
    return EnsembleTrajectory(
        mean=TrajectoryRecord(times, mean, label, tau, dict(meta)),
        stderr=TrajectoryRecord(times, stderr, label + "_stderr", tau, dict(meta)),
        realizations=n_real,
        eta=eta,
        rescaled_times=times * eta**2,
        samples=samples if keep_samples else None,
    )


def timing_noise_run(
    model: IsingModel,
    tau: float,
    n_steps: int,
    cfg: NoiseConfig,
    observable: str = "q_energy",
    keep_samples: bool = False,
) -> EnsembleTrajectory:
    """Per-period, per-gate jitter: exp(-i tau (1+xi_Z) H_Z) exp(-i tau (1+xi_X) H_X).

    All realizations advance together as one (R, dim) batch; jitter tables
    are drawn per realization up front (column 0: Z gate, column 1: X gate,
    period-major), so results are independent of batching and of R.
    """
    if cfg.kind != "timing":
        raise ValueError("config kind must be 'timing'")
    n_real = cfg.realizations
    jitter = np.empty((n_real, n_steps, 2))
    for r in range(n_real):
        jitter[r] = _stream(cfg.seed, r).uniform(-0.5, 0.5, size=(n_steps, 2))
    jitter *= cfg.eta

    hz = hz_diagonal(model)
    mdiag = magnetization_diagonal(model.n_sites)
    e0 = hz[0]
    state = np.tile(all_up_state(model.n_sites), (n_real, 1))
    hx_buf = np.empty_like(state)
    samples = np.empty((n_real, n_steps + 1))
    _observable_row(state, model, hz, mdiag, e0, observable, samples[:, 0], hx_buf)
    z_phase = (-1j * tau) * hz
    for n in range(1, n_steps + 1):
        rotate_x(state, model.n_sites, model.g * tau * (1.0 + jitter[:, n - 1, 1]))
        state *= np.exp(z_phase[None, :] * (1.0 + jitter[:, n - 1, 0])[:, None])
        _observable_row(state, model, hz, mdiag, e0, observable, samples[:, n], hx_buf)

    times = tau * np.arange(n_steps + 1)
    meta = model_meta(
        model, tau=tau, kind="timing", eta=cfg.eta, realizations=n_real,
        seed=cfg.seed, observable=observable,
    )
    return _bundle(samples, times, tau, cfg.eta, meta, keep_samples)


def ensemble_noise_run(
    model: IsingModel,
    tau: float,
    n_steps: int,
    cfg: NoiseConfig,
    observable: str = "q_energy",
    keep_samples: bool = False,
) -> EnsembleTrajectory:
    """Static per-realization offsets: gates exp(-i tau (1+Delta_l) H_l).

    Realization r draws [Delta_Z, Delta_X] as the first two uniforms of its
    stream, then evolves with those fixed gate strengths.
    """
    if cfg.kind != "ensemble":
        raise ValueError("config kind must be 'ensemble'")
    n_real = cfg.realizations
    offsets = np.empty((n_real, 2))
    for r in range(n_real):
        offsets[r] = _stream(cfg.seed, r).uniform(-0.5, 0.5, size=2)
    offsets *= cfg.eta

    hz = hz_diagonal(model)
    mdiag = magnetization_diagonal(model.n_sites)
    e0 = hz[0]
    state = np.tile(all_up_state(model.n_sites), (n_real, 1))
    hx_buf = np.empty_like(state)
    samples = np.empty((n_real, n_steps + 1))
    _observable_row(state, model, hz, mdiag, e0, observable, samples[:, 0], hx_buf)
    phases = np.exp((-1j * tau) * hz[None, :] * (1.0 + offsets[:, 0])[:, None])
    thetas = model.g * tau * (1.0 + offsets[:, 1])
    for n in range(1, n_steps + 1):
        rotate_x(state, model.n_sites, thetas)
        state *= phases
        _observable_row(state, model, hz, mdiag, e0, observable, samples[:, n], hx_buf)

    times = tau * np.arange(n_steps + 1)
    meta = model_meta(
        model, tau=tau, kind="ensemble", eta=cfg.eta, realizations=n_real,
        seed=cfg.seed, observable=observable,
    )
    return _bundle(samples, times, tau, cfg.eta, meta, keep_samples)


def lindblad_oracle(
    model: IsingModel,
    tau: float,
    eta: float,
    n_periods: int,
    substeps: int = 20,
) -> TrajectoryRecord:
    """Master-equation Q_E(t) with Lindblad operators H_Z and H_X.

    Fixed-step fourth-order Runge-Kutta integration with dt = tau/substeps
    on the dense density matrix; meant for small chains.  Raises if the
    trace drifts beyond 1e-6, which signals too coarse a step.
    """
    if model.n_sites > 6:
        raise ValueError("density-matrix oracle is limited to 6 sites")
    d = hz_diagonal(model)
    hx = dense_hx(model)
    kernel = hx * (d[None, :] - d[:, None])
    heff = (np.diag(d) + hx).astype(np.complex128) + tau * 0.5j * kernel
    ham = np.diag(d) + hx
    gamma = (eta**2 / 12.0) * tau / 2.0
    zz = np.outer(d, d)
    sq = hx @ hx + np.diag(d * d)

    def rhs(rho):
        out = -1j * (heff @ rho - rho @ heff)
        if gamma:
            out += gamma * (2.0 * (zz * rho + hx @ rho @ hx) - sq @ rho - rho @ sq)
        return out

    dim = model.dim
    rho = np.zeros((dim, dim), dtype=np.complex128)
    rho[0, 0] = 1.0
    dt = tau / substeps
    e0 = d[0]
    qe = np.empty(n_periods + 1)
    herm_defect = 0.0
    for n in range(n_periods + 1):
        if n:
            for _ in range(substeps):
                k1 = rhs(rho)
                k2 = rhs(rho + 0.5 * dt * k1)
                k3 = rhs(rho + 0.5 * dt * k2)
                k4 = rhs(rho + dt * k3)
                rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            drift = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
            if drift > 1e-6:
                raise RuntimeError(f"trace drift {drift:.3e} at period {n}; reduce dt")
            herm_defect = max(herm_defect, float(np.max(np.abs(rho - rho.conj().T))))
        energy = np.einsum("ij,ji->", ham, rho).real
        qe[n] = (energy - e0) / (0.0 - e0)

    times = tau * np.arange(n_periods + 1)
    meta = model_meta(
        model, tau=tau, eta=eta, gamma=gamma, substeps=substeps,
        herm_defect=herm_defect, kind="lindblad", observable="q_energy",
    )
    return TrajectoryRecord(times, qe, "q_energy", tau, meta)
