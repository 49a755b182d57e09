"""Propagators: Trotterized drive, Krylov time stepping, exact eigensolves.

One drive period of length tau applies U2 = exp(-i tau H_X) first and then
U1 = exp(-i tau H_Z), so the period unitary is U = U1 U2.  U1 is an
elementwise phase on the H_Z diagonal; U2 factorizes into independent
single-site rotations exp(-i theta S^x) with theta = g tau, each a 2x2
mixing of bit-paired amplitudes.

All steppers treat leading axes of the state array as a batch, which is how
ensembles of noisy runs and operator columns are pushed through the same
kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, schur

from .spin_core import IsingModel, apply_hx, hz_diagonal


def rotate_x(state: np.ndarray, n_sites: int, theta) -> np.ndarray:
    """Apply prod_l exp(-i theta S^x_l) to `state` in place.

    `theta` is a scalar or an array matching the leading batch axes,
    allowing per-realization rotation angles.
    """
    th = np.asarray(theta, dtype=np.float64)
    c = np.cos(0.5 * th)
    s = np.sin(0.5 * th)
    if th.ndim:
        c = c.reshape(th.shape + (1, 1))
        s = s.reshape(th.shape + (1, 1))
    isin = -1j * s
    lead = state.shape[:-1]
    for l in range(n_sites):
        v = state.reshape(*lead, -1, 2, 1 << l)
        a = v[..., 0, :]
        b = v[..., 1, :]
        ta = a.copy()
        a *= c
        a += isin * b
        b *= c
        b += isin * ta
    return state


def apply_hamiltonian(
    state: np.ndarray,
    model: IsingModel,
    hz: np.ndarray | None = None,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Matrix-free H |state> = (H_Z + H_X) |state>, batched on leading axes."""
    if hz is None:
        hz = hz_diagonal(model)
    out = apply_hx(state, model, out)
    out += hz * state
    return out


class TrotterStepper:
    """Precomputed gates for repeated application of one Trotter period.

    `period` and `period_back` mutate the state buffer and return it; use
    `trotter_period` for a pure single application.
    """

    def __init__(self, model: IsingModel, tau: float):
        self.model = model
        self.tau = tau
        self.hz = hz_diagonal(model)
        self._phase = np.exp(-1j * tau * self.hz)
        self._phase_back = np.conj(self._phase)
        self._theta = model.g * tau

    def period(self, state: np.ndarray) -> np.ndarray:
        """Advance one period: U1 U2 |state>, in place."""
        rotate_x(state, self.model.n_sites, self._theta)
        state *= self._phase
        return state

    def period_back(self, state: np.ndarray) -> np.ndarray:
        """Undo one period: U2(-tau) U1(-tau) |state>, in place."""
        state *= self._phase_back
        rotate_x(state, self.model.n_sites, -self._theta)
        return state


def trotter_period(state: np.ndarray, model: IsingModel, tau: float) -> np.ndarray:
    """Return U1 U2 |state> without mutating the input."""
    psi = np.array(state, dtype=np.complex128, copy=True)
    return TrotterStepper(model, tau).period(psi)


def dense_period_unitary(model: IsingModel, tau: float) -> np.ndarray:
    """Dense one-period unitary, built by pushing basis states through the gates.

    Costs an (dim, dim) complex matrix; intended for small chains.
    """
    cols = np.eye(model.dim, dtype=np.complex128)
    TrotterStepper(model, tau).period(cols)
    # row r of `cols` now holds U e_r, i.e. column r of U
    return cols.T.copy()


@dataclass
class EigenDecomposition:
    """Eigenpairs of a Hermitian operator; `vectors` holds eigenvectors as columns."""

    energies: np.ndarray
    vectors: np.ndarray
    label: str = ""


def dense_eigh(op: np.ndarray, label: str = "") -> EigenDecomposition:
    """Eigendecomposition with a hermiticity guard (max deviation 1e-10)."""
    defect = np.max(np.abs(op - op.conj().T))
    if defect > 1e-10:
        raise ValueError(f"operator is not Hermitian (defect {defect:.3e})")
    energies, vectors = np.linalg.eigh(op)
    return EigenDecomposition(energies, vectors, label)


@dataclass
class FloquetEigensystem:
    """Orthonormal eigenbasis of the one-period unitary.

    Quasi-energies are -arg(eigenvalue)/tau folded to (-pi/tau, pi/tau],
    sorted ascending; `vectors` holds the matching eigenvectors as columns.
    `min_gap` is the smallest circular quasi-energy spacing.
    """

    quasienergies: np.ndarray
    vectors: np.ndarray
    tau: float
    min_gap: float

    @property
    def degenerate(self) -> bool:
        return self.min_gap < 1e-10

    def initial_populations(self) -> np.ndarray:
        """|<nu|psi_0>|^2 for the all-up initial state (basis index 0)."""
        return np.abs(self.vectors[0]) ** 2


def floquet_eigensystem(model: IsingModel, tau: float) -> FloquetEigensystem:
    """Exact eigenbasis of U = U1 U2 via a complex Schur decomposition.

    For a unitary matrix the Schur form is diagonal, so the Schur vectors
    are an orthonormal eigenbasis even near quasi-energy degeneracies,
    which plain nonsymmetric diagonalization does not guarantee.
    """
    u = dense_period_unitary(model, tau)
    t, q = schur(u, output="complex")
    d = np.diagonal(t).copy()
    off = np.max(np.abs(t - np.diag(d)))
    if off > 1e-8:
        raise RuntimeError(f"Schur form not diagonal (defect {off:.3e}); U not unitary?")
    mod_defect = np.max(np.abs(np.abs(d) - 1.0))
    if mod_defect > 1e-10:
        raise RuntimeError(f"period operator not unitary (defect {mod_defect:.3e})")
    quasi = -np.angle(d) / tau
    # fold the half-open boundary so the window is (-pi/tau, pi/tau]
    quasi[quasi <= -np.pi / tau] += 2.0 * np.pi / tau
    order = np.argsort(quasi)
    quasi = quasi[order]
    vectors = q[:, order]
    gaps = np.diff(quasi)
    wrap = quasi[0] + 2.0 * np.pi / tau - quasi[-1]
    min_gap = float(min(gaps.min(), wrap)) if quasi.size > 1 else np.inf
    return FloquetEigensystem(quasi, vectors, tau, min_gap)


def _krylov_substep(psi, matvec, dt, max_dim, tol):
    """Approximate exp(-i dt H) psi in a Lanczos subspace.

    Returns (result, converged, error_estimate).  The estimate is the
    standard residual-style bound beta_{k+1} |u_k| from the last subspace
    coupling; full reorthogonalization (two passes) keeps the basis clean.
    """
    norm0 = np.linalg.norm(psi)
    if norm0 == 0.0:
        return psi.copy(), True, 0.0
    basis = np.empty((max_dim, psi.size), dtype=np.complex128)
    basis[0] = psi / norm0
    alphas: list[float] = []
    betas: list[float] = []
    out = None
    err = np.inf
    for k in range(max_dim):
        w = matvec(basis[k])
        alphas.append(float(np.real(np.vdot(basis[k], w))))
        w -= alphas[-1] * basis[k]
        if k:
            w -= betas[-1] * basis[k - 1]
        for _ in range(2):
            w -= basis[: k + 1].T @ (basis[: k + 1].conj() @ w)
        beta = float(np.linalg.norm(w))
        evals, evecs = eigh_tridiagonal(alphas, betas)
        u = evecs @ (np.exp(-1j * dt * evals) * evecs[0])
        out = (basis[: k + 1].T @ u) * norm0
        err = abs(beta * u[-1])
        if err < tol or beta < 1e-14:
            return out, True, err
        if k + 1 < max_dim:
            betas.append(beta)
            basis[k + 1] = w / beta
    return out, False, err


def krylov_evolve(
    state: np.ndarray,
    model: IsingModel,
    t: float,
    *,
    max_dim: int = 40,
    tol: float = 1e-10,
) -> np.ndarray:
    """Propagate |state> by exp(-i t H) with a Lanczos subspace method.

    Substeps are halved until every substep converges within `max_dim`
    Krylov vectors at tolerance tol/nsub; raises RuntimeError if 2^30
    substeps are not enough (which signals a broken input, not a tight
    tolerance).
    """
    psi = np.array(state, dtype=np.complex128, copy=True)
    if t == 0.0:
        return psi
    hz = hz_diagonal(model)

    def matvec(v):
        return apply_hamiltonian(v, model, hz=hz)

    nsub = 1
    for _ in range(31):
        dt = t / nsub
        cur = psi
        ok = True
        for _ in range(nsub):
            cur, converged, _ = _krylov_substep(cur, matvec, dt, max_dim, tol / nsub)
            if not converged:
                ok = False
                break
        if ok:
            return cur
        nsub *= 2
    raise RuntimeError(f"krylov propagation did not converge (t={t}, max_dim={max_dim})")
