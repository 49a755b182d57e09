"""Perturbative structure of the Trotterized drive.

The one-period unitary U1 U2 equals exp(-i tau H_F) with a Floquet
generator expanded in powers of tau,

    H_F = H + tau C1 + tau^2 C2 + O(tau^3)
    C1 = (i/2) [H_X, H_Z]
    C2 = -(1/12) [H_X - H_Z, [H_X, H_Z]]

Because H_Z is diagonal, commutators with it are elementwise in the energy
detunings, so C1 = (i/2) K with the real antisymmetric kernel
K_ij = (H_X)_ij (d_j - d_i), and only [H_X, K] in C2 needs a matrix product.

Two scalar coefficients summarize heating at leading order in the initial
state: q_E (excess-energy fraction, Q_E ~ q_E (h tau)^2) and m
(long-time magnetization deficit, |Delta M| ~ m (h tau)^2).  Both come from
the diagonal ensemble of H_F: q_E from the second-order energy shift, m
from second-order eigenvector perturbation theory of H_F in tau, evaluated
in the exact H eigenbasis.  All heavy arithmetic is real; C1 enters only
through K.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import svdvals

from .spin_core import IsingModel, dense_hx, hz_diagonal, magnetization_diagonal

DEGENERACY_TOL = 1e-8


@dataclass
class MagnusOperators:
    """Dense expansion operators: c1 is Hermitian, c2 real symmetric."""

    c1: np.ndarray
    c2: np.ndarray


def _commutator_kernel(model: IsingModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (d, H_X, K) with K = -i [H_X, H_Z] = 2 C1 / i."""
    d = hz_diagonal(model)
    hx = dense_hx(model)
    k = hx * (d[None, :] - d[:, None])
    return d, hx, k


def build_magnus(model: IsingModel) -> MagnusOperators:
    """Dense C1 and C2 for small chains."""
    d, hx, k = _commutator_kernel(model)
    c1 = 0.5j * k
    c2 = -(hx @ k - k @ hx - (d[:, None] - d[None, :]) * k) / 12.0
    return MagnusOperators(c1, c2)


def magnus_hf(model: IsingModel, tau: float, order: int = 2) -> np.ndarray:
    """Truncated Floquet generator H + tau C1 [+ tau^2 C2]."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    d, hx, k = _commutator_kernel(model)
    hf = (np.diag(d) + hx).astype(np.complex128)
    if order >= 1:
        hf += tau * 0.5j * k
    if order == 2:
        c2 = -(hx @ k - k @ hx - (d[:, None] - d[None, :]) * k) / 12.0
        hf += tau * tau * c2
    return hf


@lru_cache(maxsize=4)
def _coefficients(model: IsingModel) -> dict:
    """Shared eigenbasis computation behind compute_qE / compute_m.

    Returns only scalars so the cache stays small.  Energy denominators
    below DEGENERACY_TOL are dropped from the perturbative sums.
    """
    d, hx, k = _commutator_kernel(model)
    dij = d[:, None] - d[None, :]
    c2 = -(hx @ k - k @ hx - dij * k) / 12.0
    double_z = dij * dij * hx  # [H_Z, [H_Z, H_X]]
    ham = np.diag(d) + hx
    del hx
    energies, vecs = np.linalg.eigh(ham)
    del ham

    nb = min(64, vecs.shape[1])
    gram = vecs[:, :nb].T @ vecs
    gram[np.arange(nb), np.arange(nb)] -= 1.0
    basis_defect = float(np.max(np.abs(gram)))
    del gram

    amp = vecs[0].copy()  # <lambda|psi_0> for the all-up state
    pops = amp * amp
    e0 = float(d[0])

    # energy coefficient: bracket of C2 and the double-H_Z commutator
    diag_c2 = np.einsum("il,il->l", vecs, c2 @ vecs)
    diag_dz = np.einsum("il,il->l", vecs, double_z @ vecs)
    del double_z
    bracket = float(c2[0, 0] - pops @ diag_c2 - 0.25 * (pops @ diag_dz))
    q_e = -bracket / (model.h**2 * e0)

    # magnetization coefficient: second-order eigenvector perturbation of
    # H_F = H + tau C1 + tau^2 C2 applied to the diagonal ensemble of M.
    # C1 = (i/2) K is purely imaginary, so with kt = V^T K V everything
    # reduces to real arithmetic through r = (kt/2) / (E_lam - E_mu).
    kt = vecs.T @ (k @ vecs)
    del k
    c2t = vecs.T @ (c2 @ vecs)
    del c2
    mdiag = magnetization_diagonal(model.n_sites)
    mt = vecs.T @ (mdiag[:, None] * vecs)
    del vecs

    de = energies[None, :] - energies[:, None]
    small = np.abs(de) < DEGENERACY_TOL
    n_dropped = (int(small.sum()) - len(energies)) // 2
    kept = np.abs(de[~small])
    min_kept_gap = float(kept.min()) if kept.size else 0.0
    del kept
    inv = np.where(small, 0.0, 1.0) / np.where(small, 1.0, de)
    del de, small
    r = 0.5 * kt * inv
    m_eig = np.diag(mt).copy()

    g1 = r.T @ amp  # imaginary part of the first-order amplitude overlap
    norm2 = (r * r).sum(axis=0)
    b2 = inv * (c2t - 0.5 * kt @ r)
    del inv, kt, c2t
    g2 = b2.T @ amp - 0.5 * norm2 * amp

    pop_shift = ((g1 * g1 + 2.0 * amp * g2) * m_eig).sum()
    mr = mt @ r
    vec_first = ((r * mr).sum(axis=0) * pops).sum()
    vec_second = 2.0 * (((mt * b2.T).sum(axis=1) * pops).sum() - 0.5 * (m_eig * norm2) @ pops)
    m_signed = float((pop_shift + vec_first + vec_second) / model.h**2)

    return {
        "q_e": float(q_e),
        "bracket": bracket,
        "bracket_over_j2_e0": float(bracket / (model.j**2 * e0)),
        "e0": e0,
        "m_signed": m_signed,
        "m_abs": abs(m_signed),
        "m_population_term": float(pop_shift / model.h**2),
        "m_vector_terms": float((vec_first + vec_second) / model.h**2),
        "m_diagonal_ensemble": float(pops @ m_eig),
        "n_sites": model.n_sites,
        "degeneracy_tol": DEGENERACY_TOL,
        "degenerate_pairs": n_dropped,
        "min_kept_gap": min_kept_gap,
        "eigenbasis_defect": basis_defect,
    }


def compute_qE(model: IsingModel) -> float:
    """Coefficient of (h tau)^2 in the long-time heating fraction Q_E."""
    return _coefficients(model)["q_e"]


def compute_m(model: IsingModel) -> float:
    """Magnitude of the (h tau)^2 coefficient of the long-time magnetization error."""
    return _coefficients(model)["m_abs"]


def coefficient_report(model: IsingModel) -> dict:
    """Both coefficients with their intermediate scalars, for provenance."""
    return dict(_coefficients(model))


def lloyd_commutator_bound(model: IsingModel, t: float, n_periods: int) -> float:
    """First-order product-formula error bound (t^2 / 2n) ||[H_X, H_Z]||."""
    _, _, k = _commutator_kernel(model)
    norm = float(svdvals(k)[0])
    return t * t * norm / (2.0 * n_periods)


def trotter_global_defect(model: IsingModel, t: float, n_periods: int) -> float:
    """Spectral-norm distance ||(U1 U2)^n - exp(-i t H)|| for small chains."""
    from scipy.linalg import expm

    from .evolvers import dense_period_unitary
    from .spin_core import dense_hamiltonian

    u = dense_period_unitary(model, t / n_periods)
    un = np.linalg.matrix_power(u, n_periods)
    exact = expm(-1j * t * dense_hamiltonian(model))
    return float(svdvals(un - exact)[0])
