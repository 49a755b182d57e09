"""Spin-1/2 chain encoding and Hamiltonian building blocks.

Basis convention: a chain of n sites is encoded in basis index b so that
site l (1-based) lives in bit l-1 of b.  Bit value 0 means spin up
(s = +1/2), bit value 1 means spin down (s = -1/2).  The all-up product
state is therefore basis index 0.  Spin operators are S = sigma/2 with
eigenvalues +-1/2.

The Hamiltonian splits into a diagonal part and a transverse part,

    H_Z = J sum_{l<n} S^z_l S^z_{l+1} + h sum_l S^z_l
    H_X = g sum_l S^x_l

with open boundaries.  H_Z is represented as its diagonal, H_X by a
matrix-free applier (`apply_hx`) plus an independently constructed dense
matrix (`dense_hx`) used as a cross-check and by small-n routines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class IsingModel:
    """Chain parameters: n sites, coupling j, longitudinal h, transverse g."""

    n_sites: int
    j: float = 1.0
    h: float = 2.0
    g: float = 2.0

    def __post_init__(self) -> None:
        if self.n_sites < 1:
            raise ValueError("need at least 1 site")

    @property
    def dim(self) -> int:
        return 1 << self.n_sites


def spin_values(n_sites: int) -> np.ndarray:
    """(dim, n_sites) array of S^z eigenvalues, s[b, l] = +-1/2 for site l+1."""
    b = np.arange(1 << n_sites, dtype=np.int64)
    bits = (b[:, None] >> np.arange(n_sites)) & 1
    return 0.5 - bits.astype(np.float64)


def hz_diagonal(model: IsingModel) -> np.ndarray:
    """Diagonal of H_Z over the full basis."""
    s = spin_values(model.n_sites)
    return model.j * np.sum(s[:, :-1] * s[:, 1:], axis=1) + model.h * np.sum(s, axis=1)


def magnetization_diagonal(n_sites: int) -> np.ndarray:
    """Diagonal of the mean magnetization M = n^-1 sum_l S^z_l."""
    return np.mean(spin_values(n_sites), axis=1)


def all_up_state(n_sites: int) -> np.ndarray:
    """Product state with every spin up (basis index 0)."""
    psi = np.zeros(1 << n_sites, dtype=np.complex128)
    psi[0] = 1.0
    return psi


def apply_hx(state: np.ndarray, model: IsingModel, out: np.ndarray | None = None) -> np.ndarray:
    """Apply H_X = g sum_l S^x_l to `state` without building a matrix.

    The last axis of `state` must have length 2**n_sites; leading axes are
    treated as a batch.  S^x flips one bit with amplitude 1/2, so each site
    contributes the bit-flipped state; the flip is a stride trick on a
    (batch, 2, 2**l) view.
    """
    if out is None:
        out = np.zeros_like(state)
    else:
        out[...] = 0.0
    lead = state.shape[:-1]
    for l in range(model.n_sites):
        v = state.reshape(*lead, -1, 2, 1 << l)
        o = out.reshape(*lead, -1, 2, 1 << l)
        o[..., 0, :] += v[..., 1, :]
        o[..., 1, :] += v[..., 0, :]
    out *= 0.5 * model.g
    return out


def dense_hx(model: IsingModel) -> np.ndarray:
    """Dense H_X built by Kronecker products; independent of `apply_hx`."""
    sx = np.array([[0.0, 0.5], [0.5, 0.0]])
    hx = np.zeros((model.dim, model.dim))
    for l in range(model.n_sites):
        op = np.kron(np.eye(1 << (model.n_sites - 1 - l)), np.kron(sx, np.eye(1 << l)))
        hx += op
    return model.g * hx


def dense_hamiltonian(model: IsingModel) -> np.ndarray:
    """Dense H = H_Z + H_X for small chains."""
    return np.diag(hz_diagonal(model)) + dense_hx(model)
