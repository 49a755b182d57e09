import numpy as np
import pytest
from scipy.linalg import expm

from trotterlab import IsingModel, all_up_state, dense_hamiltonian, dense_hx, hz_diagonal, magnetization_diagonal
from trotterlab.observables import (
    TrajectoryRecord,
    exact_reference,
    ipr_dynamical,
    ipr_floquet,
    ipr_from_loschmidt,
    otoc_dense_reference,
    otoc_run,
    run_dynamics,
    stroboscopic_average,
    trotter_error_trajectory,
)


def dense_trajectories(model, tau, n_steps):
    # independent dense reference for all recorded series
    u = np.diag(np.exp(-1j * tau * hz_diagonal(model))) @ expm(-1j * tau * dense_hx(model))
    ham = dense_hamiltonian(model)
    mdiag = magnetization_diagonal(model.n_sites)
    psi = all_up_state(model.n_sites)
    mags, energies, losch = [], [], []
    for n in range(n_steps + 1):
        if n:
            psi = u @ psi
        mags.append(np.real(np.vdot(psi, mdiag * psi)))
        energies.append(np.real(np.vdot(psi, ham @ psi)))
        losch.append(abs(psi[0]) ** 2)
    return np.array(mags), np.array(energies), np.array(losch)


def test_record_validation():
    with pytest.raises(ValueError):
        TrajectoryRecord(np.array([0.0, 1.0, 1.5]), np.zeros(3), "x", 1.0)
    with pytest.raises(ValueError):
        TrajectoryRecord(np.array([0.0, 1.0]), np.zeros(3), "x", 1.0)


def test_initial_point_values():
    model = IsingModel(5)
    recs = run_dynamics(model, 0.2, 3)
    assert recs["magnetization"].values[0] == pytest.approx(0.5)
    assert recs["q_energy"].values[0] == pytest.approx(0.0, abs=1e-14)
    assert recs["loschmidt"].values[0] == pytest.approx(1.0)
    # E(0) is the all-up diagonal energy J(n-1)/4 + h n/2
    assert recs["energy"].values[0] == pytest.approx(1.0 + 5.0)
    assert np.allclose(recs["energy"].times, 0.2 * np.arange(4))


def test_run_dynamics_matches_dense_oracle():
    model = IsingModel(4)
    tau = 0.3
    recs = run_dynamics(model, tau, 30)
    mags, energies, losch = dense_trajectories(model, tau, 30)
    assert np.max(np.abs(recs["magnetization"].values - mags)) < 1e-10
    assert np.max(np.abs(recs["energy"].values - energies)) < 1e-10
    assert np.max(np.abs(recs["loschmidt"].values - losch)) < 1e-10
    e0 = 0.75 + 4.0
    assert np.allclose(recs["q_energy"].values, (energies - e0) / (0.0 - e0), atol=1e-10)


def test_exact_reference_conserves_energy():
    model = IsingModel(4)
    times = 0.25 * np.arange(21)
    recs = exact_reference(model, times)
    assert np.max(np.abs(recs["q_energy"].values)) < 1e-8
    psi = all_up_state(4)
    ham = dense_hamiltonian(model)
    mdiag = magnetization_diagonal(4)
    for k in (5, 20):
        ref = expm(-1j * times[k] * ham) @ psi
        assert recs["magnetization"].values[k] == pytest.approx(
            np.real(np.vdot(ref, mdiag * ref)), abs=1e-8
        )


def test_exact_reference_requires_zero_start():
    with pytest.raises(ValueError):
        exact_reference(IsingModel(3), np.array([0.1, 0.2]))


def test_error_trajectory_normalization():
    model = IsingModel(4)
    out = trotter_error_trajectory(model, 0.1, 20)
    assert out["delta_m"].values[0] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(
        out["delta_m_normalized"].values, out["delta_m"].values / (model.h * 0.1) ** 2
    )


def test_error_trajectory_tau_squared_collapse():
    # time-averaged normalized error is tau-independent at leading order
    model = IsingModel(6)
    coarse = trotter_error_trajectory(model, 0.1, 100)["delta_m_normalized"]
    fine = trotter_error_trajectory(model, 0.05, 200)["delta_m_normalized"]
    a = np.mean(coarse.values)
    b = np.mean(fine.values)
    assert abs(a - b) / b < 0.25


def test_stroboscopic_average_hand_values():
    rec = TrajectoryRecord(np.arange(5.0), np.array([9.0, 9.0, 1.0, 2.0, 3.0]), "x", 1.0)
    avg = stroboscopic_average(rec, 3)
    assert avg.mean == pytest.approx(2.0)
    assert avg.fluctuation == pytest.approx(np.sqrt(2.0 / 3.0))
    assert avg.window == 3
    with pytest.raises(ValueError):
        stroboscopic_average(rec, 6)
    with pytest.raises(ValueError):
        stroboscopic_average(rec, 0)


def test_ipr_limits():
    # stuck at the origin: IPR 1, ratio 0
    res = ipr_from_loschmidt(np.ones(100), 4, 50)
    assert res.ipr == pytest.approx(1.0)
    assert res.ratio == pytest.approx(0.0, abs=1e-14)
    # fully delocalized reference value 2/2^n gives ratio exactly 1
    res = ipr_from_loschmidt(np.full(100, 2.0 / 16.0), 4, 50)
    assert res.ratio == pytest.approx(1.0)


def test_ipr_dynamical_matches_floquet_ensemble():
    # frozen check point: N=6, J tau = 0.8, generic gaps
    model = IsingModel(6)
    f_val, f = ipr_floquet(model, 0.8)
    assert not f.degenerate
    assert f_val == pytest.approx(0.289120, abs=1e-5)
    dyn = ipr_dynamical(model, 0.8, 4000, 2000)
    assert abs(dyn.ipr - f_val) / f_val < 0.05


def test_otoc_initial_value():
    model = IsingModel(4)
    rec, avg = otoc_run(model, 0.3, 5, window=3)
    assert rec.values[0] == pytest.approx(1.0 / 16.0, abs=1e-12)
    assert abs(rec.values[0].imag) < 1e-14
    assert avg.window == 3


def test_otoc_matches_dense_reference():
    model = IsingModel(4)
    tau = 0.5
    rec, _ = otoc_run(model, tau, 20)
    ref = otoc_dense_reference(model, tau, 20)
    assert np.max(np.abs(rec.values - ref)) < 1e-10


def test_otoc_window_validation():
    with pytest.raises(ValueError):
        otoc_run(IsingModel(3), 0.3, 4, window=9)
