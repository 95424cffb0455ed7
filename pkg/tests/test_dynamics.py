import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from esqpt.dynamics import (
    DELTA_BOUND,
    diagonal_ensemble_occupations,
    diagonal_entropy,
    entropy_series,
    equilibration_report,
    occupations,
    occupations_many,
    quench_ensemble,
    strength_function,
    survival_probability,
)

from conftest import decompose, even_block_dense


def ensemble(N, alpha, lam, n0=0):
    return quench_ensemble(decompose(N, alpha, 0.0), decompose(N, alpha, lam), n0)


def dense_occupations(N, alpha, lam, tau, n0=0):
    Hi = even_block_dense(N, alpha)
    Hf = even_block_dense(N, alpha, lam)
    _, Vi = np.linalg.eigh(Hi)
    psi = expm(-1j * Hf * tau) @ Vi[:, n0]
    return np.abs(Vi.T @ psi) ** 2


@pytest.mark.parametrize("N", [4, 8, 12])
@pytest.mark.parametrize("n0", [0, 1])
def test_matches_dense_propagation(N, n0, rng):
    ens = ensemble(N, 0.4, 1.0, n0)
    for tau in rng.uniform(0, 200, 50):
        np.testing.assert_allclose(occupations(ens, tau), dense_occupations(N, 0.4, 1.0, tau, n0), atol=1e-9)


def test_fixed_point_n8():
    ens = ensemble(8, 0.4, 1.0)
    np.testing.assert_allclose(occupations(ens, 3.7), dense_occupations(8, 0.4, 1.0, 3.7), atol=1e-9)


def test_ensemble_invariants():
    ens = ensemble(4, 0.4, 1.0)
    assert np.sum(ens.coeffs**2) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(ens.overlap @ ens.coeffs, np.eye(ens.dim)[0], atol=1e-10)
    np.testing.assert_allclose(ens.overlap @ ens.overlap.T, np.eye(ens.dim), atol=1e-12)


def test_identical_bases():
    dec = decompose(20, 0.4)
    ens = quench_ensemble(dec, dec, 3)
    np.testing.assert_allclose(ens.overlap, np.eye(dec.dim), atol=1e-15)
    np.testing.assert_allclose(ens.coeffs, np.eye(dec.dim)[3], atol=1e-15)


def test_ensemble_errors():
    with pytest.raises(ValueError, match="dimension"):
        quench_ensemble(decompose(4, 0.4), decompose(6, 0.4))
    with pytest.raises(ValueError):
        quench_ensemble(decompose(4, 0.4), decompose(4, 0.4), 3)


def test_normalization_and_reversal(rng):
    ens = ensemble(200, 0.4, 1.0)
    taus = rng.uniform(0, 1e4, 300)
    C = occupations_many(ens, taus)
    np.testing.assert_allclose(C.sum(axis=1), 1.0, atol=1e-10)
    assert C.min() >= 0.0 and C.max() <= 1.0 + 1e-12
    np.testing.assert_allclose(occupations_many(ens, -taus), C, atol=1e-12)


def test_parseval():
    ens = ensemble(60, 0.3, 0.9)
    tau = 17.25
    amp = (ens.overlap * ens.coeffs) @ np.exp(-1j * ens.final_energies * tau)
    C = occupations(ens, tau)
    assert C.sum() == pytest.approx(np.vdot(amp, amp).real, abs=1e-13)


def test_initial_and_stationary():
    ens = ensemble(30, 0.4, 1.0, n0=2)
    np.testing.assert_allclose(occupations(ens, 0.0), np.eye(ens.dim)[2], atol=1e-12)
    still = ensemble(30, 0.4, 0.0)
    for tau in (0.0, 5.0, 1e3):
        np.testing.assert_allclose(occupations(still, tau), np.eye(still.dim)[0], atol=1e-12)
    with pytest.raises(ValueError):
        occupations(ens, -1.0)


def test_diagonal_entropy_values():
    assert diagonal_entropy([1.0, 0.0, 0.0]) == 0.0
    assert diagonal_entropy(np.full(4, 0.25)) == pytest.approx(np.log(4), abs=1e-12)
    assert diagonal_entropy([0.9, 0.1]) == pytest.approx(0.325083, abs=1e-6)
    with pytest.raises(ValueError):
        diagonal_entropy([1.1, -0.1])
    with pytest.raises(ValueError):
        diagonal_entropy([0.5, 0.4])


def test_entropy_series_bounds():
    ens = ensemble(100, 0.4, 1.0)
    taus = np.arange(0, 400.0001, 0.05)
    s = entropy_series(ens, taus)
    assert s.values.shape == taus.shape
    assert s.values[0] == pytest.approx(0.0, abs=1e-12)
    assert s.values.min() >= 0.0
    assert s.values.max() <= np.log(ens.dim)
    assert s.step == pytest.approx(0.05)


def test_entropy_series_thread_independent():
    ens = ensemble(120, 0.4, 1.0)
    taus = 1e3 + 0.05 * np.arange(5000)
    a = entropy_series(ens, taus, threads=1)
    b = entropy_series(ens, taus, threads=3)
    assert np.array_equal(a.values, b.values)


def test_entropy_series_keep_occupations():
    ens = ensemble(40, 0.4, 1.0)
    taus = np.linspace(0, 10, 11)
    s = entropy_series(ens, taus, keep_occupations=True)
    np.testing.assert_allclose(s.occupations, occupations_many(ens, taus), atol=1e-14)
    with pytest.raises(ValueError):
        entropy_series(ens, [-1.0, 0.0])


def test_quench_at_zero_is_trivial():
    ens = ensemble(50, 0.4, 0.0)
    taus = np.linspace(0, 100, 201)
    assert np.abs(entropy_series(ens, taus).values).max() < 1e-12
    np.testing.assert_allclose(survival_probability(ens, taus), 1.0, atol=1e-12)
    rep = equilibration_report(ens, entropy_series(ens, taus))
    assert rep.diag_ensemble_entropy == pytest.approx(0.0, abs=1e-12)
    assert rep.delta == pytest.approx(0.0, abs=1e-12)


def test_survival_matches_occupation():
    ens = ensemble(80, 0.4, 1.0, n0=1)
    taus = np.linspace(0, 50, 37)
    np.testing.assert_allclose(survival_probability(ens, taus), occupations_many(ens, taus)[:, 1], atol=1e-12)
    assert survival_probability(ens, [0.0])[0] == pytest.approx(1.0, abs=1e-12)


def test_survival_decays_at_criticality():
    ens = ensemble(1000, 0.4, 1.0)
    taus = np.arange(1e3, 1e4, 0.5)
    assert survival_probability(ens, taus).mean() < 0.1


def test_long_time_average_oracle():
    ens = ensemble(8, 0.4, 1.0)
    taus = np.arange(0.0, 1e5, 0.37)
    avg = occupations_many(ens, taus).mean(axis=0)
    np.testing.assert_allclose(diagonal_ensemble_occupations(ens), avg, atol=1e-3)


@pytest.mark.parametrize("alpha, lam", [(0.4, 0.1), (0.4, 1.0), (0.4, 2.0), (0.2, 1.5)])
def test_delta_bound(alpha, lam):
    ens = ensemble(300, alpha, lam)
    s = entropy_series(ens, 1e3 + 0.05 * np.arange(20000))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = equilibration_report(ens, s)
    assert rep.bound == pytest.approx(0.422784, abs=1e-6)
    assert rep.delta <= DELTA_BOUND + 1e-6
    assert rep.within_bound


def test_strength_function():
    ens = ensemble(200, 0.4, 1.0)
    for k in range(5):
        sf = strength_function(ens, k, bins=200)
        assert sf.weights.shape == (200,)
        assert np.sum(sf.stick_weights) == pytest.approx(float(k == 0), abs=1e-10)
        assert np.sum(sf.weights) == pytest.approx(float(k == 0), abs=1e-10)
    sf0 = strength_function(ens, 0)
    assert np.sum(np.abs(sf0.stick_weights)) == pytest.approx(np.sum(ens.coeffs**2), abs=1e-12)
    with pytest.raises(ValueError):
        strength_function(ens, 0, bins=5)
    with pytest.raises(ValueError):
        strength_function(ens, ens.dim)


def test_strength_function_unquenched_is_single_stick():
    ens = ensemble(40, 0.4, 0.0, n0=0)
    sf = strength_function(ens, 0, bins=50)
    assert np.count_nonzero(np.abs(sf.stick_weights) > 1e-12) == 1
    assert sf.weights[0] == pytest.approx(1.0, abs=1e-12)


def test_near_degenerate_warning():
    dec = decompose(4, 0.4)
    dup = type(dec)(np.array([0.0, 0.0, 1.0]), np.eye(3))
    with pytest.warns(RuntimeWarning, match="near-degenerate"):
        quench_ensemble(dup, dup)
