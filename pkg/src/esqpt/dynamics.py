"""Cyclic-quench dynamics in the initial-Hamiltonian eigenbasis.

The evolved amplitude on initial eigenstate k is

    a_k(tau) = sum_m O[k, m] c[m] exp(-i E_m tau)

with O the overlap between the initial and final eigenbases and c the
expansion of the initial state in the final basis.  Occupations are
|a_k|^2, and the diagonal entropy is their Shannon entropy.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import entr

from .eigen import SpectralDecomposition, rescale_energies

EULER_GAMMA = float(np.euler_gamma)
DELTA_BOUND = 1.0 - EULER_GAMMA
DEGENERACY_GAP = 1e-10
# tau points per kernel block: (dim x block) cos/sin panels stay cache-sized
BLOCK = 1024


def worker_count() -> int:
    """Thread cap from ESQPT_THREADS (default: all CPUs)."""
    env = os.environ.get("ESQPT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ESQPT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class QuenchEnsemble:
    overlap: np.ndarray
    coeffs: np.ndarray
    final_energies: np.ndarray
    initial_index: int = 0
    # amplitude matrix O[k, m] * c[m], precomputed once for the evolution kernel
    amplitudes: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class EntropyTimeSeries:
    taus: np.ndarray
    values: np.ndarray
    tau0: float
    dtau: float
    step: float
    occupations: np.ndarray | None = None


@dataclass(frozen=True)
class StrengthFunction:
    k: int
    bin_centers: np.ndarray
    weights: np.ndarray
    stick_energies: np.ndarray
    stick_weights: np.ndarray


@dataclass(frozen=True)
class EquilibrationReport:
    time_avg_entropy: float
    diag_ensemble_entropy: float
    delta: float
    bound: float = DELTA_BOUND

    @property
    def within_bound(self) -> bool:
        return self.delta <= self.bound + 1e-6


def quench_ensemble(
    dec_i: SpectralDecomposition, dec_f: SpectralDecomposition, n0: int = 0
) -> QuenchEnsemble:
    if dec_i.dim != dec_f.dim:
        raise ValueError(f"dimension mismatch: {dec_i.dim} vs {dec_f.dim}")
    if not 0 <= n0 < dec_i.dim:
        raise ValueError(f"initial index {n0} out of range for dim {dec_i.dim}")
    overlap = dec_i.vectors.T @ dec_f.vectors
    coeffs = dec_f.vectors.T @ dec_i.vectors[:, n0]
    gaps = np.diff(dec_f.energies)
    if gaps.size and gaps.min() < DEGENERACY_GAP:
        warnings.warn(
            f"near-degenerate final spectrum (min gap {gaps.min():.3g}); "
            "diagonal-ensemble averages assume nondegenerate levels",
            RuntimeWarning,
            stacklevel=2,
        )
    return QuenchEnsemble(
        overlap=overlap,
        coeffs=coeffs,
        final_energies=dec_f.energies.copy(),
        initial_index=n0,
        amplitudes=overlap * coeffs[np.newaxis, :],
    )


def _amplitudes(ens: QuenchEnsemble) -> np.ndarray:
    if ens.amplitudes is not None:
        return ens.amplitudes
    return ens.overlap * ens.coeffs[np.newaxis, :]


def _occupation_block(amp: np.ndarray, energies: np.ndarray, taus: np.ndarray) -> np.ndarray:
    phase = np.multiply.outer(energies, taus)
    re = amp @ np.cos(phase)
    im = amp @ np.sin(phase)
    return (re * re + im * im).T


def _check_taus(taus) -> np.ndarray:
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if taus.size == 0:
        raise ValueError("empty time grid")
    if not np.all(np.isfinite(taus)):
        raise ValueError("time grid must be finite")
    return taus


def occupations_many(ens: QuenchEnsemble, taus) -> np.ndarray:
    """Occupations C_k(tau) for every tau, shape (len(taus), dim).

    Negative times are accepted here (time-reversal checks); the public
    single-time entry point enforces tau >= 0.
    """
    taus = _check_taus(taus)
    amp = _amplitudes(ens)
    return np.concatenate(
        [
            _occupation_block(amp, ens.final_energies, taus[i : i + BLOCK])
            for i in range(0, taus.size, BLOCK)
        ]
    )


def occupations(ens: QuenchEnsemble, tau: float) -> np.ndarray:
    if not tau >= 0.0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    return occupations_many(ens, [tau])[0]


def diagonal_entropy(C) -> float:
    """Shannon entropy -sum C ln C of a probability vector (0 ln 0 = 0)."""
    C = np.asarray(C, dtype=float)
    if np.any(C < 0.0):
        raise ValueError("occupations must be non-negative")
    total = C.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"occupations must sum to 1, got {total!r}")
    return float(entr(C).sum())


def _entropy_block(amp, energies, taus, keep):
    C = _occupation_block(amp, energies, taus)
    # roundoff can push C_n0(0) just above 1, where entr turns negative
    return entr(np.clip(C, 0.0, 1.0)).sum(axis=1), (C if keep else None)


def entropy_series(
    ens: QuenchEnsemble,
    taus,
    keep_occupations: bool = False,
    threads: int | None = None,
) -> EntropyTimeSeries:
    """Diagonal entropy S_d(tau) on a time grid.

    Blocks of the grid are evaluated concurrently and assembled in grid order,
    so the output does not depend on the thread count.
    """
    taus = _check_taus(taus)
    if np.any(taus < 0.0):
        raise ValueError("time grid must be non-negative")
    amp = _amplitudes(ens)
    starts = range(0, taus.size, BLOCK)
    threads = min(threads or worker_count(), len(starts))
    job = lambda i: _entropy_block(amp, ens.final_energies, taus[i : i + BLOCK], keep_occupations)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(i) for i in starts]
    values = np.concatenate([p[0] for p in parts])
    occ = np.concatenate([p[1] for p in parts]) if keep_occupations else None
    step = float(taus[1] - taus[0]) if taus.size > 1 else 0.0
    return EntropyTimeSeries(
        taus=taus,
        values=values,
        tau0=float(taus[0]),
        dtau=float(taus[-1] - taus[0]) + step,
        step=step,
        occupations=occ,
    )


def survival_probability(ens: QuenchEnsemble, taus) -> np.ndarray:
    """C_{n0}(tau): return probability to the initial state."""
    taus = _check_taus(taus)
    w = ens.coeffs**2
    phase = np.multiply.outer(taus, ens.final_energies)
    re = np.cos(phase) @ w
    im = np.sin(phase) @ w
    return re * re + im * im


def strength_function(ens: QuenchEnsemble, k: int, bins: int = 200) -> StrengthFunction:
    """Signed strength function of initial eigenstate k over rescaled final energies.

    Sticks O[k, m] c[m] sit at eps_m = (E_m - E_0)/(E_max - E_0); the binned
    weights are the stick sums per uniform bin on [0, 1].
    """
    if not 0 <= k < ens.dim:
        raise ValueError(f"k={k} out of range for dim {ens.dim}")
    if bins < 10:
        raise ValueError("need at least 10 bins")
    eps = rescale_energies(ens.final_energies)
    sticks = _amplitudes(ens)[k].copy()
    edges = np.linspace(0.0, 1.0, bins + 1)
    weights, _ = np.histogram(eps, bins=edges, weights=sticks)
    return StrengthFunction(
        k=k,
        bin_centers=0.5 * (edges[1:] + edges[:-1]),
        weights=weights,
        stick_energies=eps,
        stick_weights=sticks,
    )


def diagonal_ensemble_occupations(ens: QuenchEnsemble) -> np.ndarray:
    """Infinite-time average of C_k (nondegenerate final spectrum)."""
    return (ens.overlap**2) @ (ens.coeffs**2)


def equilibration_report(ens: QuenchEnsemble, series: EntropyTimeSeries) -> EquilibrationReport:
    if series.values.size == 0:
        raise ValueError("empty entropy series")
    cbar = diagonal_ensemble_occupations(ens)
    s_de = float(entr(cbar).sum())
    s_avg = float(np.mean(series.values))
    report = EquilibrationReport(s_avg, s_de, s_de - s_avg)
    if not report.within_bound:
        warnings.warn(
            f"Delta = {report.delta:.6f} exceeds 1 - gamma = {DELTA_BOUND:.6f}",
            RuntimeWarning,
            stacklevel=2,
        )
    return report
