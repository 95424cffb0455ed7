"""Sweeps over the quench field and extremum-based critical-field estimates."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .betafit import fit_beta
from .dynamics import entropy_series, quench_ensemble, worker_count
from .eigen import SpectralDecomposition, eigh_tridiagonal
from .model import ModelParams, build_hamiltonian, critical_field
from .stats import empirical_distribution, moments

log = logging.getLogger(__name__)

DEFAULT_LAMBDAS = np.round(np.arange(0.1, 2.0 + 1e-9, 0.05), 10)
MIN_POINTS_PER_SIDE = 5


@dataclass(frozen=True)
class Window:
    """Sampling window [tau0, tau0 + dtau) with uniform step."""

    tau0: float
    dtau: float
    step: float = 0.05

    def __post_init__(self):
        if self.tau0 < 0 or self.dtau <= 0 or self.step <= 0:
            raise ValueError(f"invalid window {self}")

    def taus(self) -> np.ndarray:
        n = int(round(self.dtau / self.step))
        return self.tau0 + self.step * np.arange(n)

    @classmethod
    def long(cls) -> "Window":
        return cls(1e4, 1e4, 0.05)

    @classmethod
    def desk(cls) -> "Window":
        return cls(1e3, 1e3, 0.05)


PRESETS = {
    "paper": {"N": 1000, "window": Window.long()},
    "desk": {"N": 500, "window": Window.desk()},
}


@dataclass
class LambdaScan:
    alpha: float
    N: int
    lambdas: np.ndarray
    mean: np.ndarray
    mu2: np.ndarray
    mu3: np.ndarray
    mu4: np.ndarray
    rmse: np.ndarray
    fit_params: np.ndarray
    converged: np.ndarray
    degenerate: np.ndarray
    window: Window
    bins: int
    failures: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures and bool(np.all(self.converged | self.degenerate))


@dataclass(frozen=True)
class CriticalEstimate:
    alpha: float
    N: int
    lambda_hat_mu2: float
    lambda_hat_mu3: float
    lambda_hat_mu4: float
    lambda_hat_rmse: float
    lambda_analytic: float
    unreliable: tuple = ()

    def estimates(self) -> dict:
        return {
            "mu2": self.lambda_hat_mu2,
            "mu3": self.lambda_hat_mu3,
            "mu4": self.lambda_hat_mu4,
            "rmse": self.lambda_hat_rmse,
        }


@lru_cache(maxsize=8)
def _initial_decomposition(N: int, alpha: float) -> SpectralDecomposition:
    return eigh_tridiagonal(build_hamiltonian(ModelParams(N, alpha, 0.0)))


def entropy_samples(N: int, alpha: float, lam: float, window: Window, n0: int = 0, threads: int = 1):
    """Entropy series of one quench over a sampling window."""
    dec_i = _initial_decomposition(N, alpha)
    dec_f = eigh_tridiagonal(build_hamiltonian(ModelParams(N, alpha, lam)))
    ens = quench_ensemble(dec_i, dec_f, n0)
    return entropy_series(ens, window.taus(), threads=threads)


def _scan_point(N, alpha, lam, window, bins):
    series = entropy_samples(N, alpha, lam, window)
    dist = empirical_distribution(series, bins)
    if dist.degenerate:
        return dist.mean, (0.0, 0.0, 0.0), np.nan, (np.nan,) * 4, False, True
    m = moments(dist)
    fit = fit_beta(dist, s0=dist.sample_min, sm=dist.sample_max)
    return dist.mean, (m.mu2, m.mu3, m.mu4), fit.rmse, fit.params.as_tuple(), fit.converged, False


def lambda_scan(
    alpha: float,
    N: int,
    lambdas=DEFAULT_LAMBDAS,
    window: Window | None = None,
    bins: int = 100,
    threads: int | None = None,
) -> LambdaScan:
    """Run the full quench pipeline for every lambda and collect moment and RMSE curves.

    The beta fit at each point pins the support to the sample range.  A
    failing point is recorded in ``failures`` with NaN entries; the rest of
    the scan is kept.
    """
    if not 0.0 < alpha < 0.8:
        raise ValueError(f"alpha must lie in (0, 0.8), got {alpha}")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0:
        raise ValueError("lambda grid must be a non-empty 1-D array")
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    if lambdas[0] < 0 or lambdas[-1] > 2.5:
        raise ValueError("lambda grid must lie within [0, 2.5]")
    window = window or Window.desk()
    ModelParams(N, alpha)  # validate before any work
    _initial_decomposition(N, alpha)

    L = lambdas.size
    out = dict(
        mean=np.full(L, np.nan),
        mu=np.full((L, 3), np.nan),
        rmse=np.full(L, np.nan),
        fit=np.full((L, 4), np.nan),
        converged=np.zeros(L, bool),
        degenerate=np.zeros(L, bool),
    )
    failures = {}

    def job(i):
        try:
            return i, _scan_point(N, alpha, float(lambdas[i]), window, bins), None
        except Exception as exc:  # keep partial results
            return i, None, f"{type(exc).__name__}: {exc}"

    threads = min(threads or worker_count(), L)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(job, range(L)))
    else:
        results = [job(i) for i in range(L)]
    for i, res, err in results:
        if err is not None:
            failures[float(lambdas[i])] = err
            log.warning("lambda=%g failed: %s", lambdas[i], err)
            continue
        mean, mu, r, fit, conv, degen = res
        out["mean"][i] = mean
        out["mu"][i] = mu
        out["rmse"][i] = r
        out["fit"][i] = fit
        out["converged"][i] = conv
        out["degenerate"][i] = degen

    return LambdaScan(
        alpha=float(alpha),
        N=int(N),
        lambdas=lambdas,
        mean=out["mean"],
        mu2=out["mu"][:, 0],
        mu3=out["mu"][:, 1],
        mu4=out["mu"][:, 2],
        rmse=out["rmse"],
        fit_params=out["fit"],
        converged=out["converged"],
        degenerate=out["degenerate"],
        window=window,
        bins=bins,
        failures=failures,
    )


def refine_extremum(x: np.ndarray, y: np.ndarray, i: int) -> float:
    """Vertex of the parabola through points i-1, i, i+1, clamped to [x[i-1], x[i+1]]."""
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    f0, f1, f2 = y[i - 1], y[i], y[i + 1]
    num = (x1 - x0) ** 2 * (f1 - f2) - (x1 - x2) ** 2 * (f1 - f0)
    den = (x1 - x0) * (f1 - f2) - (x1 - x2) * (f1 - f0)
    if den == 0.0 or not np.isfinite(den):
        return float(x1)
    return float(np.clip(x1 - 0.5 * num / den, x0, x2))


def _locate(x: np.ndarray, y: np.ndarray, find_max: bool) -> tuple[float, bool]:
    valid = np.isfinite(y)
    if not valid.any():
        return float("nan"), False
    yy = np.where(valid, y, -np.inf if find_max else np.inf)
    i = int(np.argmax(yy) if find_max else np.argmin(yy))
    if i == 0 or i == x.size - 1 or not (valid[i - 1] and valid[i + 1]):
        return float(x[i]), False
    return refine_extremum(x, y, i), True


def extract_critical(scan: LambdaScan) -> CriticalEstimate:
    """Critical-field estimates from the extrema of the moment and RMSE curves.

    mu2, mu4 and R are minimized; mu3 (always negative) is maximized, i.e.
    its cusp closest to zero.  Extrema on the grid boundary are returned
    unrefined and listed in ``unreliable``.
    """
    lam_c = critical_field(scan.alpha)
    x = scan.lambdas
    below = int(np.sum(x < lam_c))
    above = int(np.sum(x > lam_c))
    if below < MIN_POINTS_PER_SIDE or above < MIN_POINTS_PER_SIDE:
        raise ValueError(
            f"scan must bracket lambda_c={lam_c} with >= {MIN_POINTS_PER_SIDE} points per side "
            f"(got {below} below, {above} above)"
        )
    hats = {}
    unreliable = []
    for name, curve, find_max in (
        ("mu2", scan.mu2, False),
        ("mu3", scan.mu3, True),
        ("mu4", scan.mu4, False),
        ("rmse", scan.rmse, False),
    ):
        hats[name], reliable = _locate(x, curve, find_max)
        if not reliable:
            unreliable.append(name)
    return CriticalEstimate(
        alpha=scan.alpha,
        N=scan.N,
        lambda_hat_mu2=hats["mu2"],
        lambda_hat_mu3=hats["mu3"],
        lambda_hat_mu4=hats["mu4"],
        lambda_hat_rmse=hats["rmse"],
        lambda_analytic=lam_c,
        unreliable=tuple(unreliable),
    )
