"""Long-window statistics of the diagonal entropy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_SAMPLES = 100
# spreads below this (relative to max(1, |mean|)) count as a constant series
DEGENERATE_SPREAD = 1e-12


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Normalized histogram of a sample set plus raw-sample summary statistics.

    Moments are taken from ``samples``, never from the binned density.  A
    constant sample set is flagged ``degenerate`` and gets a single unit-width
    bin centred on the constant so the density still carries unit mass.
    """

    edges: np.ndarray
    density: np.ndarray
    samples: np.ndarray
    sample_min: float
    sample_max: float
    mean: float
    variance: float
    degenerate: bool = False

    @property
    def sample_count(self) -> int:
        return self.samples.shape[0]

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])


@dataclass(frozen=True)
class MomentSet:
    mu2: float
    mu3: float
    mu4: float


class EmpiricalCDF:
    """Sample CDF interpolated linearly between the sorted distinct samples.

    Knot i sits at the i-th distinct value with height (count below or at it
    minus the count at the minimum) / (n minus that count), so F(min) = 0 and
    F(max) = 1.  Evaluation outside the knots clamps to 0 or 1.
    """

    def __init__(self, samples):
        xs, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        n = counts.sum()
        if xs.size == 1:
            self.knots = np.array([xs[0], xs[0]])
            self.values = np.array([0.0, 1.0])
        else:
            self.knots = xs
            self.values = (np.cumsum(counts) - counts[0]) / (n - counts[0])

    def __call__(self, x):
        out = np.interp(x, self.knots, self.values, left=0.0, right=1.0)
        return out if np.ndim(out) else float(out)


def _samples(series_or_samples) -> np.ndarray:
    values = getattr(series_or_samples, "values", series_or_samples)
    return np.asarray(values, dtype=float).ravel()


def _central(samples: np.ndarray, mean: float, n: int) -> float:
    return float(np.mean((samples - mean) ** n))


def empirical_distribution(series, bins: int = 100) -> EmpiricalDistribution:
    """Histogram density of the entropy samples over [min, max]."""
    s = _samples(series)
    if s.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {s.size}")
    if bins < 2:
        raise ValueError("need at least 2 bins")
    if not np.all(np.isfinite(s)):
        raise ValueError("samples must be finite")
    lo, hi = float(s.min()), float(s.max())
    mean = float(np.mean(s))
    variance = _central(s, mean, 2)
    if hi - lo <= DEGENERATE_SPREAD * max(1.0, abs(mean)):
        edges = np.array([mean - 0.5, mean + 0.5])
        return EmpiricalDistribution(edges, np.ones(1), s, lo, hi, mean, 0.0, True)
    counts, edges = np.histogram(s, bins=bins, range=(lo, hi))
    density = counts / (s.size * np.diff(edges))
    return EmpiricalDistribution(edges, density, s, lo, hi, mean, variance)


def cdf(dist: EmpiricalDistribution) -> EmpiricalCDF:
    return EmpiricalCDF(dist.samples)


def central_moment(dist: EmpiricalDistribution, n: int) -> float:
    if n not in (1, 2, 3, 4):
        raise ValueError(f"unsupported moment order {n}")
    if n == 1:
        return float(np.mean(dist.samples - dist.mean))
    if n == 2:
        return dist.variance
    return _central(dist.samples, dist.mean, n)


def moments(dist: EmpiricalDistribution) -> MomentSet:
    return MomentSet(*(central_moment(dist, n) for n in (2, 3, 4)))


def standardize(series_or_samples) -> np.ndarray:
    """Shift to zero mean and scale to unit (population) variance."""
    s = _samples(series_or_samples)
    mean = np.mean(s)
    var = np.mean((s - mean) ** 2)
    if not var > 0.0:
        raise ValueError("cannot standardize samples with zero variance")
    out = (s - mean) / np.sqrt(var)
    # second pass removes the O(eps) residual mean left by rounding
    return out - np.mean(out)


def cdf_sup_distance(a: EmpiricalCDF, b: EmpiricalCDF) -> float:
    """Exact sup-norm distance of two piecewise-linear CDFs (attained at a knot)."""
    x = np.union1d(a.knots, b.knots)
    return float(np.max(np.abs(a(x) - b(x))))
