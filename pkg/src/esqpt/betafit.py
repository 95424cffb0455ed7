"""Four-parameter beta distribution: density, CDF, CDF-RMSE and fitting.

The distribution lives on [s0, sm] with shape parameters (a, b)::

    pdf(x) = (x - s0)^(a-1) (sm - x)^(b-1) / ((sm - s0)^(a+b-1) B(a, b))

The CDF is the regularized incomplete beta function of the mapped variable
(x - s0)/(sm - s0), evaluated by its continued fraction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize
from scipy.special import gammaln, xlogy

from .stats import EmpiricalCDF, EmpiricalDistribution, cdf

CF_EPS = 1e-15
CF_MAX_ITER = 20000
_TINY = 1e-300
RMSE_NODES = 1025
FIT_TOL = 1e-6
FIT_MAX_ITER = 2000
MAX_RESTARTS = 8


@dataclass(frozen=True)
class BetaParams:
    a: float
    b: float
    s0: float
    sm: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"shape parameters must be positive, got a={self.a}, b={self.b}")
        if not self.sm > self.s0:
            raise ValueError(f"need sm > s0, got [{self.s0}, {self.sm}]")

    @property
    def width(self) -> float:
        return self.sm - self.s0

    def mean(self) -> float:
        return self.s0 + self.width * self.a / (self.a + self.b)

    def variance(self) -> float:
        ab = self.a + self.b
        return self.width**2 * self.a * self.b / (ab * ab * (ab + 1.0))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.s0, self.sm)


@dataclass(frozen=True)
class FitResult:
    """Outcome of :func:`fit_beta`.

    ``rmse`` is the CDF root-mean-square error over the fitted support
    [s0, sm]; ``objective`` is the same error measured over the sample range,
    which is what the optimizer minimizes.  The two coincide when the support
    is pinned to the sample range.  ``history`` records the best objective
    value after each accepted simplex step.
    """

    params: BetaParams
    rmse: float
    iterations: int
    converged: bool
    objective: float = float("nan")
    history: np.ndarray = field(default=None, repr=False)


def log_beta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(a + b)


def _betacf(a, b, x):
    """Continued fraction for I_x(a, b) (modified Lentz), vectorized over x."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h *= delta
        if np.all(np.abs(delta - 1.0) < CF_EPS):
            return h
    raise RuntimeError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def regularized_incomplete_beta(a: float, b: float, x):
    """I_x(a, b) for 0 <= x <= 1."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("x must lie in [0, 1]")
    out = np.empty_like(x)
    out[x == 0.0] = 0.0
    out[x == 1.0] = 1.0
    inner = (x > 0.0) & (x < 1.0)
    if np.any(inner):
        xi = x[inner]
        lnfront = a * np.log(xi) + b * np.log1p(-xi) - log_beta(a, b)
        direct = xi < (a + 1.0) / (a + b + 2.0)
        res = np.empty_like(xi)
        if np.any(direct):
            xd = xi[direct]
            res[direct] = np.exp(lnfront[direct]) * _betacf(a, b, xd) / a
        if np.any(~direct):
            xr = 1.0 - xi[~direct]
            res[~direct] = 1.0 - np.exp(lnfront[~direct]) * _betacf(b, a, xr) / b
        out[inner] = np.clip(res, 0.0, 1.0)
    return float(out[0]) if scalar else out


def _mapped(x, p: BetaParams):
    x = np.asarray(x, dtype=float)
    if np.any((x < p.s0) | (x > p.sm)):
        raise ValueError(f"x outside the support [{p.s0}, {p.sm}]")
    return x


def beta_pdf(x, p: BetaParams):
    x = _mapped(x, p)
    logpdf = (
        xlogy(p.a - 1.0, x - p.s0)
        + xlogy(p.b - 1.0, p.sm - x)
        - (p.a + p.b - 1.0) * np.log(p.width)
        - log_beta(p.a, p.b)
    )
    out = np.exp(logpdf)
    return out if out.ndim else float(out)


def beta_cdf(x, p: BetaParams):
    x = _mapped(x, p)
    u = np.clip((x - p.s0) / p.width, 0.0, 1.0)
    return regularized_incomplete_beta(p.a, p.b, u)


def _rms_over(F, p: BetaParams, lo: float, hi: float, nodes: int = RMSE_NODES) -> float:
    z = np.linspace(lo, hi, nodes)
    phi = np.zeros_like(z)
    inside = (z >= p.s0) & (z <= p.sm)
    phi[inside] = beta_cdf(z[inside], p)
    phi[z > p.sm] = 1.0
    diff2 = (F(z) - phi) ** 2
    return float(np.sqrt(trapezoid(diff2, z) / (hi - lo)))


def rmse(F, p: BetaParams, nodes: int = RMSE_NODES) -> float:
    """Root-mean-square CDF deviation over the beta support [s0, sm].

    ``F`` is any callable CDF (e.g. :class:`~esqpt.stats.EmpiricalCDF`).
    """
    if nodes < 512:
        raise ValueError("need at least 512 quadrature nodes")
    return _rms_over(F, p, p.s0, p.sm, nodes)


def _moment_shapes(mean: float, var: float, s0: float, sm: float) -> tuple[float, float]:
    w = sm - s0
    m = min(max((mean - s0) / w, 1e-6), 1 - 1e-6)
    v = max(var / (w * w), 1e-300)
    k = max(m * (1.0 - m) / v - 1.0, 1e-3)
    return m * k, (1.0 - m) * k


def fit_beta(
    dist: EmpiricalDistribution,
    s0: float | None = None,
    sm: float | None = None,
    max_iter: int = FIT_MAX_ITER,
    tol: float = FIT_TOL,
) -> FitResult:
    """Fit (a, b, s0, sm) by minimizing the CDF-RMSE against the empirical CDF.

    Pass ``s0`` and/or ``sm`` to pin the support; free bounds are constrained
    to enclose the samples (s0 <= sample_min, sm >= sample_max) through a
    penalty.  The objective is measured over the sample range so that
    widening the support cannot dilute it.  Nelder-Mead runs in
    (log a, log b, s0, sm) from a method-of-moments start and stops when the
    simplex diameter drops below ``tol`` or after ``max_iter`` iterations;
    in the latter case the best point found is returned with
    ``converged=False``.
    """
    if dist.degenerate:
        raise ValueError("cannot fit a degenerate (constant) distribution")
    lo, hi = dist.sample_min, dist.sample_max
    width = hi - lo
    if s0 is not None and s0 > lo:
        raise ValueError(f"pinned s0={s0} exceeds sample minimum {lo}")
    if sm is not None and sm < hi:
        raise ValueError(f"pinned sm={sm} below sample maximum {hi}")
    F = cdf(dist)

    s0_init = s0 if s0 is not None else lo - 0.02 * width
    sm_init = sm if sm is not None else hi + 0.02 * width
    a0, b0 = _moment_shapes(dist.mean, dist.variance, s0_init, sm_init)

    free_s0, free_sm = s0 is None, sm is None

    # free bounds are optimized in units of the sample width, offset from the sample range
    def unpack(x):
        i = 2
        p_s0, p_sm = s0, sm
        if free_s0:
            p_s0 = lo + x[i] * width
            i += 1
        if free_sm:
            p_sm = hi + x[i] * width
        return np.exp(x[0]), np.exp(x[1]), p_s0, p_sm

    def objective(x):
        a, b, p_s0, p_sm = unpack(x)
        violation = max(p_s0 - lo, 0.0) + max(hi - p_sm, 0.0)
        if violation > 0.0 or not (np.isfinite(a) and np.isfinite(b)) or a <= 0 or b <= 0:
            return 1.0 + violation / width
        return _rms_over(F, BetaParams(a, b, p_s0, p_sm), lo, hi)

    x = [np.log(a0), np.log(b0)]
    if free_s0:
        x.append((s0_init - lo) / width)
    if free_sm:
        x.append((sm_init - hi) / width)
    x = np.array(x)
    step = np.full(x.size, 0.1)
    step[2:] = 0.02

    history = []

    def record(intermediate_result):
        history.append(float(intermediate_result.fun))

    iterations = 0
    best = np.inf
    converged = False
    # a collapsed simplex can stall in a curved valley: restart from the best
    # vertex until a fresh simplex no longer improves the objective
    for _ in range(MAX_RESTARTS):
        simplex = np.vstack([x] + [x + np.eye(x.size)[i] * step[i] for i in range(x.size)])
        res = minimize(
            objective,
            x,
            method="Nelder-Mead",
            callback=record,
            options=dict(
                initial_simplex=simplex,
                xatol=tol,
                fatol=np.inf,
                maxiter=max(max_iter - iterations, 1),
                maxfev=20 * max_iter,
            ),
        )
        iterations += int(res.nit)
        converged = bool(res.success)
        gain = best - res.fun
        x, best = res.x, float(res.fun)
        if not converged or iterations >= max_iter or gain <= 1e-12 * best:
            break
        step = step / 10.0

    a, b, p_s0, p_sm = unpack(x)
    params = BetaParams(float(a), float(b), float(p_s0), float(p_sm))
    return FitResult(
        params=params,
        rmse=rmse(F, params),
        iterations=iterations,
        converged=converged,
        objective=best,
        history=np.array(history),
    )
