import numpy as np
import pytest

from esqpt.model import critical_field
from esqpt.scan import (
    DEFAULT_LAMBDAS,
    LambdaScan,
    Window,
    extract_critical,
    lambda_scan,
    refine_extremum,
)

from conftest import cached_scan

SMALL = Window(50.0, 50.0, 0.05)


def synthetic_scan(lambdas, mu2, mu3=None, mu4=None, rmse=None, alpha=0.4):
    n = len(lambdas)
    fill = lambda v: np.asarray(v if v is not None else mu2, dtype=float)
    return LambdaScan(
        alpha=alpha, N=100, lambdas=np.asarray(lambdas, float), mean=np.zeros(n),
        mu2=np.asarray(mu2, float), mu3=fill(mu3 if mu3 is not None else -np.asarray(mu2)),
        mu4=fill(mu4), rmse=fill(rmse), fit_params=np.zeros((n, 4)),
        converged=np.ones(n, bool), degenerate=np.zeros(n, bool), window=SMALL, bins=100,
    )


def test_default_grid():
    assert DEFAULT_LAMBDAS.size == 39
    assert DEFAULT_LAMBDAS[0] == 0.1 and DEFAULT_LAMBDAS[-1] == 2.0


def test_window_grid():
    w = Window(10.0, 5.0, 0.05)
    t = w.taus()
    assert t.size == 100 and t[0] == 10.0 and t[-1] == pytest.approx(14.95)
    assert Window.long().taus().size == 200_000
    assert Window.desk().taus().size == 20_000
    with pytest.raises(ValueError):
        Window(-1.0, 5.0)


def test_small_scan_alignment_and_reproducibility():
    lams = [0.6, 1.0, 1.4]
    a = lambda_scan(0.4, 60, lams, SMALL, threads=1)
    b = lambda_scan(0.4, 60, lams, SMALL, threads=3)
    for name in ("mean", "mu2", "mu3", "mu4", "rmse", "fit_params"):
        assert getattr(a, name).shape[0] == 3
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert np.all(a.mu2 >= 0)
    assert a.ok and not a.failures


def test_zero_field_is_degenerate():
    s = lambda_scan(0.4, 40, [0.0], SMALL)
    assert s.degenerate.tolist() == [True]
    assert s.mu2[0] == 0.0 and np.isnan(s.rmse[0])
    assert abs(s.mean[0]) < 1e-12
    assert s.ok


def test_scan_validation():
    with pytest.raises(ValueError):
        lambda_scan(0.9, 40, [1.0], SMALL)
    with pytest.raises(ValueError):
        lambda_scan(0.4, 40, [1.0, 0.5], SMALL)
    with pytest.raises(ValueError):
        lambda_scan(0.4, 40, [1.0, 3.0], SMALL)
    with pytest.raises(ValueError):
        lambda_scan(0.4, 41, [1.0], SMALL)


def test_refine_extremum_parabola():
    x = np.array([0.9, 0.95, 1.0, 1.05])
    y = (x - 0.97) ** 2
    assert refine_extremum(x, y, 1) == pytest.approx(0.97, abs=1e-12)

def test_refine_extremum_stays_between_neighbours(rng):
    x = np.array([0.9, 0.95, 1.0])
    for _ in range(200):
        assert 0.9 <= refine_extremum(x, rng.normal(size=3), 1) <= 1.0


def test_extract_critical_synthetic():
    lams = np.round(np.arange(0.5, 1.55, 0.05), 10)
    cusp = np.abs(lams - 1.02)
    est = extract_critical(synthetic_scan(lams, cusp + 1.0, -cusp - 0.5, cusp + 2.0, cusp + 0.1))
    for value in est.estimates().values():
        assert 0.95 <= value <= 1.05
    assert est.lambda_analytic == 1.0
    assert est.unreliable == ()


def test_extract_critical_flags_boundary():
    lams = np.round(np.arange(0.5, 1.55, 0.05), 10)
    est = extract_critical(synthetic_scan(lams, lams.copy()))
    assert "mu2" in est.unreliable
    assert est.lambda_hat_mu2 == 0.5


def test_extract_critical_needs_bracket():
    with pytest.raises(ValueError, match="bracket"):
        extract_critical(synthetic_scan([0.8, 0.9, 1.1, 1.2], [1, 2, 3, 4]))


@pytest.mark.slow
def test_estimates_decrease_with_alpha():
    hats = []
    for alpha in (0.2, 0.3, 0.4, 0.5, 0.6):
        est = extract_critical(cached_scan(alpha, 1000, Window.desk()))
        hats.append(np.mean([est.lambda_hat_mu2, est.lambda_hat_mu3, est.lambda_hat_mu4]))
    assert np.all(np.diff(hats) < 0)


@pytest.mark.slow
def test_larger_system_not_further_from_analytic():
    small = extract_critical(cached_scan(0.4, 500, Window.desk())).estimates()
    large = extract_critical(cached_scan(0.4, 1000, Window.desk())).estimates()
    lam_c = critical_field(0.4)
    for key in small:
        assert abs(large[key] - lam_c) <= abs(small[key] - lam_c)


@pytest.mark.slow
def test_moment_curves_have_single_sharp_minimum():
    s = cached_scan(0.4, 1000, Window.desk())
    for curve in (s.mu2, s.mu4):
        i = int(np.argmin(curve))
        assert abs(s.lambdas[i] - 1.0) <= 0.1
        # the minimum is a cusp: both neighbours sit clearly above it
        assert min(curve[i - 1], curve[i + 1]) > curve[i]
