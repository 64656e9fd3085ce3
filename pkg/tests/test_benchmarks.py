import numpy as np
import pytest

from sparsevar.benchmarks import (
    information_criterion, naive_benchmarks, select_order_ic, varx_fit_qr, varx_forecast_eval,
)
from sparsevar.core import LagRegression, SeriesMatrix, lag_regression
from sparsevar.exceptions import RankDeficient, RankDeficientWarning, UsageError
from sparsevar.simulate import simulate_var


def test_noiseless_recovery():
    y = 5.0 * 0.5 ** np.arange(40)
    fit = varx_fit_qr(lag_regression(y[:, None], 1, 1))
    assert fit.b_hat[0, 1] == pytest.approx(0.5, abs=1e-10)
    assert abs(fit.b_hat[0, 0]) < 1e-10
    assert fit.sigma_u_hat[0, 0] < 1e-12 * y.var()


def test_intercept_only_model():
    x = np.random.default_rng(0).standard_normal((25, 2))
    fit = varx_fit_qr(lag_regression(x, 2, 0))
    np.testing.assert_allclose(fit.b_hat[:, 0], x.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(fit.sigma_u_hat, np.cov(x.T, bias=True), atol=1e-12)


def test_qr_identities():
    rng = np.random.default_rng(1)
    reg = lag_regression(rng.standard_normal((60, 4)), 3, 2, 1)
    fit = varx_fit_qr(reg)
    resid = reg.y - fit.b_hat @ reg.z
    scale = np.abs(reg.z).max() * np.abs(reg.y).max() * reg.teff
    assert np.max(np.abs(reg.z @ resid.T)) <= 1e-8 * scale
    np.testing.assert_allclose(fit.sigma_u_hat, resid @ resid.T / reg.teff, atol=1e-10)
    np.testing.assert_allclose(fit.sigma_u_hat, fit.sigma_u_hat.T, atol=0)


def test_rank_deficiency():
    rng = np.random.default_rng(2)
    z = rng.standard_normal((3, 30))
    z[0] = 1.0
    z[2] = z[1]
    reg = LagRegression(y=rng.standard_normal((1, 30)), z=z, offset=0, k=1, m=0, p=2, s=0)
    with pytest.warns(RankDeficientWarning):
        fit = varx_fit_qr(reg)
    assert fit.rank_deficient
    with pytest.raises(RankDeficient):
        varx_fit_qr(reg, strict=True)


def test_aic_term_example():
    assert information_criterion(np.eye(2), 2, 3, 100, "AIC") == pytest.approx(0.12)
    assert information_criterion(np.eye(2), 2, 3, 100, "BIC") == pytest.approx(6 * np.log(100) / 100)


def test_ic_invariant_to_series_order():
    data = simulate_var(0.3 * np.eye(3), np.eye(3), 200, seed=4)
    perm = [2, 0, 1]
    _, _, _, a = select_order_ic(data, 3)
    _, _, _, b = select_order_ic(SeriesMatrix(data.values[:, perm], 3), 3)
    np.testing.assert_allclose(a, b, rtol=1e-10)


def test_white_noise_selects_zero():
    hits = 0
    for seed in range(20):
        data = simulate_var(np.zeros((3, 3)), np.eye(3), 300, seed=seed)
        hits += select_order_ic(data, 4)[0] == 0
    assert hits >= 18


def test_select_validation():
    data = SeriesMatrix(np.random.default_rng(0).standard_normal((30, 2)), 2)
    with pytest.raises(UsageError):
        select_order_ic(data, 2, criterion="HQ")


def test_forecast_eval_zero_data_and_mean_equivalence():
    zero = SeriesMatrix(np.zeros((40, 2)), 2)
    assert not np.any(varx_forecast_eval(zero, 2, 0, (30, 40)))
    data = SeriesMatrix(np.random.default_rng(3).standard_normal((50, 2)), 2)
    errs = varx_forecast_eval(data, 0, 0, (30, 50))
    naive = naive_benchmarks(data, (30, 50))
    np.testing.assert_allclose(errs, naive["mean_errors"], rtol=1e-10)


def test_varx_forecast_eval_direct():
    rng = np.random.default_rng(5)
    data = SeriesMatrix(rng.standard_normal((60, 3)), 2, 1)
    errs = varx_forecast_eval(data, 2, 1, (40, 60), "AIC", h=2)
    assert errs.shape == (20,) and np.all(np.isfinite(errs))


def test_bic_parsimony_on_white_noise():
    wins = 0
    for seed in range(20):
        data = simulate_var(np.zeros((2, 2)), np.eye(2), 120, seed=100 + seed)
        aic = varx_forecast_eval(data, 4, 0, (80, 120), "AIC").mean()
        bic = varx_forecast_eval(data, 4, 0, (80, 120), "BIC").mean()
        wins += bic <= aic
    assert wins > 10


def test_naive_examples():
    const = SeriesMatrix(np.full((30, 2), 3.0), 2)
    out = naive_benchmarks(const, (20, 30))
    assert out["mean_msfe"] == 0.0 and out["rw_msfe"] == 0.0
    rw_wins = mean_wins = 0
    for seed in range(20):
        noise = simulate_var(np.zeros((2, 2)), np.eye(2), 400, seed=seed)
        walk = SeriesMatrix(np.cumsum(noise.values, axis=0), 2)
        a = naive_benchmarks(walk, (300, 400))
        b = naive_benchmarks(noise, (300, 400))
        rw_wins += a["rw_msfe"] < a["mean_msfe"]
        mean_wins += b["mean_msfe"] < b["rw_msfe"]
    assert rw_wins >= 18 and mean_wins >= 18


def test_naive_trim_and_window():
    x = SeriesMatrix(np.arange(10.0)[:, None], 1)
    out = naive_benchmarks(x, (8, 10), trim=2)
    # target 8 averages rows 2..7 = 4.5, target 9 averages rows 2..8 = 5
    np.testing.assert_allclose(out["mean_errors"], [3.5**2, 4.0**2])
    np.testing.assert_allclose(out["rw_errors"], [1.0, 1.0])
    with pytest.raises(UsageError):
        naive_benchmarks(x, (5, 11))
