import numpy as np
import pytest

import sparsevar.tuning as tuning
from conftest import ALL_KINDS, random_problem
from sparsevar.benchmarks import naive_benchmarks
from sparsevar.core import LagRegression, ModelSpec, PenaltyStructure, SeriesMatrix
from sparsevar.exceptions import InsufficientData, UsageError
from sparsevar.penalties import build_partition
from sparsevar.simulate import simulate_var
from sparsevar.solvers import SolverOptions, fit_penalized
from sparsevar.tuning import (
    bisect_lambda_max, estimate_fixed, lambda_grid, one_se_select, origin_forecasts,
    resolve_threads, rolling_cv, theoretical_lambda_max,
)


def _single_predictor(y=(1.0, -1.0)):
    z = np.array([[1.0, 1.0], [1.0, -1.0]])
    return LagRegression(np.array([y]), z, 1, 1, 0, 1, 0)


BASIC_1 = build_partition(PenaltyStructure("Basic"), 1, 0, 1, 0)


def test_theoretical_examples():
    assert theoretical_lambda_max(_single_predictor((0.0, 0.0)), BASIC_1) == 0.0
    # the gradient of the raw sum of squares at zero is 2 <z, y> = 4
    assert theoretical_lambda_max(_single_predictor(), BASIC_1) == pytest.approx(4.0)


def test_bisection_on_tight_coarse_bound():
    reg = _single_predictor()
    lam = bisect_lambda_max(reg, BASIC_1, eps=1e-6)
    assert abs(lam - 4.0) <= 1e-6


def test_bisection_iteration_count(monkeypatch):
    reg, part = random_problem("Lag", 0)
    calls = []
    real = tuning.fit_penalized

    def counting(*a, **kw):
        calls.append(1)
        return real(*a, **kw)

    monkeypatch.setattr(tuning, "fit_penalized", counting)
    coarse = 2.0 * theoretical_lambda_max(reg, part)
    bisect_lambda_max(reg, part, coarse=coarse, eps=1e-3 * coarse)
    n1 = len(calls)
    calls.clear()
    bisect_lambda_max(reg, part, coarse=coarse, eps=0.5e-3 * coarse)
    assert len(calls) - n1 <= 1


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_bisection_validity(kind):
    reg, part = random_problem(kind, 3)
    lam = bisect_lambda_max(reg, part)
    eps = 1e-5 * theoretical_lambda_max(reg, part)
    assert not np.any(fit_penalized(reg, part, lam).b[:, 1:])
    assert np.any(fit_penalized(reg, part, lam - 2 * eps).b[:, 1:])


def test_lambda_grid_invariants():
    g = lambda_grid(10.0, 25.0, 10)
    assert g.values[0] == 10.0
    assert g.values[-1] == pytest.approx(10.0 / 25.0)
    assert np.all(np.diff(g.values) < 0)
    np.testing.assert_allclose(np.diff(np.log(g.values)), np.log(1 / 25.0) / 9)


def test_one_se_examples():
    assert one_se_select([1.0, 1.0, 1.0], [0.5, 0.5, 0.5]) == 0
    assert one_se_select([3.0, 2.0, 1.0, 2.0], np.zeros(4)) == 2
    assert one_se_select([5.0, 3.1, 3.0, 3.4], [0.0, 0.0, 0.2, 0.0]) == 1


def test_zero_data():
    data = SeriesMatrix(np.zeros((30, 2)), 2)
    rep = rolling_cv(data, ModelSpec(p=1, gran=(10, 3), ic=False), threads=1)
    assert not np.any(rep.per_lambda_msfe)
    assert rep.oos_msfe == 0.0


def test_full_shrinkage_equals_mean_benchmark():
    data = simulate_var(0.4 * np.eye(2), np.eye(2), 60, seed=1)
    spec = ModelSpec(p=2, own_lambdas=True, lambdas=(1e8,), ic=False)
    rep = rolling_cv(data, spec, threads=1)
    spec = rep.spec
    naive = naive_benchmarks(data, (spec.t1, spec.t2), 1, trim=2)
    assert rep.per_lambda_msfe[0, 0] == pytest.approx(naive["mean_msfe"], abs=1e-10)
    assert rep.benchmark_msfe["mean"] == pytest.approx(rep.oos_msfe, abs=1e-10)


def test_low_noise_var1_beats_random_walk():
    phi = np.array([[0.5, 0.2], [0.0, 0.3]])
    wins = 0
    for seed in range(20):
        data = simulate_var(phi, 0.01 * np.eye(2), 90, seed=seed)
        rep = rolling_cv(data, ModelSpec(p=1, gran=(50, 6), ic=False), threads=1)
        wins += rep.oos_msfe <= rep.benchmark_msfe["rw"]
    assert wins >= 18


def test_report_and_estimate_fixed_agree():
    data = simulate_var(0.5 * np.eye(3), np.eye(3), 60, seed=2)
    spec = ModelSpec(p=2, struct="Lag", gran=(20, 5))
    rep = rolling_cv(data, spec, threads=1)
    assert rep.optimal_index == int(np.argmin(rep.per_lambda_msfe[rep.optimal_variant]))
    again = estimate_fixed(data, ModelSpec(p=2, struct="Lag", own_lambdas=True,
                                           lambdas=(rep.optimal_lambda,)))[0]
    np.testing.assert_allclose(again.b, rep.final_coefficients.b, rtol=0, atol=1e-8)
    assert set(rep.benchmark_msfe) == {"mean", "rw", "aic", "bic"}


def test_estimate_fixed_slices():
    data = simulate_var(0.5 * np.eye(2), np.eye(2), 50, seed=3)
    huge, small = 1e8, 1e-2
    fits = estimate_fixed(data, ModelSpec(p=1, own_lambdas=True, lambdas=(huge, small)))
    assert [f.lam for f in fits] == [huge, small]
    assert not np.any(fits[0].b[:, 1:])
    assert np.any(fits[1].b[:, 1:])
    with pytest.raises(UsageError):
        estimate_fixed(data, ModelSpec(p=1))


def test_determinism_and_threads():
    data = simulate_var(0.4 * np.eye(3), np.eye(3), 60, seed=4)
    spec = ModelSpec(p=2, struct="SparseLag", alpha=(0.2, 0.6), gran=(10, 4), ic=False)
    a = rolling_cv(data, spec, threads=1)
    b = rolling_cv(data, spec, threads=4)
    c = rolling_cv(data, spec, threads=4)
    for other in (b, c):
        np.testing.assert_array_equal(a.per_lambda_msfe, other.per_lambda_msfe)
        np.testing.assert_array_equal(a.final_coefficients.b, other.final_coefficients.b)
        assert a.oos_msfe == other.oos_msfe


def test_iterated_and_direct_agree_at_h1():
    data = simulate_var(0.4 * np.eye(2), np.eye(2), 50, seed=5)
    a = rolling_cv(data, ModelSpec(p=1, gran=(10, 3), ic=False), threads=1)
    b = rolling_cv(data, ModelSpec(p=1, gran=(10, 3), ic=False, recursive=True), threads=1)
    np.testing.assert_array_equal(a.per_lambda_msfe, b.per_lambda_msfe)
    assert a.oos_msfe == b.oos_msfe


def test_direct_horizon_hygiene():
    values = simulate_var(0.5 * np.eye(2), np.eye(2), 40, seed=6).values
    spec = ModelSpec(p=2, h=3).resolve(SeriesMatrix(values, 2))
    part = build_partition(PenaltyStructure("Basic"), 2, 0, 2, 0)
    targets = list(range(20, 30))
    base = origin_forecasts(values, 2, spec, part, 0.5, targets, SolverOptions())
    for n, tau in enumerate(targets):
        bad = values.copy()
        bad[tau - spec.h + 1 :] = np.nan
        out = origin_forecasts(bad, 2, spec, part, 0.5, targets[: n + 1], SolverOptions())
        np.testing.assert_array_equal(out[n], base[n])


def test_threads_env(monkeypatch):
    monkeypatch.setenv("SPARSEVAR_THREADS", "3")
    assert resolve_threads(8) == 3
    monkeypatch.delenv("SPARSEVAR_THREADS")
    assert resolve_threads(2) == 2


def test_window_errors():
    data = SeriesMatrix(np.random.default_rng(0).standard_normal((30, 2)), 2)
    with pytest.raises(InsufficientData):
        rolling_cv(data, ModelSpec(p=1, h=5, t1=10, t2=28), threads=1)
