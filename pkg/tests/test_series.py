from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permshape import series
from permshape.errors import DegenerateModelError, DomainError, SeriesOverflowError, UndefinedMeasureError
from permshape.series import PowerSeries, exp_series
from permshape.weights import WeightModel

from conftest import ORACLE_MODELS, profile_of

TOL = 1e-12


def test_exp_series_examples():
    N = 12
    F = exp_series(PowerSeries(np.zeros(N + 1)))
    assert F.coeffs.tolist() == [1.0] + [0.0] * N
    g = np.zeros(N + 1)
    g[1] = 1.0
    F = exp_series(PowerSeries(g))
    assert np.allclose(F.coeffs, [1 / math.factorial(k) for k in range(N + 1)], rtol=1e-15, atol=0)
    log = np.array([0.0] + [1.0 / k for k in range(1, N + 1)])
    assert np.allclose(exp_series(PowerSeries(log)).coeffs, 1.0, rtol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=2, max_size=30))
def test_exp_inverse(coeffs):
    G = PowerSeries(np.array(coeffs))
    prod = exp_series(G) * exp_series(-G)
    want = np.zeros(len(coeffs))
    want[0] = 1.0
    scale = np.max(np.abs(exp_series(G).coeffs)) * np.max(np.abs(exp_series(-G).coeffs))
    assert np.allclose(prod.coeffs, want, atol=1e-10 * max(1.0, scale))


def test_exp_series_overflow():
    with pytest.raises(SeriesOverflowError):
        exp_series(PowerSeries(np.array([800.0, 1.0])))


def test_power_series_scale_mismatch():
    with pytest.raises(DomainError):
        PowerSeries(np.ones(3), 0.5) + PowerSeries(np.ones(3), 1.0)
    with pytest.raises(DomainError):
        PowerSeries(np.ones(3), 1.5)


@pytest.mark.parametrize("theta", [1.0, 2.0, 3.5])
def test_constant_model_binomial(theta):
    H = series.partition_numbers(WeightModel.constant(theta), 60)
    for n in range(61):
        want = math.exp(math.lgamma(theta + n) - math.lgamma(theta) - math.lgamma(n + 1))
        assert H.coefficient(n) == pytest.approx(want, rel=1e-11)
    assert series.partition_numbers(WeightModel.constant(2.0), 3).coefficient(3) == pytest.approx(4.0)


def test_partition_numbers_examples():
    H = series.partition_numbers(WeightModel.polylog(1.0), 2)
    assert H.coefficient(0) == 1.0
    assert H.coefficient(2) == pytest.approx(1.5, rel=1e-14)
    assert series.partition_numbers(WeightModel.constant(1.0), 40).coefficient(40) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("model", [WeightModel.polylog(1.0), WeightModel.polylog(2.0, 1), WeightModel.polylog(0.5),
                                   WeightModel.constant(2.0)])
def test_h_recurrence(model):
    # n h_n = sum_k theta_k h_{n-k}, checked on the scaled coefficients
    N = 3000
    H = series.partition_numbers(model, N)
    r0 = H.scale
    k = np.arange(1, N + 1)
    th = model.thetas(k) * r0**k
    for n in (1, 2, 10, 500, 2999, 3000):
        rhs = np.dot(th[:n], H.coeffs[n - 1 :: -1])
        assert n * H.coeffs[n] == pytest.approx(rhs, rel=1e-10)


def test_large_n_stays_finite():
    H = series.partition_numbers(WeightModel.polylog(1.0), 20_000)
    assert np.all(np.isfinite(H.coeffs)) and H.coeffs[-1] > 0


def test_degenerate_and_undefined():
    with pytest.raises(DegenerateModelError):
        series.partition_numbers(WeightModel.custom([0.0, 0.0]), 2)
    with pytest.raises(UndefinedMeasureError):
        series.laplace_wn(WeightModel.polylog(1.0, 1), 1, 1, 0.5)
    with pytest.raises(UndefinedMeasureError):
        series.exact_moments(WeightModel.custom([0.0, 1.0]), 3, [1])


def test_laplace_examples():
    m = WeightModel.polylog(1.0)
    assert series.laplace_wn(m, 7, 2, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert series.laplace_wn(m, 1, 1, 0.8) == pytest.approx(math.exp(-0.8), rel=1e-14)
    s = 0.6
    assert series.laplace_wn(m, 2, 2, s) == pytest.approx((1 + 2 * math.exp(-s)) / 3, rel=1e-14)
    with pytest.raises(DomainError):
        series.laplace_wn(m, 4, 2, -0.1)


@pytest.mark.parametrize("model", [WeightModel.polylog(1.0), WeightModel.constant(0.7)])
def test_laplace_monotone_log_convex(model):
    s = [0.0, 0.5, 1.0, 2.0]
    L = np.array([series.laplace_wn(model, 300, 10, v) for v in s])
    assert np.all(np.diff(L) <= 0)
    logL = np.log(L)
    slopes = np.diff(logL) / np.diff(s)
    assert np.all(np.diff(slopes) >= -1e-12)


def test_moments_examples():
    M = series.exact_moments(WeightModel.polylog(1.0), 2, [2])
    assert M.mean[0] == pytest.approx(2 / 3, rel=1e-14)
    assert M.cov[0, 0] == pytest.approx(2 / 9, rel=1e-13)
    M = series.exact_moments(WeightModel.constant(1.0), 3, [1])
    assert M.mean[0] == pytest.approx(11 / 6, rel=1e-14)
    M = series.exact_moments(WeightModel.polylog(1.0), 5, [6])
    assert M.mean[0] == 0.0 and M.cov[0, 0] == 0.0
    mean, cov = series.exact_moments(WeightModel.polylog(1.0), 5, [2])
    assert mean.shape == (1,) and cov.shape == (1, 1)


def test_moments_bad_cuts():
    with pytest.raises(DomainError):
        series.exact_moments(WeightModel.polylog(1.0), 5, [3, 2])
    with pytest.raises(DomainError):
        series.exact_moments(WeightModel.polylog(1.0), 5, [0])


def test_covariance_psd_and_symmetric():
    model = WeightModel.polylog(1.0)
    M = series.exact_moments(model, 800, [5, 10, 20, 28, 40, 60])
    assert np.array_equal(M.cov, M.cov.T)
    eig = np.linalg.eigvalsh(M.cov)
    assert eig.min() >= -1e-9 * np.trace(M.cov)


@pytest.mark.parametrize("model", ORACLE_MODELS, ids=lambda m: m.describe())
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_against_enumeration(model, n, enumerated):
    lengths, P, h = enumerated(model, n)
    if P is None:
        with pytest.raises(UndefinedMeasureError):
            series.laplace_wn(model, n, 1, 0.0)
        return
    assert series.partition_numbers(model, n).coefficient(n) == pytest.approx(h, rel=TOL)
    cuts = list(range(1, n + 2))
    W = np.array([[profile_of(ls, c) for c in cuts] for ls in lengths], dtype=float)
    for j, cut in enumerate(cuts):
        for s in (0.0, 0.4, 1.3):
            want = P @ np.exp(-s * W[:, j])
            assert abs(series.laplace_wn(model, n, cut, s) - want) <= TOL
    M = series.exact_moments(model, n, cuts)
    mu = P @ W
    cov = (W - mu).T @ ((W - mu) * P[:, None])
    assert np.max(np.abs(M.mean - mu)) <= TOL
    assert np.max(np.abs(M.cov - cov)) <= TOL
    for x1 in range(1, n + 1):
        for x in range(x1, n + 2):
            for x2 in range(x, n + 2):
                Wa = W[:, x1 - 1] - W[:, x - 1]
                Wb = W[:, x - 1] - W[:, x2 - 1]
                want = P @ ((Wa - P @ Wa) ** 2 * (Wb - P @ Wb) ** 2)
                got = series.fourth_mixed_moment(model, n, x1, x, x2)
                assert abs(got - want) <= TOL * max(1.0, want)
                assert got >= -TOL


def test_fourth_mixed_examples(enumerated):
    assert series.fourth_mixed_moment(WeightModel.polylog(1.0), 10, 3, 3, 6) == 0.0
    with pytest.raises(DomainError):
        series.fourth_mixed_moment(WeightModel.polylog(1.0), 10, 4, 3, 6)


def test_cumulants_and_pmf(enumerated):
    model = WeightModel.polylog(1.0)
    lengths, P, _ = enumerated(model, 6)
    W = np.array([profile_of(ls, 2) for ls in lengths], dtype=float)
    mu = P @ W
    c = W - mu
    want = [mu, P @ c**2, P @ c**3, P @ c**4 - 3 * (P @ c**2) ** 2]
    assert np.allclose(series.exact_cumulants(model, 6, 2, 4), want, atol=1e-12)
    pmf = series.exact_pmf(model, 6, 2, 4)
    assert np.allclose(pmf, [P[W == k].sum() for k in range(5)], atol=1e-13)
    fact = series.exact_factorial_moments(model, 6, 2, 3)
    assert np.allclose(fact, [P @ W, P @ (W * (W - 1)), P @ (W * (W - 1) * (W - 2))], atol=1e-12)


def test_h_table_cache(tmp_path):
    model = WeightModel.polylog(1.5)
    cache = series.HTableCache(tmp_path)
    first = cache.get(model, 300)
    assert cache.path_for(model, 300).exists()
    second = cache.get(model, 300)
    assert np.array_equal(first.coeffs, second.coeffs) and first.scale == second.scale
    with pytest.raises(DomainError):
        series.load_h_table(cache.path_for(model, 300), WeightModel.polylog(1.0))
    with pytest.raises(DomainError):
        series.load_h_table(cache.path_for(model, 300), model, 200)
    p = cache.path_for(model, 300)
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(DomainError):
        series.load_h_table(p, model)
