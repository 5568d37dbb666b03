from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from permshape import specfun
from permshape.errors import DomainError, PoleError, UnsupportedOrderError


@pytest.mark.parametrize("a", [0.3, 0.5, 1.0, 1.7, 2.0, 3.5, 10.0, 40.0])
@pytest.mark.parametrize("x", [0.0, 1e-3, 0.5, 1.0, 2.7, 5.0, 12.0, 45.0])
def test_upper_gamma_matches_regularised_reference(a, x):
    want = special.gammaincc(a, x) * special.gamma(a)
    assert specfun.upper_gamma(a, x) == pytest.approx(want, rel=1e-12, abs=1e-300)


def test_upper_gamma_closed_forms():
    assert specfun.upper_gamma(1.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
    assert specfun.upper_gamma(2.0, 1.0) == pytest.approx(2 * math.exp(-1.0), rel=1e-15)
    assert specfun.upper_gamma(0.5, 1.0) == pytest.approx(math.sqrt(math.pi) * math.erfc(1.0), rel=1e-13)
    assert specfun.upper_gamma(3.0, 0.0) == 2.0
    assert specfun.upper_gamma(3.0, math.inf) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 30.0), st.floats(0.0, 60.0))
def test_upper_gamma_recurrence(a, x):
    # Gamma(a+1, x) = a Gamma(a, x) + x^a e^-x
    lhs = specfun.upper_gamma(a + 1.0, x)
    rhs = a * specfun.upper_gamma(a, x) + math.exp(a * math.log(x) - x) if x > 0 else a * specfun.upper_gamma(a, x)
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-290)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(0.0, 30.0), st.floats(0.01, 5.0))
def test_upper_gamma_decreasing_in_x(a, x, dx):
    assert specfun.upper_gamma(a, x + dx) <= specfun.upper_gamma(a, x)


@pytest.mark.parametrize("a,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5)])
def test_upper_gamma_domain(a, x):
    with pytest.raises(DomainError):
        specfun.upper_gamma(a, x)


def test_log_gamma():
    assert specfun.log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-15)
    assert specfun.log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)
    with pytest.raises(DomainError):
        specfun.log_gamma(0.0)


def test_gamma_plus_one_derivatives():
    d = 0.7
    h = 1e-5
    fd = (specfun.gamma_plus_one(d + h) - specfun.gamma_plus_one(d - h)) / (2 * h)
    assert specfun.order_derivative(specfun.gamma_plus_one, 1, d) == pytest.approx(fd, rel=1e-8)
    fd2 = (specfun.gamma_plus_one(d + h) - 2 * specfun.gamma_plus_one(d) + specfun.gamma_plus_one(d - h)) / h**2
    assert specfun.order_derivative(specfun.gamma_plus_one, 2, d) == pytest.approx(fd2, rel=1e-4)
    # Gamma'(1) = -euler gamma
    assert specfun.order_derivative(specfun.gamma_plus_one, 1, 0.0) == pytest.approx(-np.euler_gamma, rel=1e-14)


def test_order_derivative_numeric_fallback():
    assert specfun.order_derivative(math.exp, 3, 0.4) == pytest.approx(math.exp(0.4), rel=1e-3)
    assert specfun.order_derivative(math.sin, 1, 0.3) == pytest.approx(math.cos(0.3), rel=1e-9)


def test_delta_operator_expansion():
    d, L = 1.0, 2.5
    g = specfun.gamma_plus_one
    assert specfun.delta_operator(0, L, g, d) == pytest.approx(1.0)
    want = specfun.order_derivative(g, 1, d) + L * g(d)
    assert specfun.delta_operator(1, L, g, d) == pytest.approx(want, rel=1e-14)
    want2 = specfun.order_derivative(g, 2, d) + 2 * L * specfun.order_derivative(g, 1, d) + L * L * g(d)
    assert specfun.delta_operator(2, L, g, d) == pytest.approx(want2, rel=1e-14)


def test_delta_operator_exponential_eigenfunction():
    # (d/dd + L)^j e^{c d} = (c + L)^j e^{c d}
    c, L, d = 0.4, 1.5, 0.2
    for j in range(5):
        got = specfun.delta_operator(j, L, lambda t: math.exp(c * t), d)
        assert got == pytest.approx((c + L) ** j * math.exp(c * d), rel=1e-3)


def test_delta_operator_order_limit():
    with pytest.raises(UnsupportedOrderError):
        specfun.delta_operator(7, 1.0, math.exp, 0.0)


def test_bernoulli_numbers():
    assert specfun.bernoulli_number(0) == 1
    assert specfun.bernoulli_number(1) == Fraction(-1, 2)
    assert specfun.bernoulli_number(2) == Fraction(1, 6)
    assert specfun.bernoulli_number(4) == Fraction(-1, 30)
    assert specfun.bernoulli_number(12) == Fraction(-691, 2730)
    assert specfun.bernoulli_number(20) == Fraction(-174611, 330)
    assert all(specfun.bernoulli_number(k) == 0 for k in range(3, 21, 2))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 20), st.floats(0.0, 1.0))
def test_bernoulli_reflection(k, y):
    a = specfun.bernoulli_poly(k, y)
    b = specfun.bernoulli_poly(k, 1.0 - y)
    assert a == pytest.approx((-1) ** k * b, rel=1e-9, abs=1e-9 * max(1.0, abs(float(specfun.bernoulli_number(k)))))


@pytest.mark.parametrize("k", range(1, 12))
def test_bernoulli_zero_mean_and_difference(k):
    from scipy.integrate import quad

    assert quad(lambda y: specfun.bernoulli_poly(k, y), 0, 1)[0] == pytest.approx(0.0, abs=1e-12)
    # B_k(1) - B_k(0) = 0 for k >= 2
    if k >= 2:
        assert specfun.bernoulli_poly(k, 1.0) == pytest.approx(specfun.bernoulli_poly(k, 0.0), abs=1e-12)


def test_bernoulli_domain():
    with pytest.raises(DomainError):
        specfun.bernoulli_poly(2, 1.5)
    with pytest.raises(DomainError):
        specfun.bernoulli_poly(21, 0.5)


@pytest.mark.parametrize("s", [-7.5, -3.5, -3.0, -2.0, -1.0, -0.5, 0.0, 0.25, 0.5, 0.9, 1.1, 1.5, 2.0, 3.0, 7.0, 30.0])
def test_zeta_against_reference(s):
    want = special.zetac(s) + 1.0
    assert specfun.zeta_real(s) == pytest.approx(want, rel=1e-12, abs=1e-15)


def test_zeta_closed_forms():
    assert specfun.zeta_real(2.0) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert specfun.zeta_real(-1.0) == pytest.approx(-1 / 12, rel=1e-13)
    assert specfun.zeta_real(0.0) == -0.5
    assert specfun.zeta_real(-2.0) == pytest.approx(0.0, abs=1e-15)


def test_zeta_pole():
    with pytest.raises(PoleError):
        specfun.zeta_real(1.0)
