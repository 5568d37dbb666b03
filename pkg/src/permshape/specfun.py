"""Real special functions: gamma family, order derivatives, zeta, Bernoulli polynomials."""
from __future__ import annotations

import math
import sys
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from scipy import special

from .errors import DomainError, PoleError, UnsupportedOrderError

_EPS = sys.float_info.epsilon
_TINY = sys.float_info.min / _EPS

MAX_DELTA_ORDER = 6
MAX_BERNOULLI_ORDER = 20


def log_gamma(a: float) -> float:
    """ln Γ(a) for a > 0."""
    if not a > 0:
        raise DomainError(f"log_gamma requires a > 0, got {a!r}")
    return math.lgamma(a)


def _lower_series(a: float, x: float, max_iter: int) -> float:
    # sum_{n>=0} x^n / (a (a+1) ... (a+n)); converges fast for x < a + 1
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(max_iter):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            return total
    raise DomainError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _upper_continued_fraction(a: float, x: float, max_iter: int) -> float:
    # modified Lentz evaluation of the Legendre continued fraction
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise DomainError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def upper_gamma(a: float, x: float) -> float:
    """Upper incomplete gamma Γ(a, x) = ∫_x^∞ s^(a-1) e^(-s) ds (not regularised).

    Uses the power series of the lower function for ``x < a + 1`` and a
    continued fraction otherwise.
    """
    if not a > 0:
        raise DomainError(f"upper_gamma requires a > 0, got a={a!r}")
    if not x >= 0:
        raise DomainError(f"upper_gamma requires x >= 0, got x={x!r}")
    if math.isinf(x):
        return 0.0
    full = math.gamma(a) if a < 171.0 else math.inf
    if x == 0.0:
        return full
    max_iter = 1000 + int(10 * math.sqrt(a) + a)
    prefactor = math.exp(-x + a * math.log(x))
    if x < a + 1.0:
        return full - prefactor * _lower_series(a, x, max_iter)
    return prefactor * _upper_continued_fraction(a, x, max_iter)


def gamma_plus_one(delta: float) -> float:
    """Γ(δ + 1); carries closed-form first and second order derivatives."""
    return math.gamma(delta + 1.0)


def _gamma_plus_one_d1(delta: float) -> float:
    return math.gamma(delta + 1.0) * special.digamma(delta + 1.0)


def _gamma_plus_one_d2(delta: float) -> float:
    psi = special.digamma(delta + 1.0)
    return math.gamma(delta + 1.0) * (psi * psi + special.polygamma(1, delta + 1.0))


gamma_plus_one.derivatives = (_gamma_plus_one_d1, _gamma_plus_one_d2)


def order_derivative(f: Callable[[float], float], order: int, delta: float) -> float:
    """``order``-th derivative of ``f`` at ``delta``.

    Closed forms attached as ``f.derivatives`` are used when available;
    otherwise a central difference with step eps^(1/(order+2)) * max(1, |delta|).
    """
    if order == 0:
        return f(delta)
    closed = getattr(f, "derivatives", ())
    if order <= len(closed):
        return closed[order - 1](delta)
    h = _EPS ** (1.0 / (order + 2)) * max(1.0, abs(delta))
    total = 0.0
    for m in range(order + 1):
        total += (-1) ** m * math.comb(order, m) * f(delta + (order / 2.0 - m) * h)
    return total / h**order


def delta_operator(j: int, L: float, f: Callable[[float], float], delta: float) -> float:
    """(d/dδ + L)^j f evaluated at δ, i.e. sum_i C(j,i) L^(j-i) f^(i)(δ)."""
    if j < 0 or j > MAX_DELTA_ORDER:
        raise UnsupportedOrderError(f"delta_operator supports 0 <= j <= {MAX_DELTA_ORDER}, got {j}")
    return sum(math.comb(j, i) * L ** (j - i) * order_derivative(f, i, delta) for i in range(j + 1))


@lru_cache(maxsize=None)
def _bernoulli_coefficients(k: int) -> tuple[Fraction, ...]:
    # ascending coefficients; B_k' = k B_{k-1} and int_0^1 B_k = 0 for k >= 1
    if k == 0:
        return (Fraction(1),)
    prev = _bernoulli_coefficients(k - 1)
    integrated = [Fraction(0)] + [k * c / (i + 1) for i, c in enumerate(prev)]
    mean = sum(c / (i + 1) for i, c in enumerate(integrated))
    integrated[0] = -mean
    return tuple(integrated)


def bernoulli_number(k: int) -> Fraction:
    """Exact B_k = B_k(0)."""
    return bernoulli_poly_coefficients(k)[0]


def bernoulli_poly_coefficients(k: int) -> tuple[Fraction, ...]:
    if not 0 <= k <= MAX_BERNOULLI_ORDER:
        raise DomainError(f"Bernoulli order must lie in [0, {MAX_BERNOULLI_ORDER}], got {k}")
    return _bernoulli_coefficients(k)


def bernoulli_poly(k: int, y: float) -> float:
    """Bernoulli polynomial B_k(y) for 0 <= k <= 20 and y in [0, 1]."""
    coeffs = bernoulli_poly_coefficients(k)
    if not 0.0 <= y <= 1.0:
        raise DomainError(f"bernoulli_poly expects y in [0, 1], got {y!r}")
    value = 0.0
    for c in reversed(coeffs):
        value = value * y + float(c)
    return value


def _zeta_euler_maclaurin(s: float, N: int = 12, terms: int = 9) -> float:
    head = math.fsum(k ** (-s) for k in range(1, N))
    tail = N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** (-s)
    rising = s  # s (s+1) ... (s+2i-2)
    for i in range(1, terms + 1):
        b = float(bernoulli_number(2 * i))
        tail += b / math.factorial(2 * i) * rising * N ** (-s - 2 * i + 1)
        rising *= (s + 2 * i - 1) * (s + 2 * i)
    return head + tail


def zeta_real(s: float) -> float:
    """Riemann zeta at a real argument s != 1.

    Euler-Maclaurin tail acceleration for s > 0, functional equation for s <= 0.
    """
    if s == 1.0:
        raise PoleError("zeta has a pole at s = 1")
    if s > 0.0:
        return _zeta_euler_maclaurin(s)
    if s == 0.0:
        return -0.5
    if s < -170.0:
        raise DomainError(f"zeta_real overflows for s={s}")
    reflected = _zeta_euler_maclaurin(1.0 - s)
    return 2.0**s * math.pi ** (s - 1.0) * math.sin(math.pi * s / 2.0) * math.gamma(1.0 - s) * reflected
