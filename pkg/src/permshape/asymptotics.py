"""Euler-Maclaurin summation with real bounds and the polylogarithmic sum expansions."""
from __future__ import annotations

import math
import warnings
from typing import Callable, Sequence

from scipy import integrate

from . import specfun
from .errors import DomainError, PoleError, RemainderError

MAX_EM_ORDER = 6
MAX_TAIL_ORDER = 8

Func = Callable[[float], float]


def _frac(y: float) -> float:
    return y - math.floor(y)


def _quad(g: Func, lo: float, hi: float) -> tuple[float, float]:
    # poor convergence surfaces as RemainderError through the error estimate
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val, err


def _infinite_cutoff(f: Func, start: int) -> int:
    # first integer D > start with |f(D)| below 1e-16 of the running sum
    running = 0.0
    k = start
    while True:
        fk = f(k)
        if k > start and abs(fk) < 1e-16 * abs(running):
            return k
        running += fk
        k += 1
        if k - start > 10_000_000:
            raise RemainderError("summand does not decay; cannot truncate at d = inf", abs(fk))


def euler_maclaurin(f: Func, derivs: Sequence[Func], c: float, d: float, p: int) -> float:
    """sum_{floor(c) <= k < d} f(k) by Euler-Maclaurin with p derivative corrections.

    ``derivs[i]`` is the (i+1)-th derivative of ``f``; p+1 of them are needed
    for the remainder integral, which is evaluated by quadrature on each unit
    interval.  For d = inf the range is cut where |f| drops below 1e-16 of
    the running sum.
    """
    if not 0 <= p <= MAX_EM_ORDER:
        raise DomainError(f"p must lie in [0, {MAX_EM_ORDER}], got {p}")
    if len(derivs) < p + 1:
        raise DomainError(f"need {p + 1} derivatives, got {len(derivs)}")
    if not c < d:
        raise DomainError(f"require c < d, got c={c}, d={d}")
    if math.isinf(d):
        d = float(_infinite_cutoff(f, math.floor(c)))
    fs = [f] + list(derivs)

    integral, err = _quad(f, c, d)
    total = integral
    for r in range(p + 1):
        sign = (-1) ** (r + 1) / math.factorial(r + 1)
        at_d = specfun.bernoulli_poly(r + 1, _frac(d)) * fs[r](d)
        at_c = specfun.bernoulli_poly(r + 1, _frac(c)) * fs[r](c)
        total += sign * (at_d - at_c)

    fp = fs[p + 1]
    remainder = 0.0
    lo = c
    while lo < d:
        hi = min(math.floor(lo) + 1.0, d)
        base = math.floor(lo)
        val, e = _quad(lambda y: specfun.bernoulli_poly(p + 1, min(max(y - base, 0.0), 1.0)) * fp(y), lo, hi)
        remainder += val
        err += e
        lo = hi
    total += (-1) ** p / math.factorial(p + 1) * remainder

    if err > 1e-9 * max(1.0, abs(total)):
        raise RemainderError("quadrature did not reach the requested accuracy", err)
    # (c, d] -> [floor(c), d)
    total += f(math.floor(c))
    if d == math.floor(d):
        total -= f(d)
    return total


def polylog_asymptotic(delta: float, j: int, v: float) -> float:
    """Leading behaviour of sum_{k>=1} (log k)^j k^delta e^{-k v} as v -> 0."""
    if delta < 0 and delta == math.floor(delta):
        raise PoleError(f"delta must not be a negative integer, got {delta}")
    if not 0.0 < v < 0.5:
        raise DomainError(f"v must lie in (0, 0.5), got {v}")
    if j < 0:
        raise DomainError(f"j must be non-negative, got {j}")
    if j == 0:
        return math.gamma(delta + 1.0) * v ** (-delta - 1.0) + specfun.zeta_real(-delta)
    return v ** (-delta - 1.0) * specfun.delta_operator(j, -math.log(v), specfun.gamma_plus_one, delta)


def tail_expansion(delta: float, j: int, v: float, z: float, x: float, q: float, ell: int) -> float:
    """Expansion of sum_{k >= floor(z)} (log k)^j k^delta e^{-k v} where z v = x (1 + q).

    Truncated after the (-q)^ell term.
    """
    if z < 1.0 or x <= 0.0:
        raise DomainError("require z >= 1 and x > 0")
    if abs(q) >= 0.5:
        raise DomainError(f"|q| must be below 0.5, got {q}")
    if not 0 <= ell <= MAX_TAIL_ORDER:
        raise DomainError(f"ell must lie in [0, {MAX_TAIL_ORDER}], got {ell}")
    if delta <= -1.0:
        raise DomainError(f"delta must exceed -1, got {delta}")
    if abs(z * v - x * (1.0 + q)) > 1e-8 * max(1.0, z * v):
        raise DomainError("inconsistent arguments: z v must equal x (1 + q)")
    scale = z / x
    L = math.log(scale)
    total = 0.0
    for k in range(ell + 1):
        term = specfun.delta_operator(j, L, lambda a, k=k: specfun.upper_gamma(a + k + 1.0, x), delta)
        total += term / math.factorial(k) * (-q) ** k
    return scale ** (delta + 1.0) * total
