"""Cycle weight families, their generating sums, and the associated scaling constants."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize

from . import specfun
from .errors import DivergenceError, DomainError, SolverError

POLYLOG = "polylog"
CONSTANT = "constant"
CUSTOM = "custom"
KINDS = (POLYLOG, CONSTANT, CUSTOM)

_TAIL_RTOL = 1e-14
_CHUNK = 4096


@dataclass(frozen=True)
class WeightModel:
    """Weight sequence theta_m, m >= 1 (theta_0 = 0 by convention).

    ``polylog``: (log m)^j m^alpha / Gamma(alpha+1) + c m^beta
    ``constant``: theta_m = theta
    ``custom``: explicit table theta_1..theta_N, zero beyond
    """

    kind: str
    alpha: float = 1.0
    j: int = 0
    c: float = 0.0
    beta: float = 0.0
    theta: float = 1.0
    table: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown weight family {self.kind!r}")
        if self.kind == POLYLOG:
            if not self.alpha > 0:
                raise DomainError(f"alpha must be positive, got {self.alpha}")
            if int(self.j) != self.j or self.j < 0:
                raise DomainError(f"j must be a non-negative integer, got {self.j}")
            if self.c != 0.0 and not 0.0 <= self.beta < self.alpha / 2.0:
                raise DomainError("perturbation exponent must satisfy 0 <= beta < alpha/2")
            if self.c < 0.0:
                raise DomainError("perturbation coefficient must be non-negative")
        elif self.kind == CONSTANT:
            if not self.theta > 0:
                raise DomainError(f"constant weight must be positive, got {self.theta}")
        elif any(t < 0 for t in self.table):
            raise DomainError("custom weights must be non-negative")

    @classmethod
    def polylog(cls, alpha: float, j: int = 0, c: float = 0.0, beta: float = 0.0) -> "WeightModel":
        return cls(POLYLOG, alpha=float(alpha), j=int(j), c=float(c), beta=float(beta))

    @classmethod
    def constant(cls, theta: float) -> "WeightModel":
        return cls(CONSTANT, theta=float(theta))

    @classmethod
    def custom(cls, values) -> "WeightModel":
        return cls(CUSTOM, table=tuple(float(v) for v in values))

    @property
    def max_index(self) -> float:
        """Largest m with possibly non-zero theta_m."""
        return len(self.table) if self.kind == CUSTOM else math.inf

    def theta_at(self, m: int) -> float:
        return float(self.thetas(np.array([m]))[0])

    def thetas(self, m) -> np.ndarray:
        """Vectorised theta_m for integer array ``m`` (entries with m <= 0 give 0)."""
        m = np.asarray(m)
        mf = m.astype(float)
        out = np.zeros(m.shape, dtype=float)
        pos = m >= 1
        if self.kind == POLYLOG:
            mp = mf[pos]
            val = mp**self.alpha / math.gamma(self.alpha + 1.0)
            if self.j:
                val = val * np.log(mp) ** self.j
            if self.c:
                val = val + self.c * mp**self.beta
            out[pos] = val
        elif self.kind == CONSTANT:
            out[pos] = self.theta
        else:
            table = np.asarray(self.table, dtype=float)
            inside = pos & (m <= len(table))
            out[inside] = table[m[inside] - 1]
        return out

    def to_dict(self) -> dict[str, Any]:
        if self.kind == POLYLOG:
            d: dict[str, Any] = {"family": POLYLOG, "alpha": self.alpha, "j": self.j}
            if self.c:
                d.update(perturbation_c=self.c, perturbation_beta=self.beta)
            return d
        if self.kind == CONSTANT:
            return {"family": CONSTANT, "theta": self.theta}
        return {"family": CUSTOM, "table": list(self.table)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "WeightModel":
        family = d.get("family")
        if family == POLYLOG:
            return cls.polylog(d["alpha"], d.get("j", 0), d.get("perturbation_c", 0.0), d.get("perturbation_beta", 0.0))
        if family == CONSTANT:
            return cls.constant(d["theta"])
        if family == CUSTOM:
            return cls.custom(d["table"])
        raise DomainError(f"unknown weight family {family!r}")

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def describe(self) -> str:
        if self.kind == POLYLOG:
            s = f"PolyLog(alpha={self.alpha:g}, j={self.j})"
            return s[:-1] + f", c={self.c:g}, beta={self.beta:g})" if self.c else s
        if self.kind == CONSTANT:
            return f"Constant(theta={self.theta:g})"
        return f"Custom(N={len(self.table)})"


def _terms(model: WeightModel, k: np.ndarray, r: float, power_shift: int) -> np.ndarray:
    kf = k.astype(float)
    with np.errstate(under="ignore"):
        return model.thetas(k) * kf**power_shift * np.exp(kf * math.log(r))


def weighted_sum(model: WeightModel, r: float, power_shift: int = 0, start: int = 1,
                 stop: float | None = None) -> float:
    """sum_{k=start}^{stop} theta_k k^power_shift r^k; ``stop=None`` means infinity.

    Infinite sums are truncated once the terms decrease geometrically and the
    ratio-based tail bound falls below 1e-14 of the accumulated value.
    """
    if power_shift not in (-1, 0, 1, 2):
        raise DomainError(f"power_shift must lie in {{-1, 0, 1, 2}}, got {power_shift}")
    if not 0.0 < r < 1.0:
        if r >= 1.0 and (stop is None or math.isinf(stop)) and model.kind != CUSTOM:
            raise DivergenceError(f"weighted sum diverges for r={r}")
        if r <= 0.0:
            raise DomainError(f"r must be positive, got {r}")
    start = max(int(start), 1)
    limit = model.max_index if stop is None else min(float(stop), model.max_index)
    if start > limit:
        return 0.0
    if not math.isinf(limit):
        total = 0.0
        for lo in range(start, int(limit) + 1, 1 << 20):
            hi = min(int(limit), lo + (1 << 20) - 1)
            total += float(np.sum(_terms(model, np.arange(lo, hi + 1), r, power_shift)))
        return total
    total = 0.0
    lo, size = start, _CHUNK
    while True:
        terms = _terms(model, np.arange(lo, lo + size), r, power_shift)
        total += float(np.sum(terms))
        last, prev = terms[-1], terms[-2]
        if prev > 0.0 and last < prev:
            ratio = last / prev
            if last * ratio / (1.0 - ratio) <= _TAIL_RTOL * abs(total) or last == 0.0:
                return total
        elif last == 0.0 and prev == 0.0 and lo > 1 and total > 0.0:
            return total
        lo += size
        size *= 2


def tail_cutoff(model: WeightModel, r: float, tol: float = 1e-12) -> int:
    """Smallest K with sum_{k>K} theta_k r^k / k < tol."""
    if not math.isinf(model.max_index):
        return int(model.max_index)
    size = _CHUNK
    while True:
        terms = _terms(model, np.arange(1, size + 1), r, -1)
        last, prev = terms[-1], terms[-2]
        if last == 0.0 or (prev > 0.0 and last < prev):
            ratio = last / prev if prev > 0.0 else 0.0
            beyond = last * ratio / (1.0 - ratio)
            if beyond < 1e-3 * tol:
                break
        size *= 2
    # tails[i] = sum_{k > i}, i = 0..size
    tails = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]]) + beyond
    return int(np.nonzero(tails < tol)[0][0])


def tune_parameter(model: WeightModel, n: float) -> float:
    """p > 0 solving sum_k theta_k e^{-k p} = n by bisection."""
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")

    def excess(p: float) -> float:
        return weighted_sum(model, math.exp(-p), 0) - n

    hi = 1.0
    while excess(hi) > 0.0:
        hi *= 2.0
        if hi > 1e4:
            raise SolverError("no upper bracket for the tuning equation", (1.0, hi))
    lo = hi
    while excess(lo) < 0.0:
        lo /= 2.0
        if lo < 1e-14:
            raise SolverError("tuning equation has no root; the weight sum is bounded", (lo, hi))
    if lo == hi:
        hi = 2.0 * lo
    p = optimize.bisect(excess, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=400)
    if abs(excess(p)) > 1e-9 * n:
        raise SolverError(f"bisection residual {excess(p):.3g} exceeds 1e-9 n", (lo, hi))
    return p


@dataclass(frozen=True)
class ScalingConstants:
    """n*, n-bar and the saddle-shift parameters p_n, q_n for a PolyLog model."""

    model: WeightModel
    n: int
    n_star: float
    n_bar: float
    p_n: float

    def q_n(self, x: float) -> float:
        alpha, j = self.model.alpha, self.model.j
        L = -math.log(self.p_n)
        numer = (self.n * self.p_n) ** -0.5 * specfun.delta_operator(
            j, L, lambda a: specfun.upper_gamma(a + 1.0, x), alpha)
        denom = (alpha + 1.0) * specfun.delta_operator(j, L, specfun.gamma_plus_one, alpha)
        if j:
            denom += j * specfun.delta_operator(j - 1, L, specfun.gamma_plus_one, alpha)
        return numer / denom

    def v_n(self, s: float, x: float) -> float:
        return self.p_n * (1.0 - s * self.q_n(x))


def length_scale(alpha: float, j: int, n: float) -> float:
    """n* = (1+alpha)^(-j) (n / (log n)^j)^(1/(alpha+1))."""
    return (1.0 + alpha) ** (-j) * (n / math.log(n) ** j) ** (1.0 / (alpha + 1.0))


def scaling_constants(model: WeightModel, n: int) -> ScalingConstants:
    if model.kind != POLYLOG:
        raise DomainError("scaling constants are defined for the polylog family only")
    if n < 2:
        raise DomainError(f"scaling constants need n >= 2, got {n}")
    n_star = length_scale(model.alpha, model.j, n)
    return ScalingConstants(model, n, n_star, n / n_star, tune_parameter(model, n))
