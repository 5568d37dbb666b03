"""Exact finite-n computations through truncated power series.

Every coefficient vector is stored at a common scale r0: entry n holds
(true coefficient) * r0**n.  The exponential recurrence commutes with the
scaling (theta_k becomes theta_k r0**k), so ratios of coefficients at
equal total degree are recovered exactly.  The scale is the saddle radius
exp(-p_N) of the top degree N, which keeps magnitudes representable.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateModelError, DomainError, SeriesOverflowError, SolverError, UndefinedMeasureError
from .weights import WeightModel, tune_parameter


@dataclass(frozen=True)
class PowerSeries:
    """Truncated power series; ``coeffs[n]`` is the n-th coefficient times ``scale**n``."""

    coeffs: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        if not 0.0 < self.scale <= 1.0:
            raise DomainError(f"series scale must lie in (0, 1], got {self.scale}")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n):
        return self.coeffs[n]

    def _check(self, other: "PowerSeries") -> int:
        if other.scale != self.scale:
            raise DomainError("power series arithmetic requires a common scale")
        return min(len(self), len(other))

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            m = self._check(other)
            return PowerSeries(self.coeffs[:m] + other.coeffs[:m], self.scale)
        out = self.coeffs.copy()
        out[0] += other
        return PowerSeries(out, self.scale)

    def __neg__(self):
        return PowerSeries(-self.coeffs, self.scale)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            m = self._check(other)
            return PowerSeries(np.convolve(self.coeffs[:m], other.coeffs[:m])[:m], self.scale)
        return PowerSeries(self.coeffs * other, self.scale)

    __rmul__ = __mul__

    def coefficient(self, n: int) -> float:
        """Unscaled coefficient [t^n]; may overflow for large n."""
        return float(self.coeffs[n] / self.scale**n)

    def log_coefficient(self, n: int) -> float:
        c = self.coeffs[n]
        if c <= 0.0:
            return -math.inf
        return math.log(c) - n * math.log(self.scale)

    def coefficient_at(self, n: int, other: "PowerSeries") -> float:
        """Scaled [t^n] of self * other without forming the whole product."""
        self._check(other)
        return float(np.dot(self.coeffs[: n + 1], other.coeffs[n::-1]))


def exp_series(G: PowerSeries) -> PowerSeries:
    """exp(G) via f_0 = e^{g_0}, n f_n = sum_{k=1}^n k g_k f_{n-k}."""
    g = G.coeffs
    N = len(g) - 1
    f = np.zeros(N + 1)
    if g[0] > 709.0:
        raise SeriesOverflowError("exp_series overflowed; lower the series scale r0")
    f[0] = math.exp(g[0])
    kg = np.arange(N + 1) * g
    for n in range(1, N + 1):
        f[n] = np.dot(kg[1 : n + 1], f[n - 1 :: -1]) / n
    if not np.all(np.isfinite(f)):
        raise SeriesOverflowError("exp_series overflowed; lower the series scale r0")
    return PowerSeries(f, G.scale)


def saddle_scale(model: WeightModel, N: int) -> float:
    """r0 = exp(-p_N), the radius at which sum theta_k r^k = N (1.0 when unreachable)."""
    if N < 1:
        return 1.0
    try:
        return math.exp(-tune_parameter(model, N))
    except SolverError:
        return 1.0


def window_series(model: WeightModel, N: int, scale: float, lo: int = 1, hi: float = math.inf) -> PowerSeries:
    """sum_{lo <= k < hi} theta_k / k t^k, truncated at degree N."""
    k = np.arange(N + 1)
    c = np.zeros(N + 1)
    mask = (k >= max(lo, 1)) & (k < hi)
    km = k[mask]
    with np.errstate(under="ignore"):
        c[mask] = model.thetas(km) / km * np.exp(km * math.log(scale))
    return PowerSeries(c, scale)


def cycle_series(model: WeightModel, N: int, scale: float | None = None) -> PowerSeries:
    """g_Theta(t) = sum_k theta_k/k t^k truncated at N."""
    return window_series(model, N, saddle_scale(model, N) if scale is None else scale)


@lru_cache(maxsize=64)
def partition_numbers(model: WeightModel, N: int) -> PowerSeries:
    """h_0..h_N as a scaled series (h_n = [t^n] exp(g_Theta))."""
    if N < 0:
        raise DomainError(f"N must be non-negative, got {N}")
    g = cycle_series(model, N)
    if N >= 1 and not np.any(g.coeffs[1:] > 0.0):
        raise DegenerateModelError(f"all weights vanish on [1, {N}]")
    return exp_series(g)


def log_partition_numbers(model: WeightModel, N: int) -> np.ndarray:
    H = partition_numbers(model, N)
    with np.errstate(divide="ignore"):
        return np.log(H.coeffs) - np.arange(N + 1) * math.log(H.scale)


def normaliser(model: WeightModel, n: int) -> tuple[PowerSeries, float]:
    """h_0..h_n and h_n itself; raises when P_n is undefined."""
    try:
        H = partition_numbers(model, n)
    except DegenerateModelError:
        raise UndefinedMeasureError(f"h_{n} = 0 for {model.describe()}; P_n is undefined") from None
    hn = H.coeffs[n]
    if not hn > 0.0:
        raise UndefinedMeasureError(f"h_{n} = 0 for {model.describe()}; P_n is undefined")
    return H, hn


def laplace_wn(model: WeightModel, n: int, x_cut: int, s: float) -> float:
    """E_n[exp(-s w_n(x))] where w_n counts cycles of length >= x_cut."""
    if s < 0:
        raise DomainError("Laplace transforms are evaluated for s >= 0 only")
    H, hn = normaliser(model, n)
    g = window_series(model, n, H.scale)
    tail = window_series(model, n, H.scale, lo=x_cut)
    F = exp_series(g + math.expm1(-s) * tail)
    return float(F.coeffs[n] / hn)


@dataclass(frozen=True)
class Moments:
    """Exact first and second moments of (w_n(cut_1), ..., w_n(cut_L)) and of its increments."""

    cuts: tuple[int, ...]
    mean: np.ndarray
    cov: np.ndarray
    increment_mean: np.ndarray
    increment_cov: np.ndarray

    def __iter__(self):
        return iter((self.mean, self.cov))


def _check_cuts(cuts: Sequence[int]) -> tuple[int, ...]:
    cuts = tuple(int(c) for c in cuts)
    if not cuts:
        raise DomainError("at least one cut is required")
    if any(c < 1 for c in cuts):
        raise DomainError("cuts must be >= 1")
    if any(b < a for a, b in zip(cuts, cuts[1:])):
        raise DomainError("cuts must be ascending")
    return cuts


def exact_moments(model: WeightModel, n: int, cuts: Sequence[int]) -> Moments:
    """Exact mean vector and covariance of the profile at integer cuts under P_n.

    Second factorial moments of the increments D_i = #cycles with length in
    [cut_i, cut_{i+1}) are [t^n] T_i T_j exp(g_Theta) / h_n.
    """
    cuts = _check_cuts(cuts)
    H, hn = normaliser(model, n)
    bounds = list(cuts) + [math.inf]
    windows = [window_series(model, n, H.scale, lo, hi).coeffs for lo, hi in zip(bounds, bounds[1:])]
    L = len(cuts)
    e = np.empty(L)
    second = np.empty((L, L))
    for i, Ti in enumerate(windows):
        Ai = np.convolve(Ti, H.coeffs)[: n + 1]
        e[i] = Ai[n] / hn
        for j in range(L):
            second[i, j] = np.dot(windows[j], Ai[::-1]) / hn
    second = 0.5 * (second + second.T)
    inc_cov = second + np.diag(e) - np.outer(e, e)
    upper = np.triu(np.ones((L, L)))
    return Moments(cuts, upper @ e, upper @ inc_cov @ upper.T, e, inc_cov)


def exact_factorial_moments(model: WeightModel, n: int, cut: int, order: int) -> np.ndarray:
    """E_n[(W)_r] for r = 1..order, W = number of cycles of length >= cut."""
    H, hn = normaliser(model, n)
    T = window_series(model, n, H.scale, lo=cut).coeffs
    out = np.empty(order)
    power = np.zeros(n + 1)
    power[0] = 1.0
    for r in range(order):
        power = np.convolve(power, T)[: n + 1]
        out[r] = np.dot(power, H.coeffs[::-1]) / hn
    return out


def _stirling2(m: int, r: int) -> int:
    return sum((-1) ** i * math.comb(r, i) * (r - i) ** m for i in range(r + 1)) // math.factorial(r)


def exact_cumulants(model: WeightModel, n: int, cut: int, order: int = 3) -> np.ndarray:
    """Cumulants kappa_1..kappa_order of W = w_n(cut) under P_n."""
    if not 1 <= order <= 4:
        raise DomainError("cumulants are provided up to order 4")
    fact = exact_factorial_moments(model, n, cut, order)
    raw = [sum(_stirling2(m, r) * fact[r - 1] for r in range(1, m + 1)) for m in range(1, order + 1)]
    m1 = raw[0]
    kappa = [m1]
    if order >= 2:
        kappa.append(raw[1] - m1**2)
    if order >= 3:
        kappa.append(raw[2] - 3 * raw[1] * m1 + 2 * m1**3)
    if order >= 4:
        kappa.append(raw[3] - 4 * raw[2] * m1 - 3 * raw[1] ** 2 + 12 * raw[1] * m1**2 - 6 * m1**4)
    return np.array(kappa)


def exact_pmf(model: WeightModel, n: int, cut: int, kmax: int) -> np.ndarray:
    """P_n[W = m] for m = 0..kmax: [t^n] exp(g_Theta - T) T^m / m! / h_n."""
    H, hn = normaliser(model, n)
    g = window_series(model, n, H.scale)
    T = window_series(model, n, H.scale, lo=cut)
    base = exp_series(g - T).coeffs
    Tc = T.coeffs
    out = np.empty(kmax + 1)
    for m in range(kmax + 1):
        if m:
            base = np.convolve(base, Tc)[: n + 1] / m
        out[m] = base[n] / hn
    return out


def fourth_mixed_moment(model: WeightModel, n: int, x1: int, x: int, x2: int) -> float:
    """E_n[(W_a - E W_a)^2 (W_b - E W_b)^2] for W_a on [x1, x), W_b on [x, x2).

    Uses the generating identity: the P_n-expectation equals
    [t^n] ((g_a - E_a)^2 + g_a)((g_b - E_b)^2 + g_b) exp(g_Theta) / h_n.
    """
    if not x1 <= x <= x2:
        raise DomainError("require x1 <= x <= x2")
    if x1 == x or x == x2:
        return 0.0
    H, hn = normaliser(model, n)
    ga = window_series(model, n, H.scale, x1, x).coeffs
    gb = window_series(model, n, H.scale, x, x2).coeffs
    Ea = np.dot(ga, H.coeffs[::-1]) / hn
    Eb = np.dot(gb, H.coeffs[::-1]) / hn

    def bracket(w, E):
        centred = w.copy()
        centred[0] -= E
        return np.convolve(centred, centred)[: n + 1] + w

    prod = np.convolve(bracket(ga, Ea), bracket(gb, Eb))[: n + 1]
    return float(np.dot(prod, H.coeffs[::-1]) / hn)


_MAGIC = b"PSHT"
_VERSION = 1
_HEADER = struct.Struct("<4sIQd64s")


def save_h_table(path, model: WeightModel, H: PowerSeries) -> None:
    """Write a versioned binary h-table: header then little-endian float64 coefficients."""
    header = _HEADER.pack(_MAGIC, _VERSION, H.order, H.scale, model.digest().encode())
    Path(path).write_bytes(header + H.coeffs.astype("<f8").tobytes())


def load_h_table(path, model: WeightModel, N: int | None = None) -> PowerSeries:
    blob = Path(path).read_bytes()
    magic, version, order, scale, digest = _HEADER.unpack_from(blob)
    if magic != _MAGIC or version != _VERSION:
        raise DomainError(f"{path}: not a version-{_VERSION} h-table")
    if digest.decode() != model.digest():
        raise DomainError(f"{path}: h-table belongs to a different weight model")
    if N is not None and order != N:
        raise DomainError(f"{path}: h-table has order {order}, expected {N}")
    coeffs = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    if len(coeffs) != order + 1:
        raise DomainError(f"{path}: truncated h-table")
    return PowerSeries(coeffs, scale)


class HTableCache:
    """Directory of h-tables keyed by (model digest, N)."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, model: WeightModel, N: int) -> Path:
        return self.directory / f"h-{model.digest()[:16]}-{N}.bin"

    def get(self, model: WeightModel, N: int) -> PowerSeries:
        path = self.path_for(model, N)
        if path.exists():
            return load_h_table(path, model, N)
        H = partition_numbers(model, N)
        save_h_table(path, model, H)
        return H
