"""Estimators and verdicts built on samples and exact moments."""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .errors import DomainError
from .sampler import CycleCounts, SampleBatch, batch_from_draws, grand_canonical_batch, make_rng
from .saddle import limit_shape
from .weights import WeightModel, scaling_constants, weighted_sum

PASS, FAIL, ADJUDICATE = "pass", "fail", "adjudicate"


@dataclass
class Verdict:
    """Three-valued outcome with the numbers that produced it."""

    name: str
    status: str
    details: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in (PASS, FAIL, ADJUDICATE):
            raise DomainError(f"unknown verdict status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict:
        return to_jsonable(asdict(self))


def to_jsonable(obj):
    """Make nested numpy values JSON friendly."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


@dataclass
class ShapeResult:
    grid: np.ndarray
    mean_profile: np.ndarray
    theory: np.ndarray
    stderr: np.ndarray
    sup_distance: float  # of the mean profile
    sample_sup: np.ndarray  # per-sample sup distance
    exceed_prob: float

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.sample_sup, q))


def shape_distance(samples, model: WeightModel, n: int, grid: Sequence[float], eps: float = 0.1) -> ShapeResult:
    """Distance of rescaled profiles w(x n*)/n-bar to w_inf on ``grid``.

    ``samples`` is a list of CycleCounts or a SampleBatch whose cuts are
    ceil(x n*) for x in ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("shape_distance needs a non-empty grid")
    sc = scaling_constants(model, n)
    if isinstance(samples, SampleBatch):
        batch = samples
        if len(batch.cuts) != len(grid):
            raise DomainError("batch cuts do not match the grid")
    else:
        batch = batch_from_draws(list(samples), np.ceil(grid * sc.n_star).astype(np.int64))
    if batch.size < 30:
        warnings.warn(f"shape_distance on only {batch.size} samples", stacklevel=2)
    scaled = batch.profiles / sc.n_bar
    theory = np.array([limit_shape(model.alpha, x) for x in grid])
    per = np.max(np.abs(scaled - theory), axis=1)
    mean = scaled.mean(axis=0)
    se = scaled.std(axis=0, ddof=1) / math.sqrt(batch.size) if batch.size > 1 else np.full(len(grid), np.nan)
    return ShapeResult(grid, mean, theory, se, float(np.max(np.abs(mean - theory))), per, float(np.mean(per > eps)))


@dataclass
class CLTResult:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    stderr: dict
    size: int
    degenerate: bool = False


def _moment_stats(s1, s2, s3, s4, m):
    # central statistics from power sums of centred data
    mu = s1 / m
    c2 = s2 / m - mu**2
    c3 = s3 / m - 3 * mu * s2 / m + 2 * mu**3
    c4 = s4 / m - 4 * mu * s3 / m + 6 * mu**2 * s2 / m - 3 * mu**4
    var = c2 * m / (m - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return mu, var, c3 / c2**1.5, c4 / c2**2 - 3.0


def clt_diagnostics(values) -> CLTResult:
    """Mean, variance, skewness, excess kurtosis with jackknife standard errors, and the KS
    distance to the normal law with the sample's own mean and variance."""
    v = np.asarray(values, dtype=float).ravel()
    m = len(v)
    if m < 3:
        raise DomainError("clt_diagnostics needs at least 3 values")
    if m < 1000:
        warnings.warn(f"clt_diagnostics on only {m} values", stacklevel=2)
    shift = v.mean()
    y = v - shift
    if not np.any(y != 0.0):
        nan = math.nan
        return CLTResult(float(shift), 0.0, nan, nan, nan, {k: nan for k in ("mean", "variance", "skewness",
                                                                           "excess_kurtosis")}, m, True)
    p = [np.sum(y**k) for k in range(1, 5)]
    mu, var, skew, kurt = _moment_stats(*p, m)
    # leave-one-out statistics by subtracting each value's powers
    loo = _moment_stats(*(p[k - 1] - y**k for k in range(1, 5)), m - 1)
    se = {}
    for name, part in zip(("mean", "variance", "skewness", "excess_kurtosis"), loo):
        se[name] = float(math.sqrt((m - 1) / m * np.sum((part - np.mean(part)) ** 2)))
    ks = sps.kstest(v, "norm", args=(shift, math.sqrt(var))).statistic
    return CLTResult(float(mu + shift), float(var), float(skew), float(kurt), float(ks), se, m)


@dataclass
class CovarianceEstimate:
    matrix: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    size: int

    def contains(self, target) -> np.ndarray:
        target = np.asarray(target)
        return (self.lower <= target) & (target <= self.upper)


def increments(profiles: np.ndarray) -> np.ndarray:
    """Columns w(c_i) - w(c_{i+1}), last column w(c_L)."""
    p = np.asarray(profiles, dtype=float)
    d = p.copy()
    d[:, :-1] -= p[:, 1:]
    return d


def increment_covariance_estimate(samples, cuts=None, n_bar: float = 1.0, n_boot: int = 200,
                                  seed: int = 0, level: float = 0.95) -> CovarianceEstimate:
    """Covariance of profile increments / n-bar with percentile bootstrap intervals.

    ``samples``: SampleBatch, (draws x L) profile matrix, or list of CycleCounts with ``cuts``.
    """
    if isinstance(samples, SampleBatch):
        prof = samples.profiles
    elif isinstance(samples, np.ndarray):
        prof = samples
    else:
        prof = batch_from_draws(list(samples), cuts).profiles
    D = increments(prof)
    m = len(D)
    if m < 1000:
        warnings.warn(f"increment covariance from only {m} samples", stacklevel=2)
    est = np.atleast_2d(np.cov(D, rowvar=False)) / n_bar
    rng = make_rng(seed, 0)
    boots = np.empty((n_boot,) + est.shape)
    for b in range(n_boot):
        idx = rng.integers(0, m, m)
        boots[b] = np.atleast_2d(np.cov(D[idx], rowvar=False)) / n_bar
    a = (1.0 - level) / 2.0
    return CovarianceEstimate(est, np.quantile(boots, a, axis=0), np.quantile(boots, 1 - a, axis=0), m)


def factorial_moment(values: np.ndarray, r: int) -> np.ndarray:
    """Per-sample falling factorial W (W-1) ... (W-r+1)."""
    v = np.asarray(values, dtype=float)
    out = np.ones_like(v)
    for i in range(r):
        out *= v - i
    return out


def poisson_chi_square(values: np.ndarray, mu: float, min_expected: float = 5.0) -> tuple[float, float]:
    """Chi-square goodness of fit of integer ``values`` against Poisson(mu); bins merged to expected >= 5."""
    v = np.asarray(values, dtype=np.int64)
    m = len(v)
    top = int(max(v.max(), sps.poisson.ppf(1 - 1e-12, mu))) + 1
    observed = np.bincount(v, minlength=top + 1)[: top + 1].astype(float)
    expected = sps.poisson.pmf(np.arange(top + 1), mu) * m
    expected[-1] += sps.poisson.sf(top, mu) * m
    obs_bins, exp_bins = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_bins.append(o_acc)
            exp_bins.append(e_acc)
            o_acc = e_acc = 0.0
    if obs_bins:
        obs_bins[-1] += o_acc
        exp_bins[-1] += e_acc
    if len(obs_bins) < 2:
        return 0.0, 1.0
    exp_arr = np.array(exp_bins)
    exp_arr *= sum(obs_bins) / exp_arr.sum()
    res = sps.chisquare(obs_bins, exp_arr)
    return float(res.statistic), float(res.pvalue)


def poisson_law_check(model: WeightModel, t: float, threshold: float, size: int = 100_000,
                      seed: int = 0, workers: int = 1, values=None) -> Verdict:
    """W = number of cycles of length >= floor(threshold) under P_t against Poisson(mu)."""
    cut = max(1, math.floor(threshold))
    mu = weighted_sum(model, t, -1, start=cut)
    if values is None:
        values = grand_canonical_batch(model, t, size, seed, [cut], workers=workers).profiles[:, 0]
    values = np.asarray(values)
    m = len(values)
    details: dict = {"mu": mu, "cut": cut, "draws": m}
    ok = True
    if mu < 1e-12:
        ok = bool(np.all(values == 0))
        details["all_zero"] = ok
    else:
        fm = []
        for r in (1, 2, 3):
            f = factorial_moment(values, r)
            est, se = f.mean(), f.std(ddof=1) / math.sqrt(m)
            z = (est - mu**r) / se if se > 0 else math.inf
            fm.append({"r": r, "estimate": est, "target": mu**r, "z": z})
            ok &= abs(z) <= 3.0
        stat, pval = poisson_chi_square(values, mu)
        details.update(factorial_moments=fm, chi2=stat, chi2_p=pval)
        ok &= pval > 1e-3
    return Verdict("poisson_law", PASS if ok else FAIL, details,
                   {"module": "stats", "operation": "poisson_law_check",
                    "inputs": {"model": model.to_dict(), "t": t, "threshold": threshold, "seed": seed}})


def cycle_type_key(c: CycleCounts) -> str:
    return c.to_line()


def two_sample_chi_square(a: Sequence[CycleCounts], b: Sequence[CycleCounts]) -> tuple[float, float]:
    """Chi-square homogeneity test of the cycle-type frequencies of two samples."""
    keys = sorted({cycle_type_key(c) for c in a} | {cycle_type_key(c) for c in b})
    index = {k: i for i, k in enumerate(keys)}
    table = np.zeros((2, len(keys)))
    for row, sample in enumerate((a, b)):
        for c in sample:
            table[row, index[cycle_type_key(c)]] += 1
    if len(keys) < 2:
        return 0.0, 1.0
    res = sps.chi2_contingency(table, correction=False)
    return float(res.statistic), float(res.pvalue)
