"""Samplers for cycle counts under the canonical and grand-canonical measures."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, RejectionBudgetError, UndefinedMeasureError
from .series import normaliser, partition_numbers
from .weights import WeightModel, tail_cutoff, tune_parameter

CANONICAL = "canonical"
GRAND_CANONICAL = "grand_canonical"

# draws per RNG stream; fixed so results do not depend on the worker count
BLOCK = 1024
DUMP_HEADER = "# permshape-samples v1"


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based Philox generator for (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


@dataclass(frozen=True)
class CycleCounts:
    """Sparse cycle counts k -> C_k (only positive counts are stored)."""

    counts: dict[int, int]
    origin: str = CANONICAL
    param: float = 0.0

    def __post_init__(self):
        clean = {int(k): int(v) for k, v in sorted(self.counts.items()) if v}
        if any(k < 1 or v < 0 for k, v in clean.items()):
            raise DomainError("cycle lengths must be >= 1 and counts non-negative")
        object.__setattr__(self, "counts", clean)

    @property
    def total_size(self) -> int:
        return sum(k * v for k, v in self.counts.items())

    @property
    def n_cycles(self) -> int:
        return sum(self.counts.values())

    def lengths(self) -> np.ndarray:
        """Cycle lengths in ascending order, with multiplicity."""
        if not self.counts:
            return np.zeros(0, dtype=np.int64)
        return np.repeat(np.fromiter(self.counts, dtype=np.int64), list(self.counts.values()))

    def to_line(self) -> str:
        return " ".join(f"{k}:{v}" for k, v in self.counts.items())

    @classmethod
    def from_line(cls, line: str, origin: str = CANONICAL, param: float = 0.0) -> "CycleCounts":
        pairs = (tok.split(":") for tok in line.split())
        return cls({int(k): int(v) for k, v in pairs}, origin, param)


def profile(c: CycleCounts, x: float) -> int:
    """w(x) = number of cycles of length >= x (x = 0 counts all cycles)."""
    if x < 0:
        raise DomainError("profile needs x >= 0")
    lo = math.ceil(x)
    return sum(v for k, v in c.counts.items() if k >= lo)


def one_step_law(model: WeightModel, n: int) -> np.ndarray:
    """P[K = k], k = 1..n, for the length of the cycle through a marked point: theta_k h_{n-k} / (n h_n)."""
    return _step_law(model, normaliser(model, n)[0], n, n)


def _step_law(model, H, top, m):
    if not H.coeffs[m] > 0.0:
        raise UndefinedMeasureError(f"h_{m} = 0 for {model.describe()}; P_{m} is undefined")
    k = np.arange(1, m + 1)
    with np.errstate(under="ignore"):
        w = model.thetas(k) * np.exp(k * math.log(H.scale))
    return w * H.coeffs[m - 1 :: -1] / (m * H.coeffs[m])


class CanonicalSampler:
    """Exact sampler for the canonical measure by repeatedly removing the cycle of a marked point."""

    def __init__(self, model: WeightModel, n: int):
        if n < 0:
            raise DomainError("n must be non-negative")
        self.model = model
        self.n = n
        self.H = normaliser(model, n)[0] if n else partition_numbers(model, n)
        self._cdf: dict[int, np.ndarray] = {}
        self._cache = n <= 2048

    def cdf(self, m: int) -> np.ndarray:
        c = self._cdf.get(m)
        if c is None:
            c = np.cumsum(_step_law(self.model, self.H, self.n, m))
            if self._cache:
                self._cdf[m] = c
        return c

    def draw_lengths(self, rng: np.random.Generator) -> list[int]:
        m = self.n
        out = []
        while m > 0:
            c = self.cdf(m)
            k = int(np.searchsorted(c, rng.random() * c[-1], side="right")) + 1
            k = min(k, m)
            out.append(k)
            m -= k
        return out

    def draw(self, rng: np.random.Generator) -> CycleCounts:
        counts: dict[int, int] = {}
        for k in self.draw_lengths(rng):
            counts[k] = counts.get(k, 0) + 1
        return CycleCounts(counts, CANONICAL, self.n)


def sample_canonical(model: WeightModel, n: int, rng: np.random.Generator) -> CycleCounts:
    return CanonicalSampler(model, n).draw(rng)


def _gc_means(model: WeightModel, t: float, cutoff: int | None) -> np.ndarray:
    if t >= 1.0:
        raise DivergenceError(f"grand-canonical measure needs t < 1, got {t}")
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    K = tail_cutoff(model, t, 1e-12) if cutoff is None else int(cutoff)
    k = np.arange(1, K + 1)
    with np.errstate(under="ignore"):
        return model.thetas(k) * np.exp(k * math.log(t)) / k


def sample_grand_canonical(model: WeightModel, t: float, rng: np.random.Generator,
                           cutoff: int | None = None) -> CycleCounts:
    """Independent C_k ~ Poisson(theta_k t^k / k), truncated where the remaining mass is below 1e-12."""
    mu = _gc_means(model, t, cutoff)
    c = rng.poisson(mu)
    nz = np.nonzero(c)[0]
    return CycleCounts({int(k) + 1: int(c[k]) for k in nz}, GRAND_CANONICAL, t)


def tuned_t(model: WeightModel, n: float) -> float:
    """t with sum_k theta_k t^k = n."""
    return math.exp(-tune_parameter(model, n))


def condition_to_n(model: WeightModel, n: int, rng: np.random.Generator,
                   max_attempts: int = 1_000_000) -> tuple[CycleCounts, int]:
    """Rejection sampling of grand-canonical draws at the tuned t until the total size is n.

    Cycles longer than n can never be accepted and are independent of the
    rest, so only k <= n is drawn.  Returns the sample and the attempts used.
    """
    mu = _gc_means(model, tuned_t(model, n), n)
    k = np.arange(1, n + 1)
    for attempt in range(1, max_attempts + 1):
        c = rng.poisson(mu)
        if int(c @ k) == n:
            nz = np.nonzero(c)[0]
            return CycleCounts({int(i) + 1: int(c[i]) for i in nz}, CANONICAL, n), attempt
    raise RejectionBudgetError(max_attempts, 0)


@dataclass
class SampleBatch:
    """Profile values at integer cuts plus the low cycle counts of many draws."""

    cuts: np.ndarray
    profiles: np.ndarray  # (draws, len(cuts))
    low_counts: np.ndarray  # (draws, keep): C_1..C_keep
    total_size: np.ndarray
    origin: str
    param: float
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.total_size)


def _integer_cuts(cuts) -> np.ndarray:
    arr = np.asarray(cuts, dtype=np.int64)
    if arr.ndim != 1 or np.any(arr < 0):
        raise DomainError("cuts must be a vector of non-negative integers")
    return arr


def _counts_rows(draws: Sequence[CycleCounts], cuts: np.ndarray, keep: int):
    prof = np.empty((len(draws), len(cuts)), dtype=np.int64)
    low = np.zeros((len(draws), keep), dtype=np.int64)
    tot = np.empty(len(draws), dtype=np.int64)
    for i, d in enumerate(draws):
        lens = d.lengths()
        prof[i] = len(lens) - np.searchsorted(lens, np.maximum(cuts, 1), side="left")
        for k, v in d.counts.items():
            if k <= keep:
                low[i, k - 1] = v
        tot[i] = d.total_size
    return prof, low, tot


def batch_from_draws(draws: Sequence[CycleCounts], cuts, keep: int = 0) -> SampleBatch:
    cuts = _integer_cuts(cuts)
    prof, low, tot = _counts_rows(draws, cuts, keep)
    origin = draws[0].origin if draws else CANONICAL
    param = draws[0].param if draws else 0.0
    return SampleBatch(cuts, prof, low, tot, origin, param)


def _block_sizes(size: int) -> list[int]:
    return [min(BLOCK, size - lo) for lo in range(0, size, BLOCK)]


def _canonical_block(args):
    model, n, seed, block, count = args
    sampler = CanonicalSampler(model, n)
    rng = make_rng(seed, block)
    return [sampler.draw(rng) for _ in range(count)]


def _map_blocks(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def canonical_draws(model: WeightModel, n: int, size: int, seed: int, workers: int = 1) -> list[CycleCounts]:
    """``size`` canonical draws; block b of BLOCK draws uses stream b, so output ignores ``workers``."""
    jobs = [(model, n, seed, b, c) for b, c in enumerate(_block_sizes(size))]
    out: list[CycleCounts] = []
    for part in _map_blocks(_canonical_block, jobs, workers):
        out.extend(part)
    return out


def _gc_block(args):
    model, t, seed, block, count, cuts, keep, cutoff = args
    mu = _gc_means(model, t, cutoff)
    rng = make_rng(seed, block)
    C = rng.poisson(mu, size=(count, len(mu)))
    K = len(mu)
    tails = np.cumsum(C[:, ::-1], axis=1)[:, ::-1]  # tails[:, i] = sum_{k >= i+1}
    tails = np.concatenate([tails, np.zeros((count, 1), dtype=tails.dtype)], axis=1)
    idx = np.clip(np.maximum(cuts, 1) - 1, 0, K)
    prof = tails[:, idx]
    low = np.zeros((count, keep), dtype=np.int64)
    m = min(keep, K)
    low[:, :m] = C[:, :m]
    tot = C @ np.arange(1, K + 1)
    return prof, low, tot


def grand_canonical_batch(model: WeightModel, t: float, size: int, seed: int, cuts, keep: int = 0,
                          workers: int = 1, cutoff: int | None = None) -> SampleBatch:
    """Many grand-canonical draws reduced to profiles at ``cuts`` and the counts C_1..C_keep."""
    cuts = _integer_cuts(cuts)
    jobs = [(model, t, seed, b, c, cuts, keep, cutoff) for b, c in enumerate(_block_sizes(size))]
    parts = _map_blocks(_gc_block, jobs, workers)
    return SampleBatch(cuts, np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]),
                       np.concatenate([p[2] for p in parts]), GRAND_CANONICAL, t)


def grand_canonical_draws(model: WeightModel, t: float, size: int, seed: int, workers: int = 1) -> list[CycleCounts]:
    out = []
    for b, count in enumerate(_block_sizes(size)):
        rng = make_rng(seed, b)
        out.extend(sample_grand_canonical(model, t, rng) for _ in range(count))
    return out


def condition_to_n_batch(model: WeightModel, n: int, size: int, seed: int,
                         max_attempts: int | None = None) -> tuple[list[CycleCounts], float]:
    """``size`` conditioned draws; returns the draws and the observed acceptance rate."""
    mu = _gc_means(model, tuned_t(model, n), n)
    k = np.arange(1, n + 1)
    budget = max_attempts if max_attempts is not None else 1000 * size + 10_000
    accepted: list[CycleCounts] = []
    attempts = 0
    block = 0
    while len(accepted) < size:
        if attempts >= budget:
            raise RejectionBudgetError(attempts, len(accepted))
        rng = make_rng(seed, block)
        block += 1
        m = min(BLOCK * 16, budget - attempts)
        C = rng.poisson(mu, size=(m, n))
        hit = np.nonzero(C @ k == n)[0]
        needed = size - len(accepted)
        if len(hit) >= needed:
            hit = hit[:needed]
            attempts += int(hit[-1]) + 1
        else:
            attempts += m
        for i in hit:
            nz = np.nonzero(C[i])[0]
            accepted.append(CycleCounts({int(j) + 1: int(C[i, j]) for j in nz}, CANONICAL, n))
    return accepted, size / attempts


def write_dump(path, draws: Iterable[CycleCounts], model: WeightModel, ensemble: str, param: float, seed: int) -> None:
    lines = [DUMP_HEADER,
             f"# model: {json.dumps(model.to_dict(), sort_keys=True)}",
             f"# ensemble: {ensemble}",
             f"# param: {param!r}",
             f"# seed: {seed}"]
    lines.extend(d.to_line() for d in draws)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dump(path) -> tuple[dict, list[CycleCounts]]:
    header: dict = {}
    draws = []
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != DUMP_HEADER:
        raise DomainError(f"{path}: not a sample dump")
    for line in text[1:]:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = value
    model = WeightModel.from_dict(json.loads(header["model"]))
    ensemble = header["ensemble"]
    param = float(header["param"])
    header.update(model=model, param=param, seed=int(header["seed"]))
    for line in text[1:]:
        if not line.startswith("#"):
            draws.append(CycleCounts.from_line(line, ensemble, param))
    return header, draws
