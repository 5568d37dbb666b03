"""Saddle-point analysis: admissibility diagnostics, coefficient asymptotics and limit theory."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from . import specfun
from .errors import DomainError, NoSaddleError
from .weights import WeightModel, length_scale, tail_cutoff, weighted_sum

GAMMA_GRID = (0.55, 0.60, 0.65, 0.70, 0.75, 0.80)
PHI_POINTS = 256

RealFn = Callable[[float], float]


@dataclass(frozen=True)
class AdmissibleFunction:
    """g with derivatives on (0, rho); ``g_complex`` evaluates g on a vector of complex points."""

    g: RealFn
    dg: RealFn
    d2g: RealFn
    d3g: RealFn
    rho: float
    label: str = "g"
    g_complex: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def a(self, r: float) -> float:
        return r * self.dg(r)

    def b(self, r: float) -> float:
        return r * self.dg(r) + r * r * self.d2g(r)

    def third(self, r: float) -> float:
        return r * self.dg(r) + 3 * r * r * self.d2g(r) + r**3 * self.d3g(r)

    @classmethod
    def geometric(cls) -> "AdmissibleFunction":
        """t / (1 - t)."""
        return cls(lambda t: t / (1 - t), lambda t: (1 - t) ** -2, lambda t: 2 * (1 - t) ** -3,
                   lambda t: 6 * (1 - t) ** -4, 1.0, "t/(1-t)", lambda z: z / (1 - z))

    @classmethod
    def logarithmic(cls, theta: float = 1.0) -> "AdmissibleFunction":
        """-theta log(1 - t), the Ewens generating function."""
        return cls(lambda t: -theta * math.log1p(-t), lambda t: theta / (1 - t),
                   lambda t: theta * (1 - t) ** -2, lambda t: 2 * theta * (1 - t) ** -3,
                   1.0, f"-{theta:g} log(1-t)", lambda z: -theta * np.log(1 - z))

    @classmethod
    def polynomial(cls, coeffs, rho: float = 1.0) -> "AdmissibleFunction":
        """sum_k coeffs[k] t^k, considered on (0, rho)."""
        p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        d1, d2, d3 = p.deriv(1), p.deriv(2), p.deriv(3)
        return cls(lambda t: float(p(t)), lambda t: float(d1(t)), lambda t: float(d2(t)),
                   lambda t: float(d3(t)), rho, f"poly{tuple(coeffs)}", lambda z: p(z))

    @classmethod
    def from_weights(cls, model: WeightModel, cut: int | None = None, s: float = 0.0) -> "AdmissibleFunction":
        """g(t) = sum_k theta_k/k t^k + (e^{-s} - 1) sum_{k >= cut} theta_k/k t^k."""
        if s < 0:
            raise DomainError("the tilt s must be non-negative")
        lam = math.expm1(-s) if cut is not None else 0.0
        start = int(cut) if cut is not None else 1

        def moment(shift: int, r: float) -> float:
            total = weighted_sum(model, r, shift)
            if lam:
                total += lam * weighted_sum(model, r, shift, start=start)
            return total

        def d1(r):
            return moment(0, r) / r

        def d2(r):
            return (moment(1, r) - moment(0, r)) / r**2

        def d3(r):
            return (moment(2, r) - 3 * moment(1, r) + 2 * moment(0, r)) / r**3

        def gc(z: np.ndarray) -> np.ndarray:
            r = float(np.max(np.abs(z)))
            K = tail_cutoff(model, r, 1e-14)
            out = np.zeros(z.shape, dtype=complex)
            for lo in range(1, K + 1, 2048):
                k = np.arange(lo, min(K, lo + 2047) + 1)
                c = model.thetas(k) / k
                if lam:
                    c = c * np.where(k >= start, 1.0 + lam, 1.0)
                out += np.exp(np.outer(np.log(z), k)) @ c
            return out

        rho = 1.0 if math.isinf(model.max_index) else math.inf
        label = model.describe() + (f" tilted s={s:g} beyond {start}" if lam else "")
        return cls(lambda r: moment(-1, r), d1, d2, d3, rho, label, gc)


@dataclass(frozen=True)
class SaddleReport:
    n: int
    r_n: float
    a: float
    b: float
    residual: float
    g_value: float
    delta_n: float = math.nan
    gamma: float = math.nan
    admissible: bool = False
    flags: dict = field(default_factory=dict)
    G_n_estimate: float = math.nan
    label: str = ""

    @property
    def within_budget(self) -> bool:
        return self.residual <= math.sqrt(self.b)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["within_budget"] = self.within_budget
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SaddleReport":
        d = json.loads(text)
        d.pop("within_budget", None)
        return cls(**{k: (math.nan if v is None else v) for k, v in d.items()})


def _bracket(g: AdmissibleFunction, n: float) -> tuple[float, float]:
    lo = None
    for k in range(1, 64):
        r = g.rho * (1.0 - 2.0**-k) if math.isfinite(g.rho) else 2.0 ** (k - 32)
        if g.a(r) >= n:
            return (lo if lo is not None else r / 2.0 if math.isinf(g.rho) else 0.0), r
        lo = r
    raise NoSaddleError(f"a(r) = r g'(r) stays below n={n} on (0, {g.rho}) for {g.label}")


def solve_saddle(g: AdmissibleFunction, n: int) -> SaddleReport:
    """r_n with a(r_n) = n, by bisection."""
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")
    lo, hi = _bracket(g, n)
    r = optimize.bisect(lambda t: g.a(t) - n, max(lo, 1e-300), hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                        maxiter=2000)
    residual = abs(g.a(r) - n)
    if residual > min(1.0, 1e-9 * n):
        raise NoSaddleError(f"bisection residual {residual:.3g} too large for n={n}")
    return SaddleReport(n=int(n), r_n=r, a=g.a(r), b=g.b(r), residual=residual, g_value=g.g(r), label=g.label)


def _slopes(ns, values) -> np.ndarray:
    return np.diff(np.log(values)) / np.diff(np.log(ns))


def check_admissibility(g: AdmissibleFunction, n: int, r_n: float | None = None) -> SaddleReport:
    """Numeric diagnostic of the four admissibility clauses over the ladder {n, 2n, 4n}.

    delta_m = m^-gamma is scanned over ``GAMMA_GRID``.  Width: delta^2 b grows
    along the ladder.  Approximation: delta^3 (r g' + 3 r^2 g'' + r^3 g''')
    decays.  Divergence: b grows.  Monotonicity: Re g(r e^{i phi}) never exceeds
    its value at phi = delta on a 256-point phi grid.
    """
    base = solve_saddle(g, n)
    if r_n is not None:
        base = SaddleReport(n=n, r_n=r_n, a=g.a(r_n), b=g.b(r_n), residual=abs(g.a(r_n) - n),
                            g_value=g.g(r_n), label=g.label)
    ladder = np.array([n, 2 * n, 4 * n], dtype=float)
    radii = [base.r_n] + [solve_saddle(g, int(m)).r_n for m in ladder[1:]]
    bs = np.array([g.b(r) for r in radii])
    thirds = np.array([g.third(r) for r in radii])

    best = None
    for gam in GAMMA_GRID:
        delta = ladder**-gam
        width = _slopes(ladder, delta**2 * bs)
        approx = _slopes(ladder, delta**3 * thirds)
        margin = min(width.min(), -approx.max())
        if best is None or margin > best[0]:
            best = (margin, gam, bool(np.all(width > 0)), bool(np.all(approx < 0)))
    _, gam, width_ok, approx_ok = best
    delta_n = float(n) ** -gam
    divergence_ok = bool(np.all(np.diff(bs) > 0))

    monotone_ok = True
    if g.g_complex is not None:
        phi = np.linspace(-math.pi, math.pi, PHI_POINTS, endpoint=False) + math.pi / PHI_POINTS
        outside = phi[np.abs(phi) > delta_n]
        z = base.r_n * np.exp(1j * np.concatenate([[delta_n, -delta_n], outside]))
        vals = np.real(g.g_complex(z))
        edge = max(vals[0], vals[1])
        monotone_ok = bool(np.all(vals[2:] <= edge + 1e-12 * abs(edge)))
    flags = {"approximation": approx_ok, "divergence": divergence_ok, "width": width_ok, "monotonicity": monotone_ok}
    admissible = all(flags.values()) and base.within_budget
    return SaddleReport(n=base.n, r_n=base.r_n, a=base.a, b=base.b, residual=base.residual, g_value=base.g_value,
                        delta_n=delta_n, gamma=gam, admissible=admissible, flags=flags,
                        G_n_estimate=_log_G(base), label=g.label)


def _log_G(rep: SaddleReport) -> float:
    return -rep.n * math.log(rep.r_n) - 0.5 * math.log(rep.b) - 0.5 * math.log(2 * math.pi) + rep.g_value


def coefficient_asymptotic(g: AdmissibleFunction, n: int) -> float:
    """log G_n from the leading saddle-point formula."""
    return _log_G(solve_saddle(g, n))


# ---------------------------------------------------------------- limit theory

def limit_shape(alpha: float, x: float) -> float:
    """w_inf(x) = Gamma(alpha, x) / Gamma(alpha + 1)."""
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    return specfun.upper_gamma(alpha, x) / math.gamma(alpha + 1.0)


CONVENTIONS = ("theorem", "proof")


def shape_and_variance(alpha: float, x: float, convention: str = "proof") -> tuple[float, float]:
    """(w_inf(x), sigma^2(x)).  The ``theorem`` convention halves the subtracted square."""
    if convention not in CONVENTIONS:
        raise DomainError(f"convention must be one of {CONVENTIONS}")
    if x < 0:
        raise DomainError("x must be non-negative")
    w = limit_shape(alpha, x)
    sq = specfun.upper_gamma(alpha + 1.0, x) ** 2 / (math.gamma(alpha + 1.0) * math.gamma(alpha + 2.0))
    return w, w - (sq / 2.0 if convention == "theorem" else sq)


def increment_covariance_theory(alpha: float, cuts, sign: int = 1) -> np.ndarray:
    """Limiting covariance of the increments w(x_i) - w(x_{i+1}), x_{l+1} = inf, scaled by n-bar.

    Off-diagonal entries carry ``sign`` (+1 for the closed form, -1 for the conditioned
    reading); the diagonal holds the increment variance.
    """
    cuts = [float(c) for c in cuts]
    if any(b < a for a, b in zip(cuts, cuts[1:])):
        raise DomainError("cuts must be ascending")
    edges = cuts + [math.inf]
    g1 = math.gamma(alpha + 1.0)
    norm = g1 * math.gamma(alpha + 2.0)
    big = np.array([specfun.upper_gamma(alpha + 1.0, a) - specfun.upper_gamma(alpha + 1.0, b)
                    for a, b in zip(edges, edges[1:])])
    small = np.array([specfun.upper_gamma(alpha, a) - specfun.upper_gamma(alpha, b)
                      for a, b in zip(edges, edges[1:])])
    out = sign * np.outer(big, big) / norm
    np.fill_diagonal(out, small / g1 - big**2 / norm)
    return out


# ---- truncated formal power series helpers (ascending coefficients)

def _mul(a, b, M):
    return np.convolve(a, b)[: M + 1]


def _binom_series(beta: float, M: int) -> np.ndarray:
    """(1 + e)^beta."""
    out = np.ones(M + 1)
    for k in range(1, M + 1):
        out[k] = out[k - 1] * (beta - k + 1) / k
    return out


def _compose(outer, inner, M):
    res = np.zeros(M + 1)
    for c in outer[::-1]:
        res = _mul(res, inner, M)
        res[0] += c
    return res


def _divide(a, b, M):
    q = np.zeros(M + 1)
    for k in range(M + 1):
        q[k] = (a[k] - np.dot(q[:k], b[k:0:-1])) / b[0]
    return q


def _revert(f, M):
    g = np.zeros(M + 1)
    g[1] = 1.0 / f[1]
    ident = np.zeros(M + 1)
    ident[1] = 1.0
    higher = f.copy()
    higher[:2] = 0.0
    for _ in range(M):
        g = (ident - _compose(higher, g, M)) / f[1]
    return g


def _psi_taylor(alpha: float, x: float, M: int) -> np.ndarray:
    """Taylor coefficients of psi(sigma) = lim log E[exp(-sigma W)] / n-bar, W = w_n(x n*).

    psi solves a one-dimensional variational problem: stationarity of
    u^-a/a + lam u^-a Gamma(a, x u)/Gamma(a+1) + u in u, lam = e^-sigma - 1.
    The envelope theorem gives dpsi/dlam = B(u*(lam)), B(u) = u^-a Gamma(a, x u)/Gamma(a+1).
    """
    N = M + 2
    g1 = math.gamma(alpha + 1.0)
    # G(e) = Gamma(alpha, x(1+e)); G' = -x^alpha e^-x (1+e)^(alpha-1) e^(-x e)
    expo = np.array([(-x) ** k / math.factorial(k) for k in range(N + 1)])
    h = _mul(_binom_series(alpha - 1.0, N), expo, N)
    G = np.zeros(N + 1)
    G[0] = specfun.upper_gamma(alpha, x)
    pref = x**alpha * math.exp(-x) if x > 0 else 0.0
    G[1:] = -pref * h[:N] / np.arange(1, N + 1)
    B = _mul(_binom_series(-alpha, N), G, N) / g1
    dB = B[1:] * np.arange(1, N + 1)
    dA1 = -_binom_series(-alpha - 1.0, N)
    dA1[0] += 1.0  # A'(1+e) + 1
    lam = -_divide(dA1[: M + 1], dB[: M + 1], M)
    eps = _revert(lam, M)
    dpsi = _compose(B[: M + 1], eps, M)
    Psi = np.zeros(M + 1)
    Psi[1:] = dpsi[:M] / np.arange(1, M + 1)
    inner = np.array([0.0] + [(-1.0) ** k / math.factorial(k) for k in range(1, M + 1)])
    return _compose(Psi, inner, M)


def psi_derivatives(alpha: float, x: float, M: int = 8) -> np.ndarray:
    """psi^(m)(0) for m = 0..M."""
    c = _psi_taylor(alpha, x, M)
    return c * np.array([math.factorial(k) for k in range(M + 1)], dtype=float)


def theorem_bracket(alpha: float, x: float, M: int = 8) -> np.ndarray:
    """[s^m], m = 0..M, of (1 - s A)^-alpha + (e^-s - 1) sum_k s^k/k! Gamma(alpha+k, x)/Gamma(alpha+1) (-A)^k,
    A = Gamma(alpha+1, x)/Gamma(alpha+2)."""
    A = specfun.upper_gamma(alpha + 1.0, x) / math.gamma(alpha + 2.0)
    first = np.array([math.exp(math.lgamma(alpha + m) - math.lgamma(alpha) - math.lgamma(m + 1)) * A**m
                      for m in range(M + 1)])
    g1 = math.gamma(alpha + 1.0)
    tail = np.array([specfun.upper_gamma(alpha + k, x) / g1 / math.factorial(k) * (-A) ** k if alpha + k > 0 else 0.0
                     for k in range(M + 1)])
    em1 = np.array([0.0] + [(-1.0) ** k / math.factorial(k) for k in range(1, M + 1)])
    return first + _mul(em1, tail, M)


CUMULANT_CONVENTIONS = ("theorem", "saddle")


def cumulant_prediction(alpha: float, x: float, n: float, m: int, j: int = 0, convention: str = "theorem") -> float:
    """Prediction for q_m, the m-th cumulant of -s* w_n(x n*), s* = s / sqrt(n-bar).

    ``theorem``: n-bar^(1 - m/2) [s^m] of the closed-form bracket (see theorem_bracket).
    ``saddle``: n-bar^(1 - m/2) psi^(m)(0) from the variational formula.
    """
    if not 2 <= m <= 8:
        raise DomainError(f"m must lie in [2, 8], got {m}")
    if convention not in CUMULANT_CONVENTIONS:
        raise DomainError(f"convention must be one of {CUMULANT_CONVENTIONS}")
    n_bar = n / length_scale(alpha, j, n)
    if convention == "theorem":
        coeff = theorem_bracket(alpha, x, m)[m]
    else:
        coeff = psi_derivatives(alpha, x, m)[m]
    return n_bar ** (1.0 - m / 2.0) * coeff


@dataclass(frozen=True)
class TheoryValues:
    """Limit-theory quantities for the polylog family with exponent alpha."""

    alpha: float
    j: int = 0

    def w_inf(self, x: float) -> float:
        return limit_shape(self.alpha, x)

    def sigma2(self, x: float, convention: str = "proof") -> float:
        return shape_and_variance(self.alpha, x, convention)[1]

    def increment_cov(self, cuts, sign: int = 1) -> np.ndarray:
        return increment_covariance_theory(self.alpha, cuts, sign)

    def kappa(self, m: int, x: float, n: float, convention: str = "theorem") -> float:
        return cumulant_prediction(self.alpha, x, n, m, self.j, convention)

    def lambda_coefficients(self, x: float, M: int = 8) -> np.ndarray:
        return theorem_bracket(self.alpha, x, M)

    @staticmethod
    def mu(model: WeightModel, t: float, threshold: float) -> float:
        """Poisson parameter sum_{l >= floor(threshold)} theta_l t^l / l of the grand-canonical profile."""
        return weighted_sum(model, t, -1, start=max(1, math.floor(threshold)))
