"""Heavy-tailed coupling laws.

A law has tail P(|X| > t) = L(t) t^{-alpha} with 0 < alpha < 2 and L slowly
varying.  Two families are supported: L == 1 ("constant") and
L(t) = (log t)^gamma ("polylog").  The module provides the tail, its inverse
(used for sampling by inversion), the combinatorial normalization quantile

    b_{n,p} = inf { t : P(|X| > t) < C(n,p)^{-1} },

a Kolmogorov-Smirnov distance against the Frechet law exp(-x^{-alpha}) for
rescaled maxima, and an order-statistics envelope counter.

For the polylog family the raw tail (log t)^gamma t^{-alpha} need not reach 1
(its maximum over t is (gamma/alpha)^gamma e^{-gamma}, which is >= 1 only when
gamma >= e*alpha).  When the level-1 crossing exists on the decreasing branch
the law is continuous and tail_prob(t_floor) == 1; otherwise t_floor is the
start of the decreasing branch, max(e, e^{gamma/alpha}), and the law carries
an atom there of mass 1 - tail_prob(t_floor).  Either way the displayed tail
form holds for every t >= t_floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

__all__ = [
    "TailLaw", "OrderedSample", "EnvelopeReport", "TailDomainError",
    "tail_prob", "quantile", "quantile_b", "log_comb", "sample",
    "frechet_gof", "sample_frechet", "order_stat_envelope",
]

_BISECT_ITERS = 80  # inverse-tail bisection; exactness over speed


class TailDomainError(ValueError):
    """Argument outside the law's domain (t below t_floor, bad exponent...)."""


@dataclass(frozen=True)
class TailLaw:
    """Heavy-tailed law with exponent alpha in (0,2) and a slowly varying L."""

    alpha: float
    family: str = "constant"
    gamma: float = 0.0
    t_floor: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise TailDomainError(f"tail exponent out of (0,2): {self.alpha}")
        if self.family not in ("constant", "polylog"):
            raise TailDomainError(f"unknown slowly-varying family: {self.family!r}")
        if self.family == "constant" and self.gamma != 0.0:
            raise TailDomainError("constant family takes no gamma")
        object.__setattr__(self, "t_floor", self._solve_t_floor())

    def _solve_t_floor(self) -> float:
        if self.family == "constant":
            return 1.0
        # decreasing branch starts at e^{gamma/alpha} for gamma > 0, at 1 otherwise;
        # L is only evaluated for t > e.
        start = max(math.e, math.exp(self.gamma / self.alpha) if self.gamma > 0 else math.e)
        if _polylog_log_tail(start, self.alpha, self.gamma) < 0.0:
            return start  # subcritical: tail never reaches 1; atom at t_floor
        lo, hi = math.log(start), math.log(start) + 1.0
        while _polylog_log_tail(math.exp(hi), self.alpha, self.gamma) > 0.0:
            hi *= 2.0
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            if _polylog_log_tail(math.exp(mid), self.alpha, self.gamma) > 0.0:
                lo = mid
            else:
                hi = mid
        return math.exp(0.5 * (lo + hi))


def _polylog_log_tail(t, alpha, gamma):
    """log of (log t)^gamma t^{-alpha}; t must be > 1."""
    t = np.asarray(t, dtype=float)
    return gamma * np.log(np.log(t)) - alpha * np.log(t)


def tail_prob(law: TailLaw, t):
    """P(|X| > t) = L(t) t^{-alpha}, clamped to [0, 1]; t >= t_floor required."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < law.t_floor * (1.0 - 1e-12)):
        raise TailDomainError(f"t below t_floor={law.t_floor}")
    t_arr = np.maximum(t_arr, law.t_floor)
    if law.family == "constant":
        out = t_arr ** (-law.alpha)
    else:
        out = np.exp(_polylog_log_tail(t_arr, law.alpha, law.gamma))
    out = np.clip(out, 0.0, 1.0)
    return float(out) if np.isscalar(t) else out


def quantile(law: TailLaw, u):
    """Inverse tail: smallest t >= t_floor with tail_prob(t) <= u, u in (0,1].

    This is the sampling transform |X| = quantile(U).  Values of u at or above
    tail_prob(t_floor) map to t_floor (the atom, when the law has one).
    """
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr <= 0.0) or np.any(u_arr > 1.0):
        raise TailDomainError("u must lie in (0, 1]")
    if law.family == "constant":
        out = u_arr ** (-1.0 / law.alpha)
    else:
        out = np.full_like(u_arr, law.t_floor)
        cap = tail_prob(law, law.t_floor)
        need = u_arr < cap
        if need.any():
            tgt = np.log(u_arr[need])
            lo = np.full(tgt.shape, math.log(law.t_floor))
            hi = lo + 1.0
            while True:
                over = _polylog_log_tail(np.exp(hi), law.alpha, law.gamma) > tgt
                if not over.any():
                    break
                hi[over] = lo[over] + 2.0 * (hi[over] - lo[over])
            for _ in range(_BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                above = _polylog_log_tail(np.exp(mid), law.alpha, law.gamma) > tgt
                lo = np.where(above, mid, lo)
                hi = np.where(above, hi, mid)
            out[need] = np.exp(0.5 * (lo + hi))
    return float(out[0]) if np.isscalar(u) else out


def log_comb(n: int, p: int) -> float:
    """ln C(n,p) via log-gamma (no overflow)."""
    if not 0 <= p <= n:
        raise TailDomainError(f"need 0 <= p <= n, got n={n}, p={p}")
    return float(gammaln(n + 1) - gammaln(p + 1) - gammaln(n - p + 1))


def quantile_b(law: TailLaw, n: int, p: int) -> float:
    """Normalization quantile b_{n,p} = inf{t : tail_prob(t) < C(n,p)^{-1}}.

    Constant family: closed form C(n,p)^{1/alpha}.  Polylog: bisection on the
    monotone tail to relative tolerance 1e-12.  C(n,p) is handled in the log
    domain throughout; the result is always finite (an OverflowError is raised
    in the float-unrepresentable regime rather than returning inf).
    """
    if not 2 <= p <= n:
        raise TailDomainError(f"need 2 <= p <= n, got n={n}, p={p}")
    lc = log_comb(n, p)
    if lc == 0.0:
        return law.t_floor
    if law.family == "constant":
        log_b = lc / law.alpha
        if log_b > 700.0:
            raise OverflowError(f"b_{{n,p}} exceeds float range: ln b = {log_b:.3g}")
        return math.exp(log_b)
    tgt = -lc
    if _polylog_log_tail(law.t_floor, law.alpha, law.gamma) < tgt:
        return law.t_floor
    lo, hi = math.log(law.t_floor), math.log(law.t_floor) + 1.0
    while _polylog_log_tail(math.exp(hi), law.alpha, law.gamma) > tgt:
        hi = lo + 2.0 * (hi - lo)
        if hi > 700.0:
            raise OverflowError("b_{n,p} exceeds float range")
    while hi - lo > 1e-13 * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if _polylog_log_tail(math.exp(mid), law.alpha, law.gamma) > tgt:
            lo = mid
        else:
            hi = mid
    return math.exp(0.5 * (lo + hi))


def sample(law: TailLaw, rng: np.random.Generator, count: int) -> np.ndarray:
    """i.i.d. signed draws: |X| by inverse-tail sampling, fair independent signs."""
    if count < 1:
        raise TailDomainError("count must be >= 1")
    u = 1.0 - rng.random(count)          # uniform on (0, 1]
    mags = np.atleast_1d(quantile(law, u))
    signs = rng.integers(0, 2, size=count) * 2 - 1
    return mags * signs


def frechet_gof(rescaled_maxima, alpha: float) -> float:
    """KS distance between the empirical CDF and Frechet F(x)=exp(-x^{-alpha}).

    Inputs are per-trial maxima already divided by b_{n,p}.
    """
    x = np.sort(np.asarray(rescaled_maxima, dtype=float))
    if x.size == 0:
        raise TailDomainError("empty sample")
    f = np.where(x > 0, np.exp(-np.maximum(x, 1e-300) ** (-alpha)), 0.0)
    i = np.arange(1, x.size + 1, dtype=float)
    return float(max(np.max(np.abs(f - i / x.size)),
                     np.max(np.abs(f - (i - 1) / x.size))))


def sample_frechet(alpha: float, rng: np.random.Generator, count: int) -> np.ndarray:
    """Exact Frechet(alpha) draws by inversion of exp(-x^{-alpha})."""
    u = 1.0 - rng.random(count)
    return (-np.log(u)) ** (-1.0 / alpha)


@dataclass(frozen=True)
class OrderedSample:
    """Descending |H| order statistics (post b_{n,p} normalization) with signs."""

    values: np.ndarray
    raw_signs: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size and (np.any(np.diff(v) > 1e-15) or np.any(v < 0)):
            raise TailDomainError("order statistics must be nonnegative and nonincreasing")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "raw_signs", np.asarray(self.raw_signs))


@dataclass(frozen=True)
class EnvelopeReport:
    violations: int
    first_violation: int | None


def order_stat_envelope(sample: OrderedSample, eps0: float, alpha: float,
                        i_min: int, n: int) -> EnvelopeReport:
    """Count order statistics above the high-probability envelope n^{eps0} i^{-1/alpha}.

    Indices are 1-based ranks; only ranks i >= i_min are inspected.
    """
    if eps0 <= 0 or i_min < 1:
        raise TailDomainError("need eps0 > 0 and i_min >= 1")
    v = sample.values
    ranks = np.arange(1, v.size + 1, dtype=float)
    env = n ** eps0 * ranks ** (-1.0 / alpha)
    bad = (v >= env) & (ranks >= i_min)
    idx = np.flatnonzero(bad)
    return EnvelopeReport(int(bad.sum()), int(idx[0] + 1) if idx.size else None)
