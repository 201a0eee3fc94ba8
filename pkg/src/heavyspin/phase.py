"""Phase objects of the single-monomial analysis.

For a p-body monomial with coupling H the large-n rate function of the
partition series is

    g(p, c, H) = 2c log H - 2c log(2c) + 2c + p c log(2c)
                 - ((2pc+1)/2) log(2pc+1),

whose stationarity equation in c is

    2 log H + (p-2) log(2c) - p log(2pc+1) = 0.

lambda_p(H) is the larger root (the series concentration location per unit n),
H_p* the coupling at which g(p, lambda_p(H), H) crosses zero (the free-energy
threshold), and f_p(H) the positive part of that maximum, equivalently
2 lambda - (1/2) log(1 + 2 p lambda).  The Gibbs spin magnitude on dominant
coordinates is t = 2 lambda / (2 p lambda + 1).

p = 2 collapses to closed forms lambda_2(H) = (H-1)/4, H_2* = 1,
f_2(H) = (H-1)/2 - (1/2) log H.

All functions depend on |H| only.  Roots are found by plain bisection on
provably monotone branches: the stationarity residual is decreasing in c to
the right of c = (p-2)/(4p) (where its derivative peaks), and
H -> g(p, lambda_p(H), H) is strictly increasing (envelope theorem, slope
2 lambda / H > 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

__all__ = [
    "PhaseTable", "PhaseDomainError", "CRITICAL_BAND",
    "g_value", "lambda_floor", "h_min", "lambda_p", "h_star",
    "f_p", "f_p_certified", "f_p_many", "t_magnitude", "phase_table",
]

# Inputs within this absolute distance of H_p* are treated as Critical by
# consumers (the limit statements hold outside an n^{-eps} neighborhood).
CRITICAL_BAND = 1e-6

_LAMBDA_ITERS = 200
_HSTAR_ITERS = 200


class PhaseDomainError(ValueError):
    """Coupling in the undefined region; carries the domain floor h_min."""

    def __init__(self, message: str, h_min_value: float):
        super().__init__(message)
        self.h_min = h_min_value


def g_value(p: int, c: float, H: float) -> float:
    """The rate function g(p,c,H); continuous extension g -> 0 as c -> 0+."""
    if c == 0.0:
        return 0.0
    if c < 0.0 or H <= 0.0:
        raise PhaseDomainError(f"need c >= 0 and H > 0, got c={c}, H={H}", 0.0)
    return (2.0 * c * math.log(H) - 2.0 * c * math.log(2.0 * c) + 2.0 * c
            + p * c * math.log(2.0 * c)
            - (2.0 * p * c + 1.0) / 2.0 * math.log(2.0 * p * c + 1.0))


def _g_prime(p: int, c: float, H: float) -> float:
    return 2.0 * math.log(H) + (p - 2) * math.log(2.0 * c) - p * math.log(2.0 * p * c + 1.0)


def lambda_floor(p: int) -> float:
    """(p-2)/(4p): the stationarity residual is decreasing right of this point."""
    return (p - 2) / (4.0 * p)


def h_min(p: int) -> float:
    """Domain floor of lambda_p for p >= 3: p^{p-1} / (2 (p-2)^{(p-2)/2}).

    For p = 2 the floor is 1 (lambda_2 is defined for |H| > 1).
    """
    if p == 2:
        return 1.0
    return p ** (p - 1) / (2.0 * (p - 2) ** ((p - 2) / 2.0))


def lambda_p(p: int, H: float) -> float:
    """Larger root of the stationarity equation; closed form (|H|-1)/4 at p=2.

    Bisection brackets [lambda_floor*(1+1e-12), doubling] on the decreasing
    branch; the returned root has residual below 1e-12.
    """
    if p < 2:
        raise PhaseDomainError(f"order must be >= 2, got {p}", 0.0)
    a = abs(H)
    floor = h_min(p)
    if a <= floor:
        raise PhaseDomainError(
            f"lambda_{p} undefined for |H| <= {floor:.6g} (got {a:.6g})", floor)
    if p == 2:
        return (a - 1.0) / 4.0
    lo = lambda_floor(p) * (1.0 + 1e-12)
    if _g_prime(p, lo, a) <= 0.0:
        raise PhaseDomainError(f"no root bracket above lambda_floor for H={a}", floor)
    hi = max(2.0 * lo, 1.0)
    while _g_prime(p, hi, a) > 0.0:
        hi *= 2.0
    for _ in range(_LAMBDA_ITERS):
        mid = 0.5 * (lo + hi)
        if _g_prime(p, mid, a) > 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    resid = _g_prime(p, root, a)
    if abs(resid) >= 1e-12:
        raise PhaseDomainError(f"lambda_{p}({a}) residual {resid:.3e} exceeds 1e-12", floor)
    return root


@lru_cache(maxsize=None)
def h_star(p: int) -> float:
    """Threshold H_p*: unique zero of H -> g(p, lambda_p(H), H) above h_min.

    Exactly 1 for p = 2.  The certified residual |f_p(H_p*)| is below 1e-9
    (checked here; the strict bound H_p* > h_min also certified).
    """
    if p < 2:
        raise PhaseDomainError(f"order must be >= 2, got {p}", 0.0)
    if p == 2:
        return 1.0
    floor = h_min(p)
    lo = floor * (1.0 + 1e-9)
    hi = 2.0 * lo
    psi = lambda H: g_value(p, lambda_p(p, H), H)
    if psi(lo) >= 0.0:
        raise PhaseDomainError(f"g already nonnegative at h_min for p={p}", floor)
    while psi(hi) < 0.0:
        hi *= 2.0
    for _ in range(_HSTAR_ITERS):
        mid = 0.5 * (lo + hi)
        if psi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    resid = psi(root)
    if abs(resid) >= 1e-9:
        raise PhaseDomainError(f"H_{p}* residual {resid:.3e} exceeds 1e-9", floor)
    if root <= floor:
        raise PhaseDomainError(f"H_{p}* = {root} at or below the domain floor {floor}", floor)
    return root


def f_p_certified(p: int, H: float) -> tuple[float, float]:
    """f_p(|H|) with a dual-form consistency certificate.

    Returns (value, gap) where value is the larger of the two displayed forms
    (g at the stationary point, and 2 lambda - (1/2) log(1+2p lambda)) and gap
    is their absolute difference.  Below H_p* both are defined to be 0.
    """
    a = abs(H)
    if a <= h_star(p):
        return 0.0, 0.0
    lam = lambda_p(p, a)
    via_g = g_value(p, lam, a)
    direct = 2.0 * lam - 0.5 * math.log(1.0 + 2.0 * p * lam)
    gap = abs(via_g - direct)
    # absolute 1e-9 at O(1) values; relative beyond (cancellation floor of the
    # g-form, whose terms grow like lambda * log H)
    if gap >= 1e-9 * max(1.0, abs(direct)):
        raise PhaseDomainError(f"f_{p} dual forms disagree by {gap:.3e}", h_min(p))
    return max(via_g, direct), gap


def f_p(p: int, H: float) -> float:
    """Limiting free-energy density of a single monomial; 0 below threshold."""
    return f_p_certified(p, H)[0]


def t_magnitude(p: int, h_eff: float) -> float:
    """Gibbs spin magnitude t = 2 lambda / (2 p lambda + 1); needs |h_eff| > H_p*.

    Satisfies 0 < p*t < 1 (p spins of magnitude t*n cannot exceed the radius).
    """
    a = abs(h_eff)
    if a <= h_star(p):
        raise PhaseDomainError(
            f"t undefined at |h_eff|={a:.6g} <= H_{p}*={h_star(p):.6g}", h_star(p))
    lam = lambda_p(p, a)
    return 2.0 * lam / (2.0 * p * lam + 1.0)


def f_p_many(p: int, h_values) -> "np.ndarray":
    """Vectorized f_p over an array of couplings (0 below threshold).

    Same bracketing bisection as lambda_p, run elementwise in numpy; used by
    the Monte Carlo regime loops where per-draw scalar solves would dominate
    the runtime.  Agrees with the certified scalar path to ~1e-13.
    """
    import numpy as np

    h = np.abs(np.asarray(h_values, dtype=float))
    out = np.zeros_like(h)
    mask = h > h_star(p)
    if not mask.any():
        return out
    a = h[mask]
    if p == 2:
        lam = (a - 1.0) / 4.0
    else:
        two_log_h = 2.0 * np.log(a)

        def resid(lam):
            return two_log_h + (p - 2) * np.log(2.0 * lam) - p * np.log(2.0 * p * lam + 1.0)

        lo = np.full(a.shape, lambda_floor(p) * (1.0 + 1e-12))
        hi = np.maximum(2.0 * lo, 1.0)
        for _ in range(1000):
            grow = resid(hi) > 0.0
            if not grow.any():
                break
            hi[grow] *= 2.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            pos = resid(mid) > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        lam = 0.5 * (lo + hi)
    out[mask] = 2.0 * lam - 0.5 * np.log1p(2.0 * p * lam)
    return out


@dataclass(frozen=True)
class PhaseTable:
    """Per-order phase constants with certified invariants."""

    p: int
    h_star: float
    lambda_floor: float
    h_min: float

    def __post_init__(self):
        if self.p == 2 and self.h_star != 1.0:
            raise PhaseDomainError("H_2* must be exactly 1", 1.0)
        if self.p >= 3 and not self.h_star > self.h_min:
            raise PhaseDomainError("H_p* must exceed the domain floor h_min", self.h_min)


@lru_cache(maxsize=None)
def phase_table(p: int) -> PhaseTable:
    return PhaseTable(p=p, h_star=h_star(p), lambda_floor=lambda_floor(p), h_min=h_min(p))
