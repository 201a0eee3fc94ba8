"""Non-Intersecting Monomial (NIM) models: predictions and checks.

A NIM spec is a list of (coefficient, index set) monomials whose index sets
are pairwise disjoint.  The analytic layer here turns a spec into records:
free-energy predictions (below-threshold product/quadratic branches and the
dominant-term branch), concentration windows, Gibbs-geometry predictions
(spin magnitude t, 2^{p-1} components, achievable overlap support, RSB level,
ultrametricity-violation flag), and the zero-overlap prediction.  Empirical
validation of these records lives in the sampler module; predictions are
data, not verdicts.

The module also carries the exact multi-term partition series (a direct
multi-index Taylor sum over even exponents) used as the finite-n oracle for
the prediction formulas at small n, and a Monte Carlo check of the
non-intersecting product bound E[exp(sum)] <= prod E[exp(.)].
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import phase, series
from .moments import log_abs_moment

__all__ = [
    "NimSpec", "NimValidation", "NimPrediction", "GeometryPrediction",
    "WindowDescription", "ProductBoundReport",
    "CriticalCouplingError", "MDTieError", "NoDominantError", "AboveThresholdError",
    "validate_nim", "nim_free_energy_prediction", "nim_log_partition_series",
    "product_bound_check", "concentration_sets", "geometry_prediction",
    "overlap_zero_prediction", "m_plus", "achievable_overlap_distances",
]

F_TIE_TOL = 1e-9


class CriticalCouplingError(ValueError):
    """An effective coupling sits in the critical band around its threshold."""


class MDTieError(ValueError):
    """Two dominant terms tie in f-value (multiple-dominance regime, out of scope)."""


class NoDominantError(ValueError):
    """Operation requires at least one above-threshold term."""


class AboveThresholdError(ValueError):
    """Operation requires every term below threshold."""


@dataclass(frozen=True)
class NimSpec:
    """Pairwise-disjoint monomials (coefficient, spin-index set) in dimension n."""

    terms: tuple[tuple[float, frozenset[int]], ...]
    n: int

    @staticmethod
    def of(terms, n: int) -> "NimSpec":
        tt = tuple((float(c), frozenset(int(i) for i in idx)) for c, idx in terms)
        return NimSpec(tt, int(n))

    def orders(self) -> list[int]:
        return [len(idx) for _, idx in self.terms]


@dataclass(frozen=True)
class NimValidation:
    ok: bool
    violations: tuple[tuple[int, int, frozenset[int]], ...]


def validate_nim(spec: NimSpec) -> NimValidation:
    """Report every intersecting pair (defining property of a NIM model)."""
    bad = []
    for i in range(len(spec.terms)):
        for j in range(i + 1, len(spec.terms)):
            shared = spec.terms[i][1] & spec.terms[j][1]
            if shared:
                bad.append((i, j, shared))
    used = sum(len(idx) for _, idx in spec.terms)
    if used > spec.n and not bad:
        raise ValueError(f"index sets use {used} spins but n={spec.n}")
    return NimValidation(not bad, tuple(bad))


def _classify_terms(spec: NimSpec, beta: float) -> list[str]:
    out = []
    for c, idx in spec.terms:
        out.append(series.classify_phase(len(idx), beta * c))
    return out


@dataclass(frozen=True)
class NimPrediction:
    """Free-energy prediction record for a NIM spec at inverse temperature beta."""

    kind: str                      # "all_below" | "dominant"
    p_min: int | None
    log_z: float | None            # total log Z (below-threshold branches)
    log_z_scale: str               # human-readable scale of the prediction
    free_energy_per_n: float | None = None   # f_{p*} in the dominant branch
    dominant_term: int | None = None
    dominant_p: int | None = None
    runner_up_gap: float | None = None


def nim_free_energy_prediction(spec: NimSpec, beta: float) -> NimPrediction:
    """Analytic free-energy prediction (product/quadratic below, f_p* above).

    Below threshold: with smallest order 2 the total log Z is
    sum_i -0.5 log(1 - (beta H_i)^2) over the 2-spin terms; with smallest
    order q >= 3 it is 0.5 n^{2-q} sum (beta H_i)^2 over the q-spin terms.
    Any above-threshold term switches to (1/n) log Z -> max f; a tie within
    1e-9 is the multiple-dominance regime and is refused.
    """
    if not spec.terms:
        return NimPrediction("all_below", None, 0.0, "empty spec: Z = 1")
    kinds = _classify_terms(spec, beta)
    for t, k in enumerate(kinds):
        if k == "critical":
            c, idx = spec.terms[t]
            raise CriticalCouplingError(
                f"term {t} (p={len(idx)}, beta*H={beta * c:.9g}) lies within "
                f"{phase.CRITICAL_BAND} of H_p*; classification refused")
    above = [t for t, k in enumerate(kinds) if k == "above"]
    if above:
        fvals = {t: phase.f_p(len(spec.terms[t][1]), beta * spec.terms[t][0]) for t in above}
        order = sorted(fvals, key=fvals.get, reverse=True)
        best = order[0]
        gap = fvals[best] - (fvals[order[1]] if len(order) > 1 else 0.0)
        if len(order) > 1 and gap < F_TIE_TOL:
            raise MDTieError(f"terms {best} and {order[1]} tie in f within {F_TIE_TOL}")
        return NimPrediction(
            "dominant", None, None, "(1/n) log Z -> f_{p*}(beta H*)",
            free_energy_per_n=fvals[best], dominant_term=best,
            dominant_p=len(spec.terms[best][1]), runner_up_gap=gap)
    p_min = min(spec.orders())
    if p_min == 2:
        tot = 0.0
        for c, idx in spec.terms:
            if len(idx) == 2:
                x = beta * c
                tot += -0.5 * math.log(1.0 - x * x)
        return NimPrediction("all_below", 2, tot, "log Z = sum of 2-spin product terms")
    coef = 0.5 * sum((beta * c) ** 2 for c, idx in spec.terms if len(idx) == p_min)
    return NimPrediction("all_below", p_min, coef * spec.n ** (2 - p_min),
                         f"log Z = 0.5 n^(2-{p_min}) sum (beta H)^2")


def nim_log_partition_series(spec: NimSpec, beta: float, cap: int = 20,
                             rel_tol: float = 1e-8) -> float:
    """Exact log Z of a NIM spec by multi-index Taylor summation.

    Only even exponent tuples contribute (disjoint supports make odd signed
    sphere moments vanish).  Intended as a finite-n oracle for a handful of
    below-threshold terms; the index cap auto-extends until the outermost
    shell is negligible.
    """
    val = validate_nim(spec)
    if not val.ok:
        raise ValueError(f"spec has intersecting terms: {val.violations}")
    k = len(spec.terms)
    if k == 0:
        return 0.0
    if k > 4:
        raise ValueError("multi-index oracle limited to <= 4 terms")
    n = spec.n
    coefs = [beta * c for c, _ in spec.terms]
    ps = spec.orders()
    while True:
        if (cap + 1) ** k > 4_000_000:
            raise ValueError("multi-index oracle budget exceeded; reduce terms or cap")
        log_sum = -np.inf
        shell_max = -np.inf
        for m in itertools.product(range(cap + 1), repeat=k):
            s = sum(2 * mi * p for mi, p in zip(m, ps))
            lt = log_abs_moment(n - 1) - log_abs_moment(s + n - 1)
            for mi, c, p in zip(m, coefs, ps):
                if mi:
                    lt += (2 * mi * math.log(abs(c) * n) - math.lgamma(2 * mi + 1)
                           + p * log_abs_moment(2 * mi))
            log_sum = np.logaddexp(log_sum, lt)
            if max(m) == cap:
                shell_max = max(shell_max, lt)
        if shell_max < log_sum + math.log(rel_tol) - math.log((cap + 1) ** k):
            return float(log_sum)
        cap += 6


@dataclass(frozen=True)
class ProductBoundReport:
    mc_log: float
    mc_se: float
    product_log: float
    margin: float          # product_log - mc_log, nonnegative up to MC noise
    ok: bool


def product_bound_check(spec: NimSpec, mc_samples: int,
                        rng: np.random.Generator) -> ProductBoundReport:
    """MC check of E[exp(sum H_I sigma_I n^{-(p-2)/2})] <= prod of factors.

    Each right-hand factor is evaluated by the exact single-monomial series;
    the left side by plain Monte Carlo on the sphere (n <= 20 scale).
    """
    if spec.n > 20:
        raise ValueError("product bound check is exact/MC-verifiable for n <= 20 only")
    val = validate_nim(spec)
    if not val.ok:
        raise ValueError(f"spec has intersecting terms: {val.violations}")
    n = spec.n
    prod_log = sum(series.log_partition_series(n, len(idx), c).log_sum
                   if c != 0.0 else 0.0
                   for c, idx in spec.terms)
    g = rng.standard_normal((mc_samples, n))
    g *= math.sqrt(n) / np.linalg.norm(g, axis=1, keepdims=True)
    e = np.zeros(mc_samples)
    for c, idx in spec.terms:
        p = len(idx)
        cols = sorted(idx)
        e += c * n ** (-(p - 2) / 2.0) * np.prod(g[:, cols], axis=1)
    m = e.max()
    w = np.exp(e - m)
    mc_log = float(m + np.log(w.mean()))
    se = float(w.std() / w.mean() / math.sqrt(mc_samples))
    margin = prod_log - mc_log
    return ProductBoundReport(mc_log, se, prod_log, margin, margin >= -3.0 * se)


@dataclass(frozen=True)
class WindowDescription:
    term_index: int
    p: int
    lam: float
    lo: float
    hi: float
    kind: str  # "A" for p >= 3 terms, "B" for 2-spin terms


def concentration_sets(spec: NimSpec, beta: float, eps: float) -> tuple[WindowDescription, ...]:
    """Exponent windows [lambda n (1-eps), lambda n (1+eps)] per above-threshold term."""
    out = []
    for t, (c, idx) in enumerate(spec.terms):
        p = len(idx)
        if series.classify_phase(p, beta * c) == "above":
            lam = phase.lambda_p(p, abs(beta * c))
            out.append(WindowDescription(
                t, p, lam, lam * spec.n * (1 - eps), lam * spec.n * (1 + eps),
                "B" if p == 2 else "A"))
    return tuple(out)


def m_plus(p: int, sign: int = 1) -> list[tuple[int, ...]]:
    """Sign patterns xi in {+-1}^p with sign * xi_1...xi_p > 0 (2^{p-1} of them)."""
    if sign == 0:
        raise ValueError("sign must be nonzero")
    s = 1 if sign > 0 else -1
    return [xi for xi in itertools.product((-1, 1), repeat=p)
            if s * math.prod(xi) > 0]


def achievable_overlap_distances(p: int) -> list[int]:
    """Hamming distances realized between pairs of M+ patterns (the even d's)."""
    pats = m_plus(p)
    ds = {sum(a != b for a, b in zip(x, y)) for x in pats for y in pats}
    return sorted(ds)


@dataclass(frozen=True)
class GeometryPrediction:
    """Gibbs-geometry prediction for a single-dominant NIM model.

    overlap_support holds the achievable full-overlap values t*(p-2d) over
    even Hamming distances d between M+ patterns; the vanishing contribution
    of the non-dominant coordinates is the separate restricted_overlap = 0.
    """

    t: float
    p_dom: int
    dominant_term: int
    component_count: int
    overlap_support: tuple[float, ...]
    restricted_overlap: float
    rsb_level: int
    ultrametric_violation_expected: bool


def geometry_prediction(spec: NimSpec, beta: float) -> GeometryPrediction:
    """Fill the geometry record from the unique dominant above-threshold term."""
    pred = nim_free_energy_prediction(spec, beta)  # raises on critical/MD tie
    if pred.kind != "dominant":
        raise NoDominantError("geometry prediction requires an above-threshold term")
    t_idx = pred.dominant_term
    c, idx = spec.terms[t_idx]
    p = len(idx)
    t = phase.t_magnitude(p, beta * c)
    support = tuple(sorted({t * (p - 2 * d) for d in achievable_overlap_distances(p)},
                           reverse=True))
    return GeometryPrediction(
        t=t, p_dom=p, dominant_term=t_idx, component_count=2 ** (p - 1),
        overlap_support=support, restricted_overlap=0.0,
        rsb_level=p // 2, ultrametric_violation_expected=(p >= 4))


@dataclass(frozen=True)
class OverlapZeroPrediction:
    overlap_converges_to_zero: bool
    second_moment_scale: str


def overlap_zero_prediction(spec: NimSpec, beta: float) -> OverlapZeroPrediction:
    """R_{1,2} -> 0 prediction; only valid when every term is below threshold."""
    if spec.terms:
        kinds = _classify_terms(spec, beta)
        if any(k != "below" for k in kinds):
            raise AboveThresholdError("zero-overlap prediction needs all terms below threshold")
    return OverlapZeroPrediction(True, "<R^2> = O(n^-eps)")
