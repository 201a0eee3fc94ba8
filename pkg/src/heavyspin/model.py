"""Full heavy-tailed mixed p-spin model: sampling, classification, diagnostics.

The Hamiltonian is  H_n(sigma) = sum_p alpha(p) sum_I H_{I,p} n^{-(p-2)/2}
sigma_I  with couplings H_{I,p} = H'_{I,p} / b_{n,p} drawn i.i.d. from a
heavy-tailed law and normalized by the combinatorial quantile b_{n,p}.  The
sampled disorder is classified into the all-subcritical event F1 or a
dominant-term event Fdom(p) by comparing the effective couplings
beta*alpha(p)*H_{1,p} against the per-order thresholds, with the dominant
term required to win the f-comparison by a finite-n guard (default 10/n in
f-units; the limit statements only give n^{-eps} margins).

Coupling storage is top-K per order plus a bulk summary (sum of squared
normalized couplings beyond rank K and their count): the top order statistics
are sampled exactly through the ranked-uniform (Renyi) representation
U_(k) = Gamma_k / Gamma_{N+1}, so astronomically many couplings never need to
be materialized, while every downstream consumer only reads the top list and
the bulk sum of squares.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import nim, phase, series, streams, tails
from .graphs import MonomialGraph, build_graph

__all__ = [
    "MixtureProfile", "CouplingBlock", "CouplingTensor", "RegimeReport",
    "GseResult", "RegimeProbabilities", "TuneResult", "TailPartRow",
    "EXACT_LIMIT", "sample_model", "planted_tensor", "classify_regime",
    "build_monomial_graph", "gse_analytic", "regime_probabilities",
    "frechet_p1_quadrature", "tune_profile", "tail_part_diagnostics",
]

EXACT_LIMIT = 1_000_000   # draw all C(n,p) couplings at or below this count
DEFAULT_F_GUARD = 10.0    # dominance guard in f-units is DEFAULT_F_GUARD / n


@dataclass(frozen=True)
class MixtureProfile:
    """Mixture coefficients alpha(p) and inverse temperature beta.

    The growth condition sum alpha(p)(1+eps)^p < inf is automatic on finite
    support; the certificate value is recorded for documentation.
    """

    alphas: dict[int, float]
    beta: float
    growth_margin: float = 1.0
    growth_certificate: float = field(init=False)

    def __post_init__(self):
        clean = {int(p): float(a) for p, a in self.alphas.items() if a != 0.0}
        if not clean:
            raise ValueError("no interactions: every alpha(p) is zero")
        if any(p < 2 for p in clean):
            raise ValueError("interaction orders must be >= 2")
        if any(a < 0 for a in clean.values()):
            raise ValueError("alpha(p) must be nonnegative")
        if not self.beta > 0:
            raise ValueError("inverse temperature must be positive")
        object.__setattr__(self, "alphas", dict(sorted(clean.items())))
        cert = sum(a * (1.0 + self.growth_margin) ** p for p, a in clean.items())
        object.__setattr__(self, "growth_certificate", cert)

    @property
    def support(self) -> list[int]:
        return list(self.alphas)

    @property
    def p_min(self) -> int:
        return min(self.alphas)


@dataclass(frozen=True)
class CouplingBlock:
    """Per-order coupling storage: top slice (sorted by |H| desc) + bulk summary."""

    p: int
    indices: np.ndarray      # (m, p) int, aligned with values
    values: np.ndarray       # (m,) float, signed, |values| nonincreasing
    total_count: int         # C(n, p)
    bulk_sq: float           # sum of squared normalized couplings beyond the stored m
    bulk_count: int
    mode: str                # "exact" | "streamed"

    def __post_init__(self):
        v = np.abs(self.values)
        if v.size > 1 and np.any(np.diff(v) > 1e-12 * np.maximum(v[:-1], 1.0)):
            raise ValueError("stored couplings must be sorted by |H| descending")

    @property
    def stored(self) -> int:
        return int(self.values.size)

    def h1(self) -> float:
        return float(self.values[0]) if self.values.size else 0.0

    def sum_sq(self) -> float:
        return float(np.sum(self.values ** 2)) + self.bulk_sq

    def tail_sq(self, from_rank: int) -> float:
        """Sum of squared couplings with rank > from_rank (1-based ranks)."""
        stored_part = float(np.sum(self.values[from_rank:] ** 2)) if from_rank < self.stored else 0.0
        return stored_part + self.bulk_sq


@dataclass(frozen=True)
class CouplingTensor:
    n: int
    k: int
    blocks: dict[int, CouplingBlock]
    law_alpha: float | None = None
    seed: int | None = None

    @property
    def orders(self) -> list[int]:
        return sorted(self.blocks)

    def block(self, p: int) -> CouplingBlock:
        return self.blocks[p]


def _bulk_sq_quadrature(law: tails.TailLaw, u_hi: float, count: int, b: float) -> float:
    """E-approximation of sum_{ranks > K} H^2: count * E[q(U)^2 | U > u_hi] / b^2."""
    if count <= 0 or u_hi >= 1.0:
        return 0.0
    if law.family == "constant":
        # integral of u^{-2/alpha} on (u_hi, 1), closed form (exponent < 0 for alpha < 2)
        ex = 1.0 - 2.0 / law.alpha
        integral = (1.0 - u_hi ** ex) / ex
    else:
        integral, _ = integrate.quad(lambda u: tails.quantile(law, u) ** 2, u_hi, 1.0,
                                     limit=200)
    mean_sq = integral / (1.0 - u_hi)
    return count * mean_sq / b ** 2


def _exact_index_sets(n: int, p: int, count: int) -> np.ndarray:
    out = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), p)),
                      dtype=np.int64, count=count * p)
    return out.reshape(count, p)


def _random_index_sets(n: int, p: int, count: int, rng: np.random.Generator) -> np.ndarray:
    sets = np.empty((count, p), dtype=np.int64)
    seen = set()
    i = 0
    while i < count:
        cand = np.sort(rng.choice(n, size=p, replace=False))
        key = tuple(cand.tolist())
        if key in seen:
            continue
        seen.add(key)
        sets[i] = cand
        i += 1
    return sets


def sample_model(profile: MixtureProfile, law: tails.TailLaw, n: int, K: int,
                 master_seed: int) -> CouplingTensor:
    """Draw the disorder for every order in the profile support.

    Exact mode (C(n,p) <= 1e6) draws and stores every coupling; streamed mode
    draws the top-K order statistics through ranked-uniform spacings plus the
    bulk sum-of-squares summary.  Deterministic per master seed.
    """
    if K < 1:
        raise ValueError("retention count K must be >= 1")
    if n < max(profile.support):
        raise ValueError(f"n={n} below the largest supported order {max(profile.support)}")
    blocks = {}
    for p in profile.support:
        rng = streams.stream(master_seed, streams.TAG_SAMPLE, p)
        total = math.comb(n, p)
        b = tails.quantile_b(law, n, p)
        if total <= EXACT_LIMIT:
            u = 1.0 - rng.random(total)
            mags = np.atleast_1d(tails.quantile(law, u)) / b
            signs = rng.integers(0, 2, size=total) * 2 - 1
            vals = mags * signs
            idx = _exact_index_sets(n, p, total)
            order = np.argsort(-np.abs(vals), kind="stable")
            blocks[p] = CouplingBlock(p, idx[order], vals[order], total, 0.0, 0, "exact")
        else:
            k_eff = min(K, total)
            gaps = rng.standard_exponential(k_eff)
            gamma_k = np.cumsum(gaps)
            gamma_total = rng.gamma(shape=float(total + 1), scale=1.0)
            u = gamma_k / gamma_total
            mags = np.atleast_1d(tails.quantile(law, np.clip(u, 1e-300, 1.0))) / b
            signs = rng.integers(0, 2, size=k_eff) * 2 - 1
            vals = mags * signs   # already sorted: u ascending -> |H| descending
            idx = _random_index_sets(n, p, k_eff, rng)
            bulk_sq = _bulk_sq_quadrature(law, float(u[-1]), total - k_eff, b)
            blocks[p] = CouplingBlock(p, idx, vals, total, bulk_sq,
                                      total - k_eff, "streamed")
    return CouplingTensor(n=n, k=K, blocks=blocks, law_alpha=law.alpha, seed=master_seed)


def planted_tensor(n: int, terms, law_alpha: float | None = None,
                   k: int | None = None) -> CouplingTensor:
    """Build a tensor from explicit (value, index set) terms (test/CLI harness).

    Terms of the same order are sorted by |value|; bulk summaries are zero.
    """
    by_p: dict[int, list[tuple[float, tuple[int, ...]]]] = {}
    for value, idx in terms:
        key = tuple(sorted(int(i) for i in idx))
        if len(set(key)) != len(key):
            raise ValueError(f"repeated spin index in {idx}")
        if key and (key[0] < 0 or key[-1] >= n):
            raise ValueError(f"index out of range in {idx}")
        by_p.setdefault(len(key), []).append((float(value), key))
    blocks = {}
    for p, tl in sorted(by_p.items()):
        tl.sort(key=lambda t: -abs(t[0]))
        vals = np.array([v for v, _ in tl])
        idx = np.array([i for _, i in tl], dtype=np.int64).reshape(len(tl), p)
        blocks[p] = CouplingBlock(p, idx, vals, math.comb(n, p), 0.0, 0, "exact")
    kk = k if k is not None else max((b.stored for b in blocks.values()), default=1)
    return CouplingTensor(n=n, k=kk, blocks=blocks, law_alpha=law_alpha)


@dataclass(frozen=True)
class RegimePredictions:
    free_energy_per_n: float | None = None
    log_z: float | None = None
    log_z_scale: str = ""
    geometry: nim.GeometryPrediction | None = None
    gse_analytic: float | None = None
    fluctuation_scale: str | None = None
    fluctuation_value: float | None = None


@dataclass(frozen=True)
class RegimeReport:
    kind: str                      # "F1" | "Fdom" | "Critical" | "MDTie"
    p_dom: int | None
    h_eff: float | None            # beta*alpha(p)*H_{1,p} of the dominant term
    dominant_index: tuple[int, ...] | None
    threshold_gaps: dict[int, float]    # |h_eff(p)| - H_p* per order
    f_values: dict[int, float]
    f_gap: float | None            # dominant f minus runner-up
    predictions: RegimePredictions

    def __post_init__(self):
        if self.kind == "Fdom":
            p = self.p_dom
            if not abs(self.h_eff) > phase.h_star(p):
                raise ValueError("Fdom report with subcritical dominant coupling")
            others = [v for q, v in self.f_values.items() if q != p]
            if others and not self.f_values[p] > max(others):
                raise ValueError("Fdom report without strict f-dominance")


def _f1_predictions(tensor: CouplingTensor, profile: MixtureProfile) -> RegimePredictions:
    p_min = min(p for p in profile.support if p in tensor.blocks)
    gse = gse_analytic(tensor, profile).value
    if p_min == 2:
        x = profile.beta * profile.alphas[2] * tensor.block(2).values
        log_z = float(-0.5 * np.sum(np.log1p(-x * x)))
        return RegimePredictions(log_z=log_z, gse_analytic=gse,
                                 log_z_scale="sum over stored 2-spin couplings")
    alpha = profile.alphas[p_min]
    ssq = tensor.block(p_min).sum_sq()
    fluct = 0.5 * profile.beta ** 2 * alpha ** 2 * ssq
    preds = RegimePredictions(
        log_z=fluct * tensor.n ** (2 - p_min), gse_analytic=gse,
        log_z_scale=f"O(n^-eps) per n; quadratic refinement at scale n^(2-{p_min})",
        fluctuation_scale=f"n^({p_min}-2) log Z",
        fluctuation_value=fluct if (tensor.law_alpha is None or tensor.law_alpha < 1.0)
        else None)
    return preds


def classify_regime(tensor: CouplingTensor, profile: MixtureProfile,
                    guard: float = phase.CRITICAL_BAND,
                    f_guard: float | None = None) -> RegimeReport:
    """Classify sampled disorder into F1 / Fdom(p) / Critical / MDTie.

    F1 requires every |beta alpha(p) H_{1,p}| < H_p*(1-guard); Fdom(p*)
    additionally requires f_{p*} to beat every other f by f_guard (default
    10/n in f-units).  Critical and MDTie are report kinds, not exceptions.
    """
    if f_guard is None:
        f_guard = DEFAULT_F_GUARD / tensor.n
    orders = [p for p in profile.support if p in tensor.blocks]
    h_eff = {p: profile.beta * profile.alphas[p] * tensor.block(p).h1() for p in orders}
    gaps = {p: abs(h_eff[p]) - phase.h_star(p) for p in orders}
    state = {}
    for p in orders:
        hs = phase.h_star(p)
        a = abs(h_eff[p])
        if a < hs * (1.0 - guard):
            state[p] = "below"
        elif a > hs * (1.0 + guard):
            state[p] = "above"
        else:
            state[p] = "critical"
    if any(s == "critical" for s in state.values()):
        pc = next(p for p in orders if state[p] == "critical")
        return RegimeReport("Critical", pc, h_eff[pc], None, gaps, {}, None,
                            RegimePredictions())
    f_vals = {p: (phase.f_p(p, h_eff[p]) if state[p] == "above" else 0.0) for p in orders}
    above = [p for p in orders if state[p] == "above"]
    if not above:
        return RegimeReport("F1", None, None, None, gaps, f_vals, None,
                            _f1_predictions(tensor, profile))
    ranked = sorted(above, key=lambda p: f_vals[p], reverse=True)
    p_star = ranked[0]
    runner = max((f_vals[q] for q in orders if q != p_star), default=0.0)
    blk_star = tensor.block(p_star)
    if blk_star.stored >= 2:
        # the second coupling of the dominant order competes too (the top two
        # must be separated for single dominance)
        h2 = profile.beta * profile.alphas[p_star] * float(blk_star.values[1])
        runner = max(runner, phase.f_p(p_star, h2))
    f_gap = f_vals[p_star] - runner
    if f_gap <= f_guard:
        return RegimeReport("MDTie", p_star, h_eff[p_star], None, gaps, f_vals, f_gap,
                            RegimePredictions())
    blk = tensor.block(p_star)
    dom_idx = tuple(int(i) for i in blk.indices[0])
    spec = nim.NimSpec.of(
        [(profile.alphas[p_star] * blk.h1(), dom_idx)], tensor.n)
    geom = nim.geometry_prediction(spec, profile.beta)
    preds = RegimePredictions(free_energy_per_n=f_vals[p_star], geometry=geom,
                              gse_analytic=gse_analytic(tensor, profile).value,
                              log_z_scale="(1/n) log Z -> f_{p*}")
    return RegimeReport("Fdom", p_star, h_eff[p_star], dom_idx, gaps, f_vals,
                        f_gap, preds)


@dataclass(frozen=True)
class GraphStats:
    n_vertices: int
    n_edges: int
    n_pairs: int
    intersection_prob: float


def build_monomial_graph(tensor: CouplingTensor, top_count: int) -> tuple[MonomialGraph, GraphStats]:
    """Graph over the union of the top-top_count index sets per order."""
    sets = []
    for p in tensor.orders:
        blk = tensor.block(p)
        if top_count > blk.stored:
            raise ValueError(f"top_count={top_count} exceeds stored couplings for p={p}")
        sets.extend(tuple(map(int, row)) for row in blk.indices[:top_count])
    g = build_graph(sets)
    return g, GraphStats(g.n_vertices, g.n_edges, g.n_pairs, g.intersection_prob)


@dataclass(frozen=True)
class GseResult:
    value: float
    p: int | None
    index: tuple[int, ...] | None
    planted_magnitude: float | None   # sqrt(n/p) on the maximizing support


def gse_analytic(tensor: CouplingTensor, profile: MixtureProfile,
                 include_beta: bool = False) -> GseResult:
    """(1/n) GSE prediction: max over stored couplings of |alpha(p) H| p^{-p/2}.

    beta is excluded by default (the ground state is a property of H_n alone);
    include_beta=True opts into the exp-weighted convention.
    """
    best, arg = 0.0, None
    scale = profile.beta if include_beta else 1.0
    for p in tensor.orders:
        if p not in profile.alphas:
            continue
        blk = tensor.block(p)
        if not blk.stored:
            continue
        vals = np.abs(profile.alphas[p] * blk.values) * p ** (-p / 2.0) * scale
        i = int(np.argmax(vals))
        if vals[i] > best:
            best = float(vals[i])
            arg = (p, tuple(int(j) for j in blk.indices[i]))
    if arg is None:
        return GseResult(0.0, None, None, None)
    return GseResult(best, arg[0], arg[1], math.sqrt(tensor.n / arg[0]))


@dataclass(frozen=True)
class RegimeProbabilities:
    p1: float
    p_t: dict[int, float]
    trials: int

    def __post_init__(self):
        total = self.p1 + sum(self.p_t.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"regime probabilities sum to {total}, not 1")


def regime_probabilities(profile: MixtureProfile, law_alpha: float, trials: int,
                         rng: np.random.Generator) -> RegimeProbabilities:
    """MC over the limiting Frechet maxima X_p: P(F1) and per-order dominance.

    p1 is the fraction with every |beta alpha(p) X_p| below threshold; p_t the
    fraction of remaining trials whose f-maximizer is order t.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ps = profile.support
    h_eff = np.empty((len(ps), trials))
    for i, p in enumerate(ps):
        x = tails.sample_frechet(law_alpha, rng, trials)
        h_eff[i] = profile.beta * profile.alphas[p] * x
    stars = np.array([phase.h_star(p) for p in ps])[:, None]
    above = np.abs(h_eff) > stars
    any_above = above.any(axis=0)
    p1 = float(np.mean(~any_above))
    fv = np.full_like(h_eff, -np.inf)
    for i, p in enumerate(ps):
        mask = above[i]
        if mask.any():
            fv[i, mask] = phase.f_p_many(p, h_eff[i, mask])
    winner = np.argmax(fv, axis=0)
    p_t = {p: float(np.mean(any_above & (winner == i))) for i, p in enumerate(ps)}
    # force the exact partition p1 + sum p_t = 1 against float roundoff
    p_t[ps[-1]] = 1.0 - p1 - sum(v for q, v in p_t.items() if q != ps[-1])
    return RegimeProbabilities(p1, p_t, trials)


def frechet_p1_quadrature(profile: MixtureProfile, law_alpha: float) -> float:
    """Independent oracle for P(F1): product of Frechet-CDF quadratures."""
    prod = 1.0
    for p, a in profile.alphas.items():
        c = phase.h_star(p) / (profile.beta * a)
        pdf = lambda x: law_alpha * x ** (-law_alpha - 1.0) * math.exp(-x ** (-law_alpha))
        v, _ = integrate.quad(pdf, 0.0, c, limit=200)
        prod *= v
    return prod


@dataclass(frozen=True)
class TuneResult:
    profile: MixtureProfile
    achieved: RegimeProbabilities
    targets: dict[int, float]
    max_gap: float
    evaluations: int
    converged: bool


def _marginal_exceedance(p: int, alpha_p: float, beta: float, law_alpha: float) -> float:
    """P(|beta alpha(p) X_p| > H_p*) for Frechet(law_alpha) X_p, closed form."""
    c = phase.h_star(p) / (beta * alpha_p)
    return 1.0 - math.exp(-c ** (-law_alpha))


def _alpha_for_marginal(p: int, q: float, beta: float, law_alpha: float) -> float:
    """Inverse of the marginal exceedance in alpha(p)."""
    q = min(max(q, 1e-6), 1.0 - 1e-6)
    c = (-math.log(1.0 - q)) ** (-1.0 / law_alpha)
    return phase.h_star(p) / (beta * c)


def tune_profile(targets: dict[int, float], law_alpha: float, beta: float,
                 tolerance: float, budget: int, rng: np.random.Generator,
                 trials_per_eval: int = 20000,
                 initial: MixtureProfile | None = None) -> TuneResult:
    """Coordinate-wise monotone search for alpha(t) hitting target dominance rates.

    p_t is increasing in alpha(t) and decreasing in the other coordinates.
    Each coordinate step lifts the measured deficit a_t - p_t onto the
    marginal exceedance probability (whose dependence on alpha(t) is closed
    form and strictly monotone, so the update is an exact inverse on that
    axis) and re-verifies with a fresh regime_probabilities draw.  Returns
    the best profile found with its achieved-vs-target report when the
    budget runs out.
    """
    targets = {int(t): float(a) for t, a in targets.items()}
    if sum(targets.values()) > 1.0 + 1e-9:
        raise ValueError("target dominance probabilities must sum to <= 1")
    if initial is None:
        alphas = ({t: _alpha_for_marginal(t, max(a, 1e-3), beta, law_alpha)
                   for t, a in targets.items()} or {2: 0.1})
        initial = MixtureProfile(alphas=alphas, beta=beta)
    current = initial
    evals = 0

    def measure(prof):
        nonlocal evals
        evals += 1
        return regime_probabilities(prof, law_alpha, trials_per_eval, rng)

    def gap_of(probs):
        return max((abs(probs.p_t.get(t, 0.0) - a) for t, a in targets.items()),
                   default=0.0)

    best_probs = measure(current)
    best_prof, best_gap = current, gap_of(best_probs)
    probs = best_probs
    while evals < budget and best_gap >= tolerance:
        moved = False
        for t in sorted(targets):
            if evals >= budget:
                break
            deficit = targets[t] - probs.p_t.get(t, 0.0)
            if abs(deficit) < tolerance / 2:
                continue
            alphas = dict(current.alphas)
            a_now = alphas.get(t, _alpha_for_marginal(t, 0.5, beta, law_alpha))
            q_now = _marginal_exceedance(t, a_now, beta, law_alpha)
            alphas[t] = _alpha_for_marginal(t, q_now + 0.9 * deficit, beta, law_alpha)
            current = MixtureProfile(alphas=alphas, beta=beta)
            probs = measure(current)
            moved = True
            if gap_of(probs) < best_gap:
                best_gap, best_prof, best_probs = gap_of(probs), current, probs
        if not moved:
            break
    return TuneResult(best_prof, best_probs, targets, best_gap, evals,
                      best_gap < tolerance)


@dataclass(frozen=True)
class TailPartRow:
    p: int
    bulk_sq: float
    bound: float          # alpha(p) * n * sqrt(bulk sum of squares)
    ratio: float          # bound / n
    flagged: bool         # ratio exceeds n^{-eps'}


def tail_part_diagnostics(tensor: CouplingTensor, profile: MixtureProfile,
                          eps_prime: float) -> tuple[TailPartRow, ...]:
    """Cauchy-Schwarz magnitude bound on the beyond-rank-K interaction mass."""
    rows = []
    n = tensor.n
    for p in tensor.orders:
        if p not in profile.alphas:
            continue
        bulk = tensor.block(p).tail_sq(tensor.k)
        bound = profile.alphas[p] * n * math.sqrt(bulk)
        ratio = bound / n
        rows.append(TailPartRow(p, bulk, bound, ratio, ratio > n ** (-eps_prime)))
    return tuple(rows)
