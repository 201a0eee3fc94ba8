"""Sphere sampling, Metropolis chains, and the empirical Gibbs-geometry tests.

States live on the sphere sum sigma_i^2 = n.  The uniform sampler is the
rotation-invariant Gaussian construction; the Gibbs sampler is a Metropolis
chain with tangent-space Gaussian proposals renormalized back to radius
sqrt(n) (an exactly symmetric kernel by isotropy), with the proposal scale
auto-tuned to a 0.3-0.5 acceptance rate during burn-in and then frozen.

Plain Monte Carlo partition estimates are restricted to n <= 24 and guarded
by an effective-sample-size floor; beyond that the exact series is the
oracle and the orthant-stratified estimator handles above-threshold cases.

Chains are independent workers: each derives a private generator from
(master seed, chain id) and never shares state; estimators reduce chain
outputs associatively.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .model import CouplingTensor, MixtureProfile

__all__ = [
    "EssError", "CompiledEnergy", "ReplicaBatch", "Chain", "McEstimate",
    "OverlapStats", "OccupancyReport", "UltrametricReport", "GseOptResult",
    "uniform_sphere", "uniform_sphere_batch", "energy", "compile_energy",
    "mc_log_partition", "mc_orthant_partition", "mcmc_chain", "run_chains",
    "orthant_inits", "replica_overlaps", "occupancy", "spin_magnitude",
    "component_crossings", "ultrametric_test", "gse_optimize",
]

MC_N_LIMIT = 24
ESS_FLOOR = 100.0


class EssError(RuntimeError):
    """Plain-MC effective sample size collapsed; use the orthant-stratified mode."""


def uniform_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """One uniform point on the radius-sqrt(n) sphere."""
    return uniform_sphere_batch(n, 1, rng)[0]


def uniform_sphere_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """(count, n) uniform points: i.i.d. Gaussians rescaled to radius sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng.standard_normal((count, n))
    g *= math.sqrt(n) / np.linalg.norm(g, axis=1, keepdims=True)
    return g


@dataclass(frozen=True)
class CompiledEnergy:
    """Flattened Hamiltonian terms: energy(sigma) = sum coef_i * prod sigma[idx_i].

    coef already folds in alpha(p) and the n^{-(p-2)/2} factor.  Couplings
    beyond the stored top-K are excluded (exact mode stores everything).
    """

    n: int
    groups: tuple[tuple[np.ndarray, np.ndarray], ...]   # (coef (m,), idx (m,p)) per order

    def __call__(self, states: np.ndarray) -> np.ndarray | float:
        single = states.ndim == 1
        s = states[None, :] if single else states
        if s.shape[1] != self.n:
            raise ValueError(f"config length {s.shape[1]} != tensor n {self.n}")
        e = np.zeros(s.shape[0])
        for coef, idx in self.groups:
            e += np.prod(s[:, idx], axis=2) @ coef
        return float(e[0]) if single else e

    def gradient(self, sigma: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(sigma)
        for coef, idx in self.groups:
            vals = sigma[idx]                       # (m, p)
            m, p = vals.shape
            prefix = np.ones((m, p))
            suffix = np.ones((m, p))
            prefix[:, 1:] = np.cumprod(vals[:, :-1], axis=1)
            suffix[:, :-1] = np.cumprod(vals[:, ::-1], axis=1)[:, -2::-1]
            loo = coef[:, None] * prefix * suffix   # d(term)/d(sigma[idx])
            np.add.at(grad, idx.ravel(), loo.ravel())
        return grad


def compile_energy(tensor: CouplingTensor, profile: MixtureProfile) -> CompiledEnergy:
    groups = []
    for p in tensor.orders:
        if p not in profile.alphas:
            continue
        blk = tensor.block(p)
        if not blk.stored:
            continue
        coef = profile.alphas[p] * blk.values * tensor.n ** (-(p - 2) / 2.0)
        groups.append((coef.astype(float), blk.indices.astype(np.int64)))
    return CompiledEnergy(tensor.n, tuple(groups))


def energy(tensor: CouplingTensor, profile: MixtureProfile, config: np.ndarray) -> float:
    """Hamiltonian value at one configuration (stored couplings only)."""
    return compile_energy(tensor, profile)(np.asarray(config, dtype=float))


@dataclass(frozen=True)
class McEstimate:
    log_z: float
    se: float
    ess: float
    samples: int


def mc_log_partition(tensor: CouplingTensor, profile: MixtureProfile,
                     samples: int, rng: np.random.Generator,
                     batch: int = 100_000) -> McEstimate:
    """Plain-MC log Z with a delta-method standard error and an ESS guard.

    Refuses (EssError) when the effective sample size drops below 100, which
    is the signal to switch to the orthant-stratified estimator.
    """
    if tensor.n > MC_N_LIMIT:
        raise ValueError(f"plain MC is limited to n <= {MC_N_LIMIT}")
    if samples < 100_000:
        raise ValueError("plain MC needs at least 1e5 samples")
    en = compile_energy(tensor, profile)
    if not en.groups:
        return McEstimate(0.0, 0.0, float(samples), samples)
    # two-pass streaming: track max first-shift via running blocks
    sums = 0.0
    sums_sq = 0.0
    m_shift = None
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        e = profile.beta * en(uniform_sphere_batch(tensor.n, b, rng))
        if m_shift is None:
            m_shift = float(e.max())
        new_max = float(e.max())
        if new_max > m_shift:
            scale = math.exp(m_shift - new_max)
            sums *= scale
            sums_sq *= scale * scale
            m_shift = new_max
        w = np.exp(e - m_shift)
        sums += float(w.sum())
        sums_sq += float((w * w).sum())
        done += b
    mean_w = sums / samples
    mean_w2 = sums_sq / samples
    ess = samples * mean_w ** 2 / mean_w2
    if ess < ESS_FLOOR:
        raise EssError(
            f"effective sample size {ess:.1f} < {ESS_FLOOR:.0f}; use the "
            "orthant-stratified mode (mc_orthant_partition)")
    var_w = max(mean_w2 - mean_w ** 2, 0.0)
    se = math.sqrt(var_w / samples) / mean_w
    return McEstimate(float(m_shift + math.log(mean_w)), float(se), float(ess), samples)


def mc_orthant_partition(tensor: CouplingTensor, profile: MixtureProfile,
                         dominant_indices, samples: int,
                         rng: np.random.Generator) -> dict[tuple[int, ...], McEstimate]:
    """Orthant-restricted estimates of E[exp(beta H) | sign pattern].

    Uniform draws are sign-flipped onto each orthant of the dominant
    coordinates (measure-preserving), with independent draws per pattern.
    E[exp(beta H) 1_{f+-(x)}] = 2^{-p} * the returned per-pattern mean.
    """
    dom = [int(i) for i in dominant_indices]
    en = compile_energy(tensor, profile)
    out = {}
    for pattern in itertools.product((-1, 1), repeat=len(dom)):
        g = uniform_sphere_batch(tensor.n, samples, rng)
        g[:, dom] = np.abs(g[:, dom]) * np.asarray(pattern, dtype=float)
        e = profile.beta * en(g)
        m = float(e.max())
        w = np.exp(e - m)
        mean_w = float(w.mean())
        se = float(w.std() / mean_w / math.sqrt(samples))
        ess = samples * mean_w ** 2 / float((w * w).mean())
        out[pattern] = McEstimate(m + math.log(mean_w), se, float(ess), samples)
    return out


@dataclass(frozen=True)
class Chain:
    samples: np.ndarray        # (T, n) thinned post-burn-in states
    acceptance_rate: float
    proposal_scale: float      # frozen post-burn-in value
    steps: int
    chain_id: int


@dataclass(frozen=True)
class ReplicaBatch:
    """Samples from independent chains: (chains, T, n) with per-chain metadata."""

    samples: np.ndarray
    chain_ids: tuple[int, ...]
    steps: int
    acceptance_rates: np.ndarray
    thin: int

    @property
    def n_chains(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[2]


def _drive_chains(en: CompiledEnergy, beta: float, steps: int, inits: np.ndarray,
                  rngs: list[np.random.Generator], proposal_scale: float,
                  thin: int, burn_in_frac: float, tune: bool,
                  block: int = 512) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    c, n = inits.shape
    state = inits.copy()
    e_state = np.atleast_1d(en(state))
    scales = np.full(c, proposal_scale)
    burn = int(steps * burn_in_frac)
    acc_window = np.zeros(c)
    win = 0
    accepted = np.zeros(c)
    measured = 0
    kept = []
    done = 0
    while done < steps:
        b = min(block, steps - done)
        noise = np.stack([r.standard_normal((b, n)) for r in rngs])   # (c, b, n)
        logu = np.stack([np.log(1.0 - r.random(b)) for r in rngs])     # (c, b)
        for t in range(b):
            step_i = done + t
            xi = noise[:, t, :]
            radial = np.sum(xi * state, axis=1, keepdims=True) / n
            xi = xi - radial * state                       # tangent projection
            cand = state + scales[:, None] * xi
            cand *= math.sqrt(n) / np.linalg.norm(cand, axis=1, keepdims=True)
            e_cand = np.atleast_1d(en(cand))
            acc = logu[:, t] < beta * (e_cand - e_state)
            state[acc] = cand[acc]
            e_state[acc] = e_cand[acc]
            if step_i < burn:
                if tune:
                    acc_window += acc
                    win += 1
                    if win == 100:
                        rate = acc_window / win
                        scales = np.where(rate > 0.5, scales * 1.2, scales)
                        scales = np.where(rate < 0.3, scales / 1.2, scales)
                        acc_window[:] = 0.0
                        win = 0
            else:
                accepted += acc
                measured += 1
                if (step_i - burn) % thin == 0:
                    kept.append(state.copy())
        done += b
    samples = np.stack(kept, axis=1) if kept else np.empty((c, 0, n))
    rates = accepted / max(measured, 1)
    return samples, rates, scales


def mcmc_chain(tensor: CouplingTensor, profile: MixtureProfile, steps: int,
               proposal_scale: float, init: np.ndarray, rng: np.random.Generator,
               thin: int = 1, burn_in_frac: float = 0.1, tune: bool = True,
               chain_id: int = 0) -> Chain:
    """Single Metropolis chain; see the module docstring for the kernel."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    en = compile_energy(tensor, profile)
    samples, rates, scales = _drive_chains(
        en, profile.beta, steps, np.asarray(init, dtype=float)[None, :], [rng],
        proposal_scale, thin, burn_in_frac, tune)
    return Chain(samples[0], float(rates[0]), float(scales[0]), steps, chain_id)


def run_chains(tensor: CouplingTensor, profile: MixtureProfile, steps: int,
               inits: np.ndarray, master_seed: int, proposal_scale: float = 0.2,
               thin: int = 10, burn_in_frac: float = 0.1, tune: bool = True,
               chain_ids=None) -> ReplicaBatch:
    """Independent chains advanced in lockstep (vectorized across chains).

    Each chain consumes only its private (master seed, chain id) stream, so
    results are reproducible chain-by-chain regardless of batching.
    """
    inits = np.asarray(inits, dtype=float)
    c = inits.shape[0]
    ids = tuple(range(c)) if chain_ids is None else tuple(int(i) for i in chain_ids)
    rngs = [streams.stream(master_seed, streams.TAG_MCMC, i) for i in ids]
    en = compile_energy(tensor, profile)
    samples, rates, _ = _drive_chains(en, profile.beta, steps, inits, rngs,
                                      proposal_scale, thin, burn_in_frac, tune)
    return ReplicaBatch(samples, ids, steps, rates, thin)


def orthant_inits(n: int, dominant_indices, patterns, rng: np.random.Generator,
                  magnitude: float | None = None) -> np.ndarray:
    """Uniform starts conditioned to each orthant of the dominant coordinates.

    One start per pattern; optionally plant |sigma_i| = magnitude on the
    dominant support (e.g. sqrt(t n)) to begin near the component center.
    """
    dom = [int(i) for i in dominant_indices]
    starts = uniform_sphere_batch(n, len(patterns), rng)
    for row, pattern in enumerate(patterns):
        if magnitude is not None:
            starts[row, dom] = magnitude
        starts[row, dom] = np.abs(starts[row, dom]) * np.asarray(pattern, dtype=float)
        starts[row] *= math.sqrt(n) / np.linalg.norm(starts[row])
    return starts


@dataclass(frozen=True)
class OverlapStats:
    mean: float
    second_moment: float
    restricted_mean: float
    restricted_second_moment: float
    overlaps: np.ndarray
    restricted_overlaps: np.ndarray
    n_pairs: int


def replica_overlaps(batch: ReplicaBatch, exclude_first: int = 0) -> OverlapStats:
    """Pairwise full and restricted overlaps across distinct chains.

    The restricted overlap skips the first exclude_first coordinates (the
    planted dominant support, relabeled to the front by construction).
    """
    if batch.n_chains < 2:
        raise ValueError("need at least 2 chains")
    s = batch.samples
    n = batch.n
    full, rest = [], []
    for i in range(batch.n_chains):
        for j in range(i + 1, batch.n_chains):
            r = np.sum(s[i] * s[j], axis=1) / n
            full.append(r)
            rr = np.sum(s[i, :, exclude_first:] * s[j, :, exclude_first:], axis=1) / n
            rest.append(rr)
    full = np.concatenate(full)
    rest = np.concatenate(rest)
    return OverlapStats(float(full.mean()), float(np.mean(full ** 2)),
                        float(rest.mean()), float(np.mean(rest ** 2)),
                        full, rest, len(full))


@dataclass(frozen=True)
class OccupancyReport:
    frequencies: dict[tuple[int, ...], float]
    negative_mass: float
    counts: dict[tuple[int, ...], int]
    total: int


def occupancy(batch: ReplicaBatch, dominant_indices, h_sign: int) -> OccupancyReport:
    """Frequency per sign pattern of the dominant coordinates across all samples."""
    dom = [int(i) for i in dominant_indices]
    signs = np.sign(batch.samples[:, :, dom]).astype(int).reshape(-1, len(dom))
    counts: dict[tuple[int, ...], int] = {}
    for row in signs:
        key = tuple(row.tolist())
        counts[key] = counts.get(key, 0) + 1
    total = signs.shape[0]
    freqs = {k: v / total for k, v in counts.items()}
    neg = sum(f for k, f in freqs.items() if h_sign * math.prod(k) < 0)
    return OccupancyReport(freqs, neg, counts, total)


def component_crossings(chain_samples: np.ndarray, dominant_indices) -> int:
    """Number of sign-pattern changes of the dominant coordinates along a chain."""
    dom = [int(i) for i in dominant_indices]
    signs = np.sign(chain_samples[:, dom]).astype(int)
    return int(np.sum(np.any(signs[1:] != signs[:-1], axis=1)))


def spin_magnitude(batch: ReplicaBatch, indices) -> tuple[np.ndarray, np.ndarray]:
    """Per-index mean and variance of sigma_i^2 / n over the batch."""
    idx = [int(i) for i in indices]
    v = batch.samples[:, :, idx] ** 2 / batch.n
    flat = v.reshape(-1, len(idx))
    return flat.mean(axis=0), flat.var(axis=0)


@dataclass(frozen=True)
class UltrametricReport:
    violation_frequency: float
    n_evaluations: int
    margin: float


def ultrametric_test(batch: ReplicaBatch, margin: float,
                     max_time_points: int | None = None) -> UltrametricReport:
    """Frequency of R_{1,3} < min(R_{1,2}, R_{2,3}) - margin over chain triples.

    Every unordered triple of distinct chains is evaluated in all three
    middle-replica roles at matched (subsampled) time points.
    """
    if batch.n_chains < 3:
        raise ValueError("need at least 3 chains")
    s = batch.samples
    n = batch.n
    t_all = s.shape[1]
    t_idx = np.arange(t_all)
    if max_time_points is not None and t_all > max_time_points:
        t_idx = np.linspace(0, t_all - 1, max_time_points).astype(int)
    viol = 0
    total = 0
    for a, b, c in itertools.combinations(range(batch.n_chains), 3):
        ra_b = np.sum(s[a][t_idx] * s[b][t_idx], axis=1) / n
        rb_c = np.sum(s[b][t_idx] * s[c][t_idx], axis=1) / n
        ra_c = np.sum(s[a][t_idx] * s[c][t_idx], axis=1) / n
        for r12, r23, r13 in ((ra_b, rb_c, ra_c), (ra_b, ra_c, rb_c), (ra_c, rb_c, ra_b)):
            viol += int(np.sum(r13 < np.minimum(r12, r23) - margin))
            total += len(t_idx)
    return UltrametricReport(viol / total if total else 0.0, total, margin)


@dataclass(frozen=True)
class GseOptResult:
    energy_per_n: float
    config: np.ndarray
    restart: str
    iterations: int


def gse_optimize(tensor: CouplingTensor, profile: MixtureProfile, restarts: int,
                 rng: np.random.Generator, max_iter: int = 2000,
                 tol: float = 1e-12, top_planted: int = 4) -> GseOptResult:
    """Projected gradient ascent on the sphere with uniform and planted restarts.

    Planted restarts place +-sqrt(n/p) on the support of each stored top
    coupling with the sign pattern that makes the term positive; the step size
    adapts by doubling/halving line search.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    en = compile_energy(tensor, profile)
    n = tensor.n
    starts: list[tuple[str, np.ndarray]] = []
    for p in tensor.orders:
        blk = tensor.block(p)
        for r in range(min(top_planted, blk.stored)):
            sig = np.zeros(n)
            idx = blk.indices[r]
            sig[idx] = math.sqrt(n / p)
            if blk.values[r] * profile.alphas.get(p, 0.0) < 0:
                sig[idx[0]] *= -1.0
            starts.append((f"planted(p={p},rank={r})", sig))
    for r in range(restarts):
        starts.append((f"uniform({r})", uniform_sphere(n, rng)))
    best = GseOptResult(-np.inf, np.zeros(n), "none", 0)
    for label, sig in starts:
        sig = sig.copy()
        e = en(sig)
        step = 0.1
        it = 0
        for it in range(max_iter):
            g = en.gradient(sig)
            moved = False
            for _ in range(40):
                cand = sig + step * g
                cand *= math.sqrt(n) / np.linalg.norm(cand)
                e_cand = en(cand)
                if e_cand > e:
                    rel = (e_cand - e) / max(abs(e), 1e-300)
                    sig, e = cand, e_cand
                    step *= 1.3
                    moved = True
                    break
                step *= 0.5
            if not moved or rel < tol:
                break
        if e / n > best.energy_per_n:
            best = GseOptResult(e / n, sig, label, it + 1)
    return best
