import math

import numpy as np
import pytest

from heavyspin import model as fm
from heavyspin import phase, tails
from heavyspin.model import (CouplingTensor, MixtureProfile, classify_regime,
                             gse_analytic, planted_tensor, regime_probabilities,
                             sample_model, tail_part_diagnostics, tune_profile)

from conftest import make_rng

H3_STAR = 5.083800875339528
LAW = tails.TailLaw(alpha=0.8)


def test_profile_validation():
    with pytest.raises(ValueError):
        MixtureProfile(alphas={}, beta=1.0)
    with pytest.raises(ValueError):
        MixtureProfile(alphas={2: 0.0}, beta=1.0)
    with pytest.raises(ValueError):
        MixtureProfile(alphas={1: 1.0}, beta=1.0)
    with pytest.raises(ValueError):
        MixtureProfile(alphas={2: 1.0}, beta=0.0)
    prof = MixtureProfile(alphas={3: 0.5, 2: 1.0}, beta=2.0)
    assert prof.support == [2, 3] and prof.p_min == 2
    assert prof.growth_certificate == pytest.approx(1.0 * 4 + 0.5 * 8)


def test_exact_mode_completeness():
    prof = MixtureProfile(alphas={2: 1.0}, beta=1.0)
    t = sample_model(prof, LAW, 6, 4, 7)
    blk = t.block(2)
    assert blk.mode == "exact"
    assert blk.stored == math.comb(6, 2) == 15
    assert blk.bulk_count == 0 and blk.bulk_sq == 0.0
    v = np.abs(blk.values)
    assert np.all(np.diff(v) <= 1e-15)
    # every index pair appears exactly once
    assert len({tuple(r) for r in blk.indices.tolist()}) == 15


def test_sampling_determinism():
    prof = MixtureProfile(alphas={2: 1.0, 3: 1.0}, beta=1.0)
    a = sample_model(prof, LAW, 30, 8, 99)
    b = sample_model(prof, LAW, 30, 8, 99)
    for p in a.orders:
        np.testing.assert_array_equal(a.block(p).values, b.block(p).values)
        np.testing.assert_array_equal(a.block(p).indices, b.block(p).indices)


def test_streamed_mode_top1_frechet():
    # C(142,2) = 10011 > exact limit when forced; use the streamed branch by
    # monkeypatching the limit down
    prof = MixtureProfile(alphas={2: 1.0}, beta=1.0)
    old = fm.EXACT_LIMIT
    fm.EXACT_LIMIT = 1000
    try:
        maxima = []
        for trial in range(2000):
            t = sample_model(prof, LAW, 142, 4, 10_000 + trial)
            maxima.append(abs(t.block(2).h1()))
            if trial == 0:
                blk = t.block(2)
                assert blk.mode == "streamed"
                assert blk.stored == 4
                assert blk.bulk_count == blk.total_count - 4
                assert blk.bulk_sq > 0
    finally:
        fm.EXACT_LIMIT = old
    assert tails.frechet_gof(maxima, LAW.alpha) < 0.05


def test_streamed_bulk_matches_exact_tail():
    # the quadrature bulk approximates the beyond-K sum of squares
    prof = MixtureProfile(alphas={2: 1.0}, beta=1.0)
    n, k = 80, 40
    exact = sample_model(prof, LAW, n, k, 3)          # exact mode stores all
    tail_exact = exact.block(2).tail_sq(k)
    old = fm.EXACT_LIMIT
    fm.EXACT_LIMIT = 100
    try:
        reps = [sample_model(prof, LAW, n, k, 400 + i).block(2).bulk_sq
                for i in range(40)]
    finally:
        fm.EXACT_LIMIT = old
    # same order of magnitude; both concentrate around E[sum_{i>k} H_i^2]
    assert np.mean(reps) == pytest.approx(tail_exact, rel=0.8)


def test_planted_tensor_and_classify_fdom():
    prof = MixtureProfile(alphas={2: 1.0, 3: 1.0}, beta=1.0)
    t = planted_tensor(300, [(2 * H3_STAR, (0, 1, 2)), (0.1, (5, 6))])
    rep = classify_regime(t, prof)
    assert rep.kind == "Fdom" and rep.p_dom == 3
    assert rep.dominant_index == (0, 1, 2)
    assert rep.h_eff == pytest.approx(2 * H3_STAR)
    assert rep.predictions.free_energy_per_n == pytest.approx(phase.f_p(3, 2 * H3_STAR))
    assert rep.predictions.geometry.component_count == 4
    assert rep.f_gap > 10.0 / 300


def test_classify_f1_with_p2_prediction():
    prof = MixtureProfile(alphas={2: 1.0}, beta=1.0)
    t = planted_tensor(100, [(0.5, (0, 1)), (0.3, (2, 3))])
    rep = classify_regime(t, prof)
    assert rep.kind == "F1"
    expect = -0.5 * (math.log(0.75) + math.log(0.91))
    assert rep.predictions.log_z == pytest.approx(expect, rel=1e-12)


def test_classify_f1_alpha_lt1_refinement():
    prof = MixtureProfile(alphas={3: 0.8}, beta=1.0)
    t = planted_tensor(100, [(1.0, (0, 1, 2)), (1.6, (3, 4, 5)), (2.2, (6, 7, 8))],
                       law_alpha=0.8)
    rep = classify_regime(t, prof)
    assert rep.kind == "F1"
    ssq = 1.0 + 1.6 ** 2 + 2.2 ** 2
    assert rep.predictions.fluctuation_value == pytest.approx(0.5 * 0.8 ** 2 * ssq)
    assert rep.predictions.log_z == pytest.approx(0.5 * 0.8 ** 2 * ssq / 100)


def test_classify_critical_and_mdtie():
    prof = MixtureProfile(alphas={3: 1.0}, beta=1.0)
    t = planted_tensor(50, [(phase.h_star(3) * (1 + 1e-9), (0, 1, 2))])
    assert classify_regime(t, prof).kind == "Critical"
    prof2 = MixtureProfile(alphas={3: 1.0, 4: 1.0}, beta=1.0)
    h4 = 19.64325985827302
    # pick couplings whose f-values tie within the guard
    t2 = planted_tensor(
        60, [(1.5 * H3_STAR, (0, 1, 2)),
             (_h4_matching_f(phase.f_p(3, 1.5 * H3_STAR)), (10, 11, 12, 13))])
    assert classify_regime(t2, prof2).kind == "MDTie"


def _h4_matching_f(target_f):
    lo, hi = 19.64325985827302 * (1 + 1e-9), 100.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phase.f_p(4, mid) < target_f:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_fdom_report_consistency_invariant():
    # Fdom reports satisfy strict threshold exceedance and strict f-dominance
    prof = MixtureProfile(alphas={2: 1.0, 3: 1.0}, beta=1.0)
    t = planted_tensor(200, [(1.5 * H3_STAR, (0, 1, 2)), (2.0, (5, 6))])
    rep = classify_regime(t, prof)
    assert rep.kind == "Fdom"
    assert abs(rep.h_eff) > phase.h_star(rep.p_dom)
    others = [v for q, v in rep.f_values.items() if q != rep.p_dom]
    assert all(rep.f_values[rep.p_dom] > v for v in others)


def test_monomial_graph_examples():
    t = planted_tensor(30, [(1.0, (0, 1, 2)), (0.9, (3, 4, 5)), (0.8, (6, 7))])
    g, stats = fm.build_monomial_graph(t, 1)
    assert stats.n_edges == 0
    t2 = planted_tensor(30, [(1.0, (0, 1, 2)), (0.9, (2, 3, 4))])
    g2, stats2 = fm.build_monomial_graph(t2, 2)
    assert stats2.n_edges == 1
    with pytest.raises(ValueError):
        fm.build_monomial_graph(t2, 5)


def test_monomial_graph_intersection_trend():
    # p-support {2,3}: expected edge count stays O(1) so the decrease is
    # visible over MC noise; P(edge) ~ 0.79 at n=200 vs 0.63 at 800
    rng = make_rng(60)
    trials = 300
    rates = {}
    for n in (200, 400, 800):
        m = int(np.ceil(n ** 0.3))
        hit = 0
        for _ in range(trials):
            sets = [tuple(np.sort(rng.choice(n, size=p, replace=False)))
                    for p in (2, 3) for _ in range(m)]
            from heavyspin.graphs import build_graph
            hit += build_graph(sets).n_edges > 0
        rates[n] = hit / trials
    se = math.sqrt(0.25 / trials)
    assert rates[200] - rates[800] > 2 * se * math.sqrt(2)
    assert rates[400] <= rates[200] + 2.5 * se * math.sqrt(2)
    assert rates[800] <= rates[400] + 2.5 * se * math.sqrt(2)


def test_gse_analytic_examples():
    prof = MixtureProfile(alphas={2: 1.0, 3: 1.0}, beta=1.0)
    t = planted_tensor(100, [(4.0, (0, 1))])
    r = gse_analytic(t, prof)
    assert r.value == pytest.approx(2.0)
    assert r.p == 2 and r.index == (0, 1)
    assert r.planted_magnitude == pytest.approx(math.sqrt(50.0))
    t2 = planted_tensor(100, [(9.0, (0, 1, 2))])
    assert gse_analytic(t2, prof).value == pytest.approx(9.0 * 3 ** -1.5)
    empty = CouplingTensor(n=10, k=1, blocks={})
    assert gse_analytic(empty, prof).value == 0.0


def test_gse_beta_flag():
    prof = MixtureProfile(alphas={2: 1.0}, beta=2.0)
    t = planted_tensor(50, [(4.0, (0, 1))])
    assert gse_analytic(t, prof).value == pytest.approx(2.0)
    assert gse_analytic(t, prof, include_beta=True).value == pytest.approx(4.0)


def test_regime_probabilities_limits():
    rng = make_rng(61)
    tiny = MixtureProfile(alphas={2: 1e-6}, beta=1.0)
    probs = regime_probabilities(tiny, 0.8, 20000, rng)
    assert probs.p1 > 0.99
    huge = MixtureProfile(alphas={2: 1e6}, beta=1.0)
    probs2 = regime_probabilities(huge, 0.8, 20000, rng)
    assert probs2.p_t[2] > 0.99
    mixed = MixtureProfile(alphas={2: 0.5, 3: 2.0}, beta=1.0)
    probs3 = regime_probabilities(mixed, 0.8, 20000, rng)
    assert probs3.p1 + sum(probs3.p_t.values()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alphas,law_alpha", [
    ({2: 0.5, 3: 2.0}, 0.8), ({2: 0.2}, 1.2), ({3: 4.0, 4: 8.0}, 0.5)])
def test_regime_probabilities_match_quadrature(alphas, law_alpha):
    prof = MixtureProfile(alphas=alphas, beta=1.0)
    rng = make_rng(62)
    trials = 200_000
    probs = regime_probabilities(prof, law_alpha, trials, rng)
    quad = fm.frechet_p1_quadrature(prof, law_alpha)
    se = math.sqrt(max(quad * (1 - quad), 1e-12) / trials)
    assert abs(probs.p1 - quad) < 2 * se + 1e-9


def test_tune_profile_extremes():
    rng = make_rng(63)
    res = tune_profile({2: 1.0}, 0.8, 1.0, tolerance=0.02, budget=30, rng=rng,
                       trials_per_eval=8000)
    assert res.achieved.p_t[2] > 0.95
    res2 = tune_profile({}, 0.8, 1.0, tolerance=0.02, budget=5, rng=rng,
                        trials_per_eval=8000)
    assert res2.achieved.p1 > 0.0


def test_tune_profile_budget_exhaustion():
    rng = make_rng(64)
    res = tune_profile({2: 0.5, 3: 0.3}, 0.8, 1.0, tolerance=0.0, budget=12,
                       rng=rng, trials_per_eval=4000)
    assert not res.converged
    assert res.evaluations <= 12
    assert res.max_gap >= 0.0


def test_tail_part_diagnostics():
    prof = MixtureProfile(alphas={2: 1.0}, beta=1.0)
    t0 = planted_tensor(100, [(1.0, (0, 1))])
    (row,) = tail_part_diagnostics(t0, prof, 0.2)
    assert row.bound == 0.0 and not row.flagged

    blk = fm.CouplingBlock(2, np.array([[0, 1]]), np.array([1.0]),
                           math.comb(100, 2), 1e-4, 100, "streamed")
    t1 = CouplingTensor(n=100, k=1, blocks={2: blk})
    (row1,) = tail_part_diagnostics(t1, prof, 0.2)
    assert row1.bound == pytest.approx(1.0)
    assert row1.ratio == pytest.approx(0.01)


def test_tail_part_ratio_trend():
    # the beyond-rank mass shrinks when the rank cutoff grows like n^eps
    # (at fixed K the sum sum_{i>K} i^{-2/alpha} is n-free)
    prof = MixtureProfile(alphas={2: 1.0}, beta=1.0)
    law = tails.TailLaw(alpha=0.8)
    ratios = []
    for n in (200, 400, 800):
        k = int(np.ceil(n ** 0.4))
        rs = []
        for i in range(10):
            t = sample_model(prof, law, n, k, 700 + i)
            (row,) = tail_part_diagnostics(t, prof, 0.2)
            rs.append(row.ratio)
        ratios.append(np.mean(rs))
    assert ratios[2] < ratios[0]
