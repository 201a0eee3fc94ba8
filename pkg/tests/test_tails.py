import math

import numpy as np
import pytest

from heavyspin import tails
from heavyspin.tails import TailLaw, TailDomainError

from conftest import make_rng

CONST1 = TailLaw(alpha=1.0)
CONST05 = TailLaw(alpha=0.5)
POLYLOG_SUB = TailLaw(alpha=0.5, family="polylog", gamma=1.0)   # max tail < 1
POLYLOG_SUP = TailLaw(alpha=1.0, family="polylog", gamma=3.0)   # crossing exists


def test_tail_prob_constant_power_law():
    assert tails.tail_prob(CONST1, 10.0) == pytest.approx(0.1)
    assert tails.tail_prob(CONST1, CONST1.t_floor) == 1.0


def test_tail_prob_polylog_example():
    # (log t)^1 * t^{-1/2} at t = e^2 is 2/e
    assert tails.tail_prob(POLYLOG_SUB, math.e ** 2) == pytest.approx(2 * math.exp(-1.0),
                                                                      rel=1e-12)


def test_tail_prob_below_floor_rejected():
    with pytest.raises(TailDomainError):
        tails.tail_prob(CONST1, 0.5)


def test_tail_prob_nonincreasing():
    for law in (CONST1, CONST05, POLYLOG_SUB, POLYLOG_SUP):
        t = np.geomspace(law.t_floor, law.t_floor * 1e6, 200)
        v = tails.tail_prob(law, t)
        assert np.all(np.diff(v) <= 1e-15)
        assert v[0] <= 1.0


def test_polylog_supercritical_floor_is_level_one_crossing():
    assert tails.tail_prob(POLYLOG_SUP, POLYLOG_SUP.t_floor) == pytest.approx(1.0, abs=1e-9)


def test_bad_exponent_rejected():
    with pytest.raises(TailDomainError):
        TailLaw(alpha=2.5)
    with pytest.raises(TailDomainError):
        TailLaw(alpha=0.0)


def test_quantile_b_closed_forms():
    # C(4,2) = 6
    assert tails.quantile_b(CONST1, 4, 2) == pytest.approx(6.0, rel=1e-12)
    assert tails.quantile_b(CONST05, 4, 2) == pytest.approx(36.0, rel=1e-12)


def test_quantile_b_boundary_p_equals_n():
    for law in (CONST1, POLYLOG_SUB, POLYLOG_SUP):
        assert tails.quantile_b(law, 5, 5) == pytest.approx(law.t_floor)


@pytest.mark.parametrize("law", [CONST1, CONST05, POLYLOG_SUP])
@pytest.mark.parametrize("n,p", [(10, 2), (40, 3), (80, 2), (25, 5)])
def test_quantile_b_tail_sandwich(law, n, p):
    b = tails.quantile_b(law, n, p)
    inv_c = math.exp(-tails.log_comb(n, p))
    assert tails.tail_prob(law, b) <= inv_c * (1 + 1e-9)
    assert tails.tail_prob(law, b * (1 - 1e-9)) >= inv_c * (1 - 1e-9)


def test_quantile_b_constant_scaling_log_domain():
    # exact C(n,p)^{1/alpha} in the log domain, relative error < 1e-10
    for n, p in [(30, 2), (60, 3), (200, 4)]:
        lc = tails.log_comb(n, p)
        for law in (CONST1, CONST05, TailLaw(alpha=1.7)):
            b = tails.quantile_b(law, n, p)
            assert b == pytest.approx(math.exp(lc / law.alpha), rel=1e-10)


def test_sampling_determinism():
    a = tails.sample(CONST1, make_rng(1), 100)
    b = tails.sample(CONST1, make_rng(1), 100)
    np.testing.assert_array_equal(a, b)


def test_sampling_tail_fraction():
    draws = tails.sample(CONST1, make_rng(2), 10 ** 6)
    frac = np.mean(np.abs(draws) > 10.0)
    assert abs(frac - 0.1) < 0.002


def test_sampling_sign_balance():
    draws = tails.sample(CONST1, make_rng(3), 10 ** 6)
    assert abs(np.mean(np.sign(draws))) < 0.005


@pytest.mark.parametrize("law", [CONST1, CONST05, POLYLOG_SUP])
def test_sampling_ks_against_tail(law):
    # two-sided KS at level 0.01 for 1e5 draws: critical value 1.628/sqrt(N)
    draws = np.abs(tails.sample(law, make_rng(4), 10 ** 5))
    x = np.sort(draws)
    cdf = 1.0 - tails.tail_prob(law, x)
    i = np.arange(1, x.size + 1)
    ks = max(np.max(np.abs(cdf - i / x.size)), np.max(np.abs(cdf - (i - 1) / x.size)))
    assert ks < 1.628 / math.sqrt(x.size)


def test_quantile_roundtrip_polylog():
    u = np.geomspace(1e-9, tails.tail_prob(POLYLOG_SUP, POLYLOG_SUP.t_floor) * 0.999, 50)
    t = tails.quantile(POLYLOG_SUP, u)
    np.testing.assert_allclose(tails.tail_prob(POLYLOG_SUP, t), u, rtol=1e-9)


def test_frechet_gof_exact_samples():
    alpha = 0.8
    x = tails.sample_frechet(alpha, make_rng(5), 2000)
    assert tails.frechet_gof(x, alpha) < 0.04


def test_frechet_gof_degenerate():
    assert tails.frechet_gof(np.full(100, 1.3), 1.0) >= 0.5


def test_frechet_gof_empty_rejected():
    with pytest.raises(TailDomainError):
        tails.frechet_gof([], 1.0)


def test_frechet_maxima_of_model_couplings():
    # per-trial max of C(60,2)=1770 i.i.d. draws, rescaled by b
    law = TailLaw(alpha=0.8)
    n, p, trials = 60, 2, 2000
    total = math.comb(n, p)
    b = tails.quantile_b(law, n, p)
    rng = make_rng(6)
    u_min = 1.0 - rng.random((trials, total)).max(axis=1)
    maxima = tails.quantile(law, u_min) / b
    assert tails.frechet_gof(maxima, law.alpha) < 0.05


def test_frechet_ks_trend_polylog():
    # slowly-varying correction shrinks as C(n,p) grows; constant-family
    # convergence is O(1/C(n,p)), far below the KS noise floor at these trials
    law = POLYLOG_SUB
    rng = make_rng(7)
    trials = 4000
    ks = []
    for total in (100, 1000, 10000):
        b_val = tails.quantile(law, 1.0 / total)
        e1 = rng.standard_exponential(trials)
        g = rng.gamma(shape=float(total + 1), scale=1.0, size=trials)
        maxima = tails.quantile(law, np.clip(e1 / g, 1e-300, 1.0)) / b_val
        ks.append(tails.frechet_gof(maxima, law.alpha))
    noise = 2.0 * math.sqrt(math.log(2) / (2 * trials))
    assert ks[2] < ks[0]
    assert ks[1] < ks[0] + noise and ks[2] < ks[1] + noise


def test_envelope_trivial_cases():
    zero = tails.OrderedSample(np.zeros(20), np.ones(20))
    rep = tails.order_stat_envelope(zero, 0.2, 1.0, 1, n=40)
    assert rep.violations == 0 and rep.first_violation is None

    i = np.arange(1, 21)
    below = tails.OrderedSample((i ** -1.0) / 2.0, np.ones(20))
    rep = tails.order_stat_envelope(below, 0.1, 1.0, 1, n=40)
    assert rep.violations == 0


def test_envelope_detects_violation():
    vals = np.array([5.0, 4.0, 3.9])
    s = tails.OrderedSample(vals, np.ones(3))
    rep = tails.order_stat_envelope(s, 0.1, 1.0, 2, n=10)
    assert rep.violations >= 1 and rep.first_violation == 2


def test_envelope_violation_frequency_model_draws():
    # alpha = 1.5: smaller exponents fire the envelope too often at this scale
    law = TailLaw(alpha=1.5)
    n, p = 40, 2
    total = math.comb(n, p)
    b = tails.quantile_b(law, n, p)
    rng = make_rng(8)
    bad = 0
    trials = 500
    for _ in range(trials):
        draws = np.abs(tails.sample(law, rng, total))
        ordered = tails.OrderedSample(np.sort(draws)[::-1] / b, np.ones(total))
        rep = tails.order_stat_envelope(ordered, 0.2, law.alpha, 8, n=n)
        bad += rep.violations > 0
    assert bad / trials < 0.05


def test_ordered_sample_validates_monotonicity():
    with pytest.raises(TailDomainError):
        tails.OrderedSample(np.array([1.0, 2.0]), np.ones(2))
