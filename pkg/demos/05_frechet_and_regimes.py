"""Extreme-value layer: rescaled maxima are Frechet, regimes are a dice roll.

The largest coupling per order, divided by b_{n,p}, converges to the Frechet
law exp(-x^{-alpha}); which order dominates the free energy is therefore a
random variable whose distribution regime_probabilities estimates, and whose
all-subcritical probability P(F1) has a closed product form.  tune_profile
inverts the map to hit requested dominance probabilities.
"""

import math

import numpy as np

from heavyspin import model as fm
from heavyspin import tails
from heavyspin.streams import stream

law = tails.TailLaw(alpha=0.8)
n, p, trials = 142, 2, 1500          # C(142,2) = 10011
b = tails.quantile_b(law, n, p)
rng = stream(13, 0)
total = math.comb(n, p)
maxima = []
for _ in range(trials):
    u = float(np.min(1.0 - rng.random(total)))
    maxima.append(tails.quantile(law, u) / b)
print(f"KS(rescaled maxima, Frechet({law.alpha})) over {trials} trials: "
      f"{tails.frechet_gof(maxima, law.alpha):.4f}")

profile = fm.MixtureProfile(alphas={2: 0.5, 3: 2.0}, beta=1.0)
probs = fm.regime_probabilities(profile, law.alpha, 100_000, stream(13, 1))
quad = fm.frechet_p1_quadrature(profile, law.alpha)
print(f"P(F1): MC = {probs.p1:.4f}, quadrature product = {quad:.4f}")
print(f"dominance probabilities: "
      f"{ {q: round(v, 4) for q, v in probs.p_t.items()} }")

res = fm.tune_profile({2: 0.3, 3: 0.5}, law.alpha, beta=1.0, tolerance=0.02,
                      budget=40, rng=stream(13, 2), trials_per_eval=20_000)
print(f"tuned alphas for targets p_2 = 0.3, p_3 = 0.5: "
      f"{ {q: round(v, 4) for q, v in res.profile.alphas.items()} }")
print(f"achieved: p_2 = {res.achieved.p_t.get(2, 0):.3f}, "
      f"p_3 = {res.achieved.p_t.get(3, 0):.3f}, p1 = {res.achieved.p1:.3f} "
      f"(converged: {res.converged})")
