"""Ground state energy: the analytic maximum vs projected gradient ascent.

(1/n) GSE equals max over couplings of |alpha(p) H| p^{-p/2}, attained by
placing |sigma| = sqrt(n/p) on the maximizing support.  The optimizer should
land exactly there from planted and uniform restarts.
"""

import math

import numpy as np

from heavyspin import model as fm
from heavyspin import sampler
from heavyspin.streams import stream

n = 400
profile = fm.MixtureProfile(alphas={2: 1.0, 3: 1.0, 4: 1.0}, beta=1.0)
tensor = fm.planted_tensor(
    n, [(3.0, (0, 1)), (9.5, (3, 4, 5)), (21.0, (6, 7, 8, 9))])

ana = fm.gse_analytic(tensor, profile)
print(f"analytic (1/n) GSE = {ana.value:.6f} from p = {ana.p} on {ana.index}")
print(f"per-order candidates: "
      f"2-spin {3.0 / 2:.4f}, 3-spin {9.5 * 3 ** -1.5:.4f}, "
      f"4-spin {21.0 * 4 ** -2.0 * 4 ** 0.0:.4f}")

opt = sampler.gse_optimize(tensor, profile, restarts=6, rng=stream(17, 0))
print(f"optimizer  (1/n) GSE = {opt.energy_per_n:.6f} (restart: {opt.restart})")
mags = np.abs(opt.config[list(ana.index)])
print(f"optimizer magnitudes on the support: {np.round(mags, 4)} "
      f"vs sqrt(n/p) = {math.sqrt(n / ana.p):.4f}")
