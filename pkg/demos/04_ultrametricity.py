"""Ultrametricity survives a dominant 3-spin but breaks for 4-spin.

With p = 4 the achievable overlaps {4t, 0, -4t} admit triples with
R_13 < min(R_12, R_23): pick replica 3 in the antipodal component of
replica 1.  With p = 3 the support {3t, -t} forbids any such triple.
"""

import math

from heavyspin import nim, phase, sampler
from heavyspin.model import MixtureProfile, planted_tensor
from heavyspin.streams import stream

n = 200
for p, factor in ((3, 1.5), (4, 1.3)):
    h = factor * phase.h_star(p)
    tensor = planted_tensor(n, [(h, tuple(range(p)))])
    profile = MixtureProfile(alphas={p: 1.0}, beta=1.0)
    t = phase.t_magnitude(p, h)
    patterns = nim.m_plus(p) * 2
    inits = sampler.orthant_inits(n, tuple(range(p)), patterns, stream(11, p),
                                  magnitude=math.sqrt(t * n))
    batch = sampler.run_chains(tensor, profile, 12_000, inits, master_seed=11 + p,
                               thin=20)
    rep = sampler.ultrametric_test(batch, margin=t / 2, max_time_points=20)
    floor = 0.5 / 2 ** (2 * (p - 1))
    print(f"p = {p}: violation frequency at margin t/2 = "
          f"{rep.violation_frequency:.4f} "
          f"({'breaks ultrametricity' if p >= 4 else 'ultrametric'}; "
          f"lower-bound floor for p>=4: {floor:.4f})")
