"""Gibbs geometry of a dominant 3-spin interaction, predictions vs chains.

A single above-threshold monomial concentrates the Gibbs measure on
2^{p-1} components; on the dominant coordinates sigma_i^2/n approaches
t = 2 lambda / (2 p lambda + 1), the restricted overlap vanishes, and the
full overlap is supported on {t(p-2d)} over even pattern distances.
"""

import math

from heavyspin import nim, phase, sampler
from heavyspin.model import MixtureProfile, planted_tensor
from heavyspin.streams import stream

n = 200
h = 1.5 * phase.h_star(3)
tensor = planted_tensor(n, [(h, (0, 1, 2)), (0.3, (5, 6)), (1.0, (10, 11, 12))])
profile = MixtureProfile(alphas={2: 1.0, 3: 1.0}, beta=1.0)

spec = nim.NimSpec.of([(h, (0, 1, 2))], n)
geom = nim.geometry_prediction(spec, 1.0)
print(f"dominant p = {geom.p_dom}: t = {geom.t:.4f}, components = {geom.component_count}")
print(f"overlap support: {[round(v, 4) for v in geom.overlap_support]}"
      f"  (+ restricted remainder {geom.restricted_overlap})")
print(f"RSB level = {geom.rsb_level}, ultrametricity broken: "
      f"{geom.ultrametric_violation_expected}")
print()

patterns = nim.m_plus(3) * 4
inits = sampler.orthant_inits(n, (0, 1, 2), patterns, stream(7, 0),
                              magnitude=math.sqrt(geom.t * n))
batch = sampler.run_chains(tensor, profile, 15_000, inits, master_seed=7, thin=20)

means, _ = sampler.spin_magnitude(batch, (0, 1, 2))
print(f"chain spin magnitudes sigma_i^2/n: {[round(float(m), 4) for m in means]}"
      f"  (prediction t = {geom.t:.4f})")
ov = sampler.replica_overlaps(batch, exclude_first=3)
print(f"restricted overlap second moment: {ov.restricted_second_moment:.5f}")
occ = sampler.occupancy(batch, (0, 1, 2), h_sign=1)
print(f"negative-product mass: {occ.negative_mass:.4f}")
print("component occupancies:",
      {"".join('+' if s > 0 else '-' for s in k): round(v, 3)
       for k, v in sorted(occ.frequencies.items())})
