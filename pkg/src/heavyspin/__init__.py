"""Heavy-tailed mixed p-spin spherical model toolkit.

Layers, bottom up: tail laws and extreme-value checks (tails), log-domain
Gaussian/sphere moments (moments), phase objects lambda_p / H_p* / f_p / t
(phase), the exact single-monomial partition series (series), non-intersecting
monomial predictions (nim), full-model sampling and regime classification
(model), sphere Monte Carlo and Gibbs-geometry tests (sampler), and the
experiment CLI (cli).
"""

__version__ = "0.1.0"

from . import graphs, moments, nim, phase, sampler, series, streams, tails
from . import model

__all__ = ["graphs", "model", "moments", "nim", "phase", "sampler", "series",
           "streams", "tails", "__version__"]
