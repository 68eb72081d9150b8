"""Concentration parameters of the named ensembles.

For a Gaussian series X = sum_i g_i H_i we compute the matrix variance
sigma, the alignment parameter w (optimizer lower bound, sigma upper bound
and closed form where one is known), the weak variance sigma_* and delta.
"""

import numpy as np

from mxconc import parameters
from mxconc.ensembles import EnsembleSpec, build

for text in ("diag:6", "goe:6", "spin:4", "indep:bump,6"):
    spec = EnsembleSpec.from_inline(text)
    series = build(spec)
    res = parameters.alignment(series, np.inf, spec=spec, restarts=10, seed=0)
    closed = "n/a" if res.closed_form is None else f"{res.closed_form.value:.4f} ({res.closed_form.tag})"
    print(f"{text:14s} d={series.dim:3d} n={series.n:3d}")
    print(f"    sigma       = {parameters.sigma(series, np.inf):.4f}")
    print(f"    w lower     = {res.lower:.4f}   w upper = {res.upper:.4f}   closed form = {closed}")
    print(f"    sigma_* >=  {parameters.weak_variance_lower(series, seed=0):.4f}")
    print(f"    delta       = {parameters.delta_param(series):.3e}")

# The diagonal model is as non-commutative as it gets in one sense
# (w = sigma = 1), whereas GOE has w -> 0 as d grows.
for d in (4, 8, 16):
    series = build(EnsembleSpec.from_inline(f"goe:{d}"))
    w, _ = parameters.alignment_lower(series, np.inf, restarts=3, iters=50, seed=0)
    print(f"goe:{d:<3d} w lower = {w:.4f}   (1/d + 3/d^2)^(1/4) = {(1 / d + 3 / d ** 2) ** 0.25:.4f}")
