"""Exact low moments, the integration-by-parts identity and the recursion bounds."""

import numpy as np

from mxconc import bounds, moments, parameters
from mxconc.ensembles import EnsembleSpec, build

spec = EnsembleSpec.from_inline("goe:5")
series = build(spec)
for p in (1, 2):
    est = moments.mc_estimate(series, "trace_moment", 20000, seed=0, p=p)
    print(f"E tr X^{2 * p}: exact {moments.exact_moment(series, p):.4f}, "
          f"MC {est.mean:.4f} +- {est.stderr:.4f}")

for p in (2, 3):
    r = moments.ibp_residual(series, p, samples=5000, seed=0)
    print(f"p={p}: lhs {r['lhs'].mean:.4f}  rhs {r['rhs'].mean:.4f}  z = {r['zscore']:+.2f}")

print("Catalan numbers:", [moments.catalan(p) for p in range(8)])

big = EnsembleSpec.from_inline("goe:200")
s = build(big)
w = parameters.closed_form_alignment(big, np.inf).value
for p in (1, 2, 3):
    b = bounds.strong_iso_bounds(s, p, w)
    est = moments.mc_estimate(s, "normalized_trace_root", 100, seed=0, p=p)
    print(f"goe:200 p={p}: [{b['lower']:.4f}, {b['upper']:.4f}] (lower valid: {b['lower_valid']}) "
          f"estimate {est.mean:.4f}")
