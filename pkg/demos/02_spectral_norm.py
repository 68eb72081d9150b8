"""Monte Carlo spectral norms against the classical two-sided bound.

sigma / sqrt(2) <= E||X|| <= sqrt(e (1 + 2 ln d)) sigma.  The diagonal model
sits near the upper end (a log factor is needed), GOE near the lower end.
"""

import math

from mxconc import bounds, moments
from mxconc.ensembles import EnsembleSpec, build

for text in ("diag:100", "diag:1000", "goe:50", "goe:200"):
    spec = EnsembleSpec.from_inline(text)
    series = build(spec)
    (check,) = bounds.verify(series, ["khintchine-spectral"], samples=300, seed=1, spec=spec)
    est = check.estimate
    print(f"{text:10s} {check.lower:7.3f} <= {est.mean:7.3f} +- {est.stderr:.3f} <= {check.upper:7.3f}"
          f"   [{check.verdict}]")

# For the diagonal model E||X|| is the expected maximum of d independent
# |g_i|, which approaches sqrt(2 ln d) only slowly.
est = moments.mc_estimate(build(EnsembleSpec.from_inline("diag:1000")), "spectral", 300, seed=1)
print(f"diag:1000 E||X|| = {est.mean:.4f}, sqrt(2 ln 1000) = {math.sqrt(2 * math.log(1000)):.4f}")
