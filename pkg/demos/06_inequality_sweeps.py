"""Randomized sweeps of the auxiliary inequalities used by the moment arguments."""

import numpy as np

from mxconc import inequalities
from mxconc.ensembles import EnsembleSpec, build

for sweep in (inequalities.heinz_sweep, inequalities.lust_piquard_sweep, inequalities.poly_sweep):
    rep = sweep(500, seed=0)
    print(f"{rep.name:13s} trials={rep.trials} violations={rep.violations} "
          f"worst relative slack={rep.worst_slack:.2e}")

print(inequalities.poly_root(4, 2.0, 3.0))

series = build(EnsembleSpec.from_inline("goe:6"))
family = inequalities.rademacher_family(list(series.dense()))
print(inequalities.symmetrization_check(family, samples=100, seed=0, inner=20))
