"""Matrix Gaussian series: concentration parameters, Monte Carlo moments, and
numerical checks of Khintchine-type inequalities.

Modules
-------
matalg        Hermitian linear algebra, Schatten norms, unitary-group helpers
ensembles     GaussianSeries and the named ensembles (diag, goe, spin, indep, ...)
parameters    sigma_q, alignment w_q, delta, weak variance
moments       Monte Carlo and exact trace moments, Catalan numbers, recursion bounds
bounds        Khintchine-type bound evaluators and statistical verdicts
inequalities  randomized sweeps of auxiliary matrix and scalar inequalities
isotropy      strong-isotropy checks and semicircle moments
cli           the ``mxconc`` command
"""

__version__ = "0.1.0"

from .ensembles import EnsembleSpec, GaussianSeries, build, sample
from .errors import DomainError, NumericalError, SpecParseError, ValidationError

__all__ = [
    "__version__",
    "EnsembleSpec",
    "GaussianSeries",
    "build",
    "sample",
    "DomainError",
    "NumericalError",
    "SpecParseError",
    "ValidationError",
]
