"""Trace moments and spectral norms of a Gaussian series.

Monte Carlo estimates are built from per-draw spectra.  Draw ``k`` is a pure
function of ``(seed, k)`` (see :mod:`mxconc.rng`), draws are grouped into
fixed-size chunks that do not depend on the worker count, and the reduction
runs over the full index-ordered array, so results are bitwise identical for
any number of threads.

Statistics (``p`` is the half-order, so ``trace_moment(2)`` is E tr X^4):

==========================  ==============================================
``trace_moment(p)``          E tr X^{2p}
``normalized_trace_moment``  E tr X^{2p} / d
``spectral_norm``            E ||X||
``schatten_root(p)``         (E tr X^{2p})^{1/(2p)}, plug-in
``normalized_trace_root``    (E tr X^{2p} / d)^{1/(2p)}, plug-in
==========================  ==============================================
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .parameters import delta_matrix, variance_matrix
from .rng import RngStream

__all__ = [
    "STATISTICS",
    "MomentEstimate",
    "RecursionBounds",
    "Statistic",
    "parse_statistic",
    "draw_spectra",
    "evaluate_statistic",
    "mc_estimate",
    "exact_moment",
    "catalan",
    "catalan_recursive",
    "ibp_residual",
    "recursion_bounds",
]

STATISTICS = (
    "trace_moment",
    "normalized_trace_moment",
    "spectral_norm",
    "schatten_root",
    "normalized_trace_root",
)
_ALIASES = {
    "spectral": "spectral_norm",
    "trace": "trace_moment",
    "normalized_trace": "normalized_trace_moment",
    "schatten": "schatten_root",
    "root": "normalized_trace_root",
}
_ROOTS = {"schatten_root": "trace_moment", "normalized_trace_root": "normalized_trace_moment"}

# entries of realized matrices held in memory at once
_CHUNK_ENTRIES = 4_000_000

CSV_COLUMNS = ("statistic", "p", "samples", "mean", "stderr", "seed")


@dataclass(frozen=True)
class Statistic:
    name: str
    p: int = None

    def __post_init__(self):
        if self.name not in STATISTICS:
            raise ValidationError(f"unknown statistic {self.name!r}; expected one of {STATISTICS}")
        if self.name == "spectral_norm":
            object.__setattr__(self, "p", None)
        elif self.p is None or int(self.p) != self.p or self.p < 1:
            raise DomainError(f"{self.name} needs an integer p >= 1, got {self.p!r}")
        else:
            object.__setattr__(self, "p", int(self.p))

    def __str__(self):
        return self.name if self.p is None else f"{self.name}({self.p})"


def parse_statistic(text, p=None):
    """``"spectral"``, ``"trace_moment"`` with ``p``, or ``"trace_moment(2)"``."""
    text = text.strip().replace("-", "_")
    if text.endswith(")") and "(" in text:
        text, _, arg = text[:-1].partition("(")
        try:
            p = int(arg)
        except ValueError:
            raise ValidationError(f"bad statistic order {arg!r}") from None
    name = _ALIASES.get(text, text)
    return Statistic(name, p)


@dataclass(frozen=True)
class MomentEstimate:
    statistic: str
    p: int
    samples: int
    mean: float
    stderr: float
    seed: int

    def __post_init__(self):
        if not math.isfinite(self.mean):
            raise ValidationError("estimate mean is not finite")
        if self.stderr < 0:
            raise ValidationError("stderr must be nonnegative")

    def to_dict(self):
        return asdict(self)

    def csv_row(self):
        return [self.statistic, "" if self.p is None else self.p, self.samples,
                repr(self.mean), repr(self.stderr), self.seed]


# ---------------------------------------------------------------------------
# drawing spectra


def _chunk_size(series):
    return max(1, _CHUNK_ENTRIES // (series.dim * series.dim))


def _gaussian_block(series, seed, start, stop):
    return np.stack([RngStream(seed, k, "sample").normal(series.n) for k in range(start, stop)])


def _diagonal_columns(series):
    d = series.dim
    return series.coeffs[:, np.arange(d) * (d + 1)]


def _spectra_chunk(series, seed, start, stop, diag_coeffs):
    G = _gaussian_block(series, seed, start, stop)
    if diag_coeffs is not None:
        # diagonal series: the realized matrix is diagonal, its entries are the spectrum
        lam = np.asarray((diag_coeffs.T @ G.T).T).real
        return np.sort(lam, axis=1)
    return np.linalg.eigvalsh(series.realize(G).reshape(stop - start, series.dim, series.dim))


def _map_chunks(func, samples, chunk, threads):
    bounds = [(s, min(s + chunk, samples)) for s in range(0, samples, chunk)]
    if threads is None or threads <= 1 or len(bounds) == 1:
        return [func(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: func(*ab), bounds))


def draw_spectra(series, samples, seed, threads=1):
    """Eigenvalues (ascending) of draws ``0 .. samples-1``, shape ``(samples, d)``."""
    if samples < 1:
        raise ValidationError("samples must be positive")
    diag = _diagonal_columns(series) if series.is_diagonal else None
    parts = _map_chunks(lambda a, b: _spectra_chunk(series, seed, a, b, diag),
                        samples, _chunk_size(series), threads)
    return np.concatenate(parts, axis=0)


def _per_draw(spectra, stat):
    d = spectra.shape[1]
    if stat.name == "spectral_norm":
        return np.max(np.abs(spectra), axis=1)
    base = _ROOTS.get(stat.name, stat.name)
    vals = np.sum(spectra ** (2 * stat.p), axis=1)
    if base == "normalized_trace_moment":
        vals = vals / d
    return vals


def _mean_stderr(values):
    n = values.size
    mean = float(np.sum(values) / n)
    std = float(np.sqrt(np.sum((values - mean) ** 2) / (n - 1))) if n > 1 else 0.0
    return mean, std / math.sqrt(n)


def evaluate_statistic(spectra, stat, seed):
    """Reduce per-draw spectra to a :class:`MomentEstimate`."""
    stat = stat if isinstance(stat, Statistic) else parse_statistic(stat)
    values = _per_draw(spectra, stat)
    mean, se = _mean_stderr(values)
    if stat.name in _ROOTS:
        k = 2 * stat.p
        root = mean ** (1.0 / k) if mean > 0 else 0.0
        # delta method: d/dm m^{1/k} = m^{1/k - 1} / k
        se = root / (k * mean) * se if mean > 0 else 0.0
        mean = root
    return MomentEstimate(stat.name, stat.p, int(spectra.shape[0]), mean, se, int(seed))


def mc_estimate(series, statistic, samples=1000, seed=0, p=None, threads=1):
    """Monte Carlo estimate of ``statistic`` over ``samples`` seeded draws."""
    stat = statistic if isinstance(statistic, Statistic) else parse_statistic(statistic, p)
    if samples < 2:
        raise ValidationError("samples must be >= 2")
    return evaluate_statistic(draw_spectra(series, samples, seed, threads), stat, seed)


# ---------------------------------------------------------------------------
# exact values


def exact_moment(series, p):
    """E tr X^{2p} for p = 1 (tr V) or p = 2 (2 tr V^2 + tr Delta)."""
    if p == 1:
        return float(np.trace(variance_matrix(series)).real)
    if p == 2:
        V = variance_matrix(series)
        return float(2.0 * np.sum(np.abs(V) ** 2) + np.trace(delta_matrix(series)).real)
    raise DomainError(f"exact moments are available for p in {{1, 2}}, got {p}")


def catalan(p):
    """Catalan number binom(2p, p) / (p + 1), for 0 <= p <= 30."""
    if int(p) != p or p < 0:
        raise DomainError(f"Catalan index must be a nonnegative integer, got {p}")
    if p > 30:
        raise DomainError(f"Catalan number {p} exceeds the supported 64-bit range (p <= 30)")
    return math.comb(2 * int(p), int(p)) // (int(p) + 1)


def catalan_recursive(p):
    """Catalan number from Cat_{k+1} = sum_j Cat_j Cat_{k-j}."""
    cat = [1]
    for k in range(p):
        cat.append(sum(cat[j] * cat[k - j] for j in range(k + 1)))
    return cat[p]


# ---------------------------------------------------------------------------
# trace-moment identity


def _ibp_chunk(series, H, seed, start, stop, p):
    r = 2 * p - 2
    X = series.realize(_gaussian_block(series, seed, start, stop))
    X = X.reshape(stop - start, series.dim, series.dim)
    lhs = np.empty(stop - start)
    rhs = np.empty(stop - start)
    powers = np.arange(r + 1)
    for k, Xk in enumerate(X):
        lam, U = np.linalg.eigh(Xk)
        lhs[k] = np.sum(lam ** (2 * p))
        # tr[H X^q H X^{r-q}] = sum_ab |(U* H U)_ab|^2 lam_b^q lam_a^{r-q}
        Ht = U.conj().T @ H @ U
        weight = np.sum(np.abs(Ht) ** 2, axis=0)
        lb = lam[None, :, None] ** powers
        la = lam[:, None, None] ** (r - powers)
        K = np.sum(la * lb, axis=2)
        rhs[k] = float(np.sum(weight * K))
    return lhs, rhs


def ibp_residual(series, p, samples=1000, seed=0, threads=1):
    """Paired check of E tr X^{2p} = sum_q sum_i E tr[H_i X^q H_i X^{2p-2-q}].

    Both sides are evaluated on the same draws; the z-score is the mean of
    the per-draw difference over its standard error.
    """
    if int(p) != p or p < 1:
        raise DomainError(f"p must be a positive integer, got {p}")
    if samples < 2:
        raise ValidationError("samples must be >= 2")
    H = series.dense()
    parts = _map_chunks(lambda a, b: _ibp_chunk(series, H, seed, a, b, int(p)),
                        samples, max(1, _chunk_size(series) // max(1, series.n)), threads)
    lhs = np.concatenate([a for a, _ in parts])
    rhs = np.concatenate([b for _, b in parts])
    diff_mean, diff_se = _mean_stderr(lhs - rhs)
    scale = max(1.0, abs(diff_mean), float(np.mean(np.abs(lhs))))
    z = 0.0 if diff_se <= 1e-12 * scale else diff_mean / diff_se
    est = lambda v, name: MomentEstimate(name, int(p), samples, *_mean_stderr(v), int(seed))
    return {"lhs": est(lhs, "trace_moment"), "rhs": est(rhs, "ibp_sum"), "zscore": float(z)}


# ---------------------------------------------------------------------------
# sharp-moment recursion bounds


@dataclass(frozen=True)
class RecursionBounds:
    p: int
    sigma: float
    w: float
    upper: float
    lower: float
    lower_valid: bool
    d: int = 1
    scale: str = "normalized_trace"

    def to_dict(self):
        return asdict(self)

    def schatten(self):
        """The same bounds on the Schatten scale, multiplied by d^{1/(2p)}."""
        if self.scale == "schatten":
            return self
        f = self.d ** (1.0 / (2 * self.p))
        return RecursionBounds(self.p, self.sigma, self.w, self.upper * f, self.lower * f,
                               self.lower_valid, self.d, "schatten")


def recursion_bounds(sigma, w, p, d=1, scale="normalized_trace"):
    """Bounds on (E tr X^{2p} / d)^{1/(2p)} from the sharp-moment recursion.

    upper = Cat_p^{1/(2p)} sigma + 2^{1/4} p^{5/4} w
    lower = Cat_p^{1/(2p)} sigma [1 - (p w / sigma)^4]_+^{1/(2p)},
    valid when p^{7/4} w <= 0.7 sigma.
    """
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if w < 0:
        raise DomainError("w must be nonnegative")
    if int(p) != p or p < 1:
        raise DomainError(f"p must be a positive integer, got {p}")
    if scale not in ("normalized_trace", "schatten"):
        raise ValidationError(f"unknown scale {scale!r}")
    p = int(p)
    c = catalan(p) ** (1.0 / (2 * p)) * sigma
    upper = c + 2.0 ** 0.25 * p ** 1.25 * w
    lower = c * max(0.0, 1.0 - (p * w / sigma) ** 4) ** (1.0 / (2 * p))
    valid = p ** 1.75 * w <= 0.7 * sigma
    out = RecursionBounds(p, float(sigma), float(w), float(upper), float(lower), bool(valid), int(d))
    return out.schatten() if scale == "schatten" else out
