"""Strong isotropy: E X^p is a multiple of the identity for every p.

Three checks are provided:

* ``signed_perm_invariant`` -- exact and sufficient.  A centered Gaussian
  series is determined by its covariance operator C(A) = sum_i H_i <H_i, A>,
  so invariance of C under conjugation by the generators of the
  signed-permutation group certifies distributional invariance, hence
  strong isotropy.
* ``mc_isotropy`` -- Monte Carlo estimate of how far mean(X^p) is from a
  scalar matrix.
* ``semicircle_check`` -- normalized trace moments against Cat_p sigma^{2p}.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .moments import Statistic, catalan, draw_spectra, evaluate_statistic
from .parameters import sigma
from .rng import RngStream
from .errors import DomainError, ValidationError

__all__ = [
    "IsotropyReport",
    "hermitian_coordinates",
    "signed_perm_generators",
    "signed_perm_invariant",
    "mc_isotropy",
    "semicircle_check",
    "isotropy_report",
]

EXACT_MAX_DIM = 32
MC_EPSILON = 1e-12


def hermitian_coordinates(A):
    """Real orthonormal coordinates of Hermitian matrices (batched, last two axes).

    Diagonal entries, then sqrt(2) Re and sqrt(2) Im of the strict upper
    triangle; the map is an isometry for <A, B> = Re tr(A B).
    """
    A = np.asarray(A)
    d = A.shape[-1]
    iu, ju = np.triu_indices(d, k=1)
    diag = np.real(np.diagonal(A, axis1=-2, axis2=-1))
    upper = A[..., iu, ju]
    r2 = math.sqrt(2.0)
    return np.concatenate([diag, r2 * upper.real, r2 * upper.imag], axis=-1)


def _basis(d):
    """Orthonormal basis of the Hermitian d x d matrices, shape (d^2, d, d)."""
    iu, ju = np.triu_indices(d, k=1)
    m = iu.size
    B = np.zeros((d * d, d, d), dtype=complex)
    idx = np.arange(d)
    B[idx, idx, idx] = 1.0
    r = 1.0 / math.sqrt(2.0)
    k = d + np.arange(m)
    B[k, iu, ju] = r
    B[k, ju, iu] = r
    k = d + m + np.arange(m)
    B[k, iu, ju] = 1j * r
    B[k, ju, iu] = -1j * r
    return B


def signed_perm_generators(d):
    """Adjacent transpositions and one sign flip; together they generate the group."""
    gens = []
    for k in range(d - 1):
        P = np.eye(d)
        P[[k, k + 1]] = P[[k + 1, k]]
        gens.append(P)
    F = np.eye(d)
    F[0, 0] = -1.0
    gens.append(F)
    return gens


def _covariance(series):
    """Covariance operator of the series in Hermitian coordinates, (d^2, d^2)."""
    F = hermitian_coordinates(series.dense())  # (n, d^2)
    return F.T @ F


def signed_perm_invariant(series, tol=1e-9):
    """``"pass"`` if the covariance commutes with every signed-permutation generator.

    Returns ``"not_applicable"`` above dimension 32, where the dense check
    becomes too costly.
    """
    d = series.dim
    if d > EXACT_MAX_DIM:
        return "not_applicable"
    K = _covariance(series)
    scale = max(float(np.max(np.abs(K))), 1e-300)
    basis = _basis(d)
    worst = 0.0
    for P in signed_perm_generators(d):
        # coordinates of P* B P for each basis element B: an orthogonal map T
        T = hermitian_coordinates(P.T @ basis @ P).T
        worst = max(worst, float(np.max(np.abs(K @ T - T @ K))) / scale)
    return "pass" if worst < tol else "fail"


def mc_isotropy(series, pmax, samples=1000, seed=0, antithetic=True):
    """Relative distance of mean(X^p) from mean(tr X^p / d) I for p = 0 .. pmax.

    With ``antithetic`` each draw X is paired with -X (2 * samples matrices
    in total).  Odd powers then cancel exactly, so their deviation is 0
    rather than a ratio of two noise terms.
    """
    if int(pmax) != pmax or pmax < 1:
        raise DomainError(f"pmax must be a positive integer, got {pmax}")
    if samples < 2:
        raise ValidationError("samples must be >= 2")
    d = series.dim
    acc = np.zeros((pmax + 1, d, d), dtype=complex)
    powers = np.arange(pmax + 1)
    # the pair (X, -X) contributes 2 X^p for even p and exactly 0 for odd p
    weight = (1.0 + (-1.0) ** powers) if antithetic else np.ones(pmax + 1)
    chunk = max(1, 2_000_000 // (d * d))
    for start in range(0, samples, chunk):
        stop = min(start + chunk, samples)
        G = np.stack([RngStream(seed, k, "sample").normal(series.n) for k in range(start, stop)])
        X = series.realize(G).reshape(stop - start, d, d)
        lam, U = np.linalg.eigh(X)
        lp = weight[None, :, None] * lam[:, None, :] ** powers[None, :, None]  # (b, pmax+1, d)
        acc += np.einsum("bij,bpj,bkj->pik", U, lp, U.conj(), optimize=True)
    mean = acc / (samples * (2 if antithetic else 1))
    out = {}
    for p in powers:
        M = mean[p]
        t = np.trace(M).real / d
        dev = np.linalg.norm(M - t * np.eye(d)) / (MC_EPSILON + np.linalg.norm(M))
        out[int(p)] = float(dev)
    out[0] = 0.0
    return out


def semicircle_check(series, pmax, samples=200, seed=0, threads=1):
    """Normalized trace moments E tr X^{2p} / d against Cat_p sigma^{2p}."""
    if int(pmax) != pmax or not 1 <= pmax <= 6:
        raise DomainError(f"pmax must be an integer in 1..6, got {pmax}")
    s = sigma(series, np.inf)
    spectra = draw_spectra(series, samples, seed, threads)
    out = {}
    for p in range(1, int(pmax) + 1):
        mu = evaluate_statistic(spectra, Statistic("normalized_trace_moment", p), seed)
        target = catalan(p) * s ** (2 * p)
        out[p] = {"mu_hat": mu, "catalan_target": target, "ratio": mu.mean / target}
    return out


@dataclass
class IsotropyReport:
    label: str
    exact_signed_perm: str
    mc_deviations: dict
    tolerance: float
    samples: int
    seed: int
    verdicts: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.verdicts:
            self.verdicts = {p: dev < self.tolerance for p, dev in self.mc_deviations.items()}

    @property
    def passed(self):
        return self.exact_signed_perm != "fail" and all(self.verdicts.values())

    def to_dict(self):
        return {
            "label": self.label,
            "exact_signed_perm": self.exact_signed_perm,
            "mc_deviations": {str(p): v for p, v in self.mc_deviations.items()},
            "verdicts": {str(p): bool(v) for p, v in self.verdicts.items()},
            "tolerance": self.tolerance,
            "samples": self.samples,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def isotropy_report(series, pmax=4, samples=20000, seed=0, tolerance=0.05, exact_tol=1e-9):
    return IsotropyReport(
        series.label,
        signed_perm_invariant(series, exact_tol),
        mc_isotropy(series, pmax, samples, seed),
        tolerance,
        samples,
        seed,
    )
