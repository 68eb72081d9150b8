"""Dense Hermitian linear algebra.

Matrices are plain numpy arrays.  The helpers here validate the structural
invariants (Hermitian, unitary) and implement Schatten norms, spectral
functional calculus and the unitary-group utilities used by the alignment
optimizer.
"""

from collections import namedtuple

import numpy as np

from ._config import tol
from .errors import DomainError, NumericalError, ValidationError

__all__ = [
    "EigenDecomposition",
    "as_matrix",
    "as_hermitian",
    "check_unitary",
    "unitarity_defect",
    "herm_eig",
    "singular_values",
    "schatten_norm",
    "schatten_from_singular_values",
    "herm_apply",
    "herm_abs",
    "haar_unitary",
    "polar_unitary",
    "skew_part",
    "retract_unitary",
]

EigenDecomposition = namedtuple("EigenDecomposition", ["eigenvalues", "eigenvectors"])


def as_matrix(B):
    B = np.asarray(B)
    if B.ndim != 2 or 0 in B.shape:
        raise ValidationError(f"expected a nonempty 2-D matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise ValidationError("matrix has non-finite entries")
    return B


def as_hermitian(H, rtol=None):
    """Validate ``H`` as Hermitian and return its symmetrized copy ``(H + H*)/2``.

    The defect ``max|H - H*|`` must not exceed ``rtol * max(1, max|H|)``.
    """
    H = as_matrix(H)
    if H.shape[0] != H.shape[1]:
        raise ValidationError(f"Hermitian matrix must be square, got {H.shape}")
    rtol = tol("hermitian") if rtol is None else rtol
    defect = np.max(np.abs(H - H.conj().T))
    scale = max(1.0, float(np.max(np.abs(H))))
    if defect > rtol * scale:
        raise ValidationError(f"matrix is not Hermitian (defect {defect:.3g})")
    if np.iscomplexobj(H):
        return 0.5 * (H + H.conj().T)
    return 0.5 * (H + H.T)


def unitarity_defect(Q):
    Q = np.asarray(Q)
    return float(np.linalg.norm(Q.conj().T @ Q - np.eye(Q.shape[0])))


def check_unitary(Q, atol=None):
    Q = as_matrix(Q)
    if Q.shape[0] != Q.shape[1]:
        raise ValidationError(f"unitary matrix must be square, got {Q.shape}")
    atol = tol("unitary") if atol is None else atol
    defect = unitarity_defect(Q)
    if defect > atol:
        raise ValidationError(f"matrix is not unitary (defect {defect:.3g})")
    return Q


def herm_eig(H):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    H = as_hermitian(H)
    lam, U = np.linalg.eigh(H)
    return EigenDecomposition(lam, U)


def singular_values(B):
    return np.linalg.svd(as_matrix(B), compute_uv=False)


def schatten_from_singular_values(s, q):
    s = np.abs(np.asarray(s, dtype=float))
    if q == np.inf:
        return float(s.max()) if s.size else 0.0
    if q < 1:
        raise DomainError(f"Schatten exponent must be >= 1, got {q}")
    top = s.max() if s.size else 0.0
    if top == 0.0:
        return 0.0
    # scale out the top value to avoid overflow for large q
    return float(top * np.sum((s / top) ** q) ** (1.0 / q))


def schatten_norm(B, q):
    """Schatten q-norm: the l_q norm of the singular values (q = inf is spectral)."""
    if q != np.inf and q < 1:
        raise DomainError(f"Schatten exponent must be >= 1, got {q}")
    return schatten_from_singular_values(singular_values(B), q)


def herm_apply(H, f):
    """Spectral calculus: ``U diag(f(lambda)) U*`` for Hermitian ``H``."""
    lam, U = herm_eig(H)
    with np.errstate(invalid="ignore", divide="ignore"):
        flam = np.asarray(f(lam), dtype=float)
    if flam.shape != lam.shape or not np.all(np.isfinite(flam)):
        raise DomainError("function is undefined on the spectrum")
    out = (U * flam) @ U.conj().T
    return as_hermitian(out, rtol=1e-8)


def herm_abs(H):
    return herm_apply(H, np.abs)


def haar_unitary(d, stream):
    """Haar-distributed d x d unitary (QR of a complex Ginibre matrix, phase-fixed)."""
    if d < 1:
        raise DomainError("dimension must be positive")
    Z = stream.complex_normal((d, d))
    Q, R = np.linalg.qr(Z)
    diag = np.diagonal(R)
    phases = diag / np.abs(diag)
    return Q * phases


def polar_unitary(M):
    """Unitary polar factor of ``M``; the closest unitary in Frobenius norm."""
    U, s, Vh = np.linalg.svd(M)
    if s[-1] <= 1e-14 * max(1.0, s[0]):
        raise NumericalError("matrix is singular; polar factor is not unique")
    return U @ Vh


def skew_part(M):
    return 0.5 * (M - M.conj().T)


def retract_unitary(Q, S, atol=1e-8):
    """Move from ``Q`` along the skew-Hermitian step ``S``: polar factor of ``Q + Q S``."""
    S = np.asarray(S)
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S + S.conj().T)) > atol * scale:
        raise ValidationError("step is not skew-Hermitian")
    return polar_unitary(Q + Q @ S)
