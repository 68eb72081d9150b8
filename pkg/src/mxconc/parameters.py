"""Concentration parameters of a matrix Gaussian series.

* ``variance_matrix``   V = sum_i H_i^2
* ``sigma``             Schatten q-norm of V^{1/2}
* ``alignment_*``       the alignment parameter w_q: a feasible lower bound
                        from ascent over unitary triples, the sigma_q upper
                        bound, and closed forms for the named ensembles
* ``delta_param``       the alignment objective at the identity triple
* ``weak_variance_lower``  sup over unit u, v of (sum_i |u* H_i v|^2)^{1/2}

The alignment objective for a triple (Q1, Q2, Q3) is built from

    W = sum_{i,j} H_i Q1 H_j Q2 H_i Q3 H_j = sum_i H_i Q1 Phi(Q2 H_i Q3),

where Phi(A) = sum_j H_j A H_j, so one evaluation costs O(n) products
instead of O(n^2).
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import DomainError, ValidationError
from .matalg import as_hermitian, check_unitary, haar_unitary, polar_unitary, schatten_from_singular_values
from .rng import RngStream

__all__ = [
    "UnitaryTriple",
    "ClosedForm",
    "AlignmentResult",
    "ParamReport",
    "qkey",
    "variance_matrix",
    "sigma",
    "alignment_matrix",
    "alignment_objective",
    "alignment_lower",
    "alignment_upper",
    "alignment",
    "closed_form_alignment",
    "delta_matrix",
    "delta_param",
    "weak_variance_lower",
    "compute_params",
]

# dense (n, d, d) coefficient arrays above this many entries are not materialized
DENSE_LIMIT = 2_000_000

ROUNDING_FLOOR = 1e3 * np.finfo(float).eps


def qkey(q):
    """String key for an exponent: ``"4"``, ``"2.5"``, ``"inf"``."""
    if q == np.inf:
        return "inf"
    q = float(q)
    return str(int(q)) if q.is_integer() else repr(q)


def parse_q(text):
    text = str(text).strip().lower()
    if text in ("inf", "infinity", "oo"):
        return np.inf
    q = float(text)
    return int(q) if q.is_integer() else q


@dataclass(frozen=True)
class UnitaryTriple:
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray

    def __post_init__(self):
        for Q in (self.q1, self.q2, self.q3):
            check_unitary(Q)

    @classmethod
    def identity(cls, d):
        eye = np.eye(d, dtype=complex)
        return cls(eye, eye.copy(), eye.copy())

    def __iter__(self):
        return iter((self.q1, self.q2, self.q3))


@dataclass(frozen=True)
class ClosedForm:
    value: float
    tag: str  # "exact", "upper" or "approx"
    alternatives: dict = field(default_factory=dict)

    def to_dict(self):
        return {"value": self.value, "tag": self.tag, "alternatives": dict(self.alternatives)}


@dataclass
class AlignmentResult:
    q: float
    lower: float
    witness: UnitaryTriple
    upper: float
    closed_form: ClosedForm = None
    optimized: bool = True

    def to_dict(self, witness=False):
        out = {
            "q": qkey(self.q),
            "lower": self.lower,
            "upper": self.upper,
            "optimized": self.optimized,
            "closed_form": None if self.closed_form is None else self.closed_form.to_dict(),
        }
        if witness:
            out["witness"] = [{"re": Q.real.tolist(), "im": Q.imag.tolist()} for Q in self.witness]
        return out


@dataclass
class ParamReport:
    label: str
    sigma: dict
    alignment: dict
    delta: float
    weak_variance_lower: float

    def to_dict(self):
        return {
            "label": self.label,
            "sigma": {qkey(q): v for q, v in self.sigma.items()},
            "alignment": {qkey(q): r.to_dict() for q, r in self.alignment.items()},
            "delta": self.delta,
            "weak_variance_lower": self.weak_variance_lower,
        }


# ---------------------------------------------------------------------------
# variance and sigma


def variance_matrix(series):
    V = (series.left_stack @ series.right_stack).toarray()
    return as_hermitian(V, rtol=1e-9)


def _variance_eigs(series):
    return np.clip(np.linalg.eigvalsh(variance_matrix(series)), 0.0, None)


def sigma(series, q):
    """Schatten q-norm of V^{1/2}: (tr V^{q/2})^{1/q}, or ||V||^{1/2} at q = inf."""
    if q != np.inf and q < 1:
        raise DomainError(f"sigma needs q >= 1, got {q}")
    return schatten_from_singular_values(np.sqrt(_variance_eigs(series)), q)


# ---------------------------------------------------------------------------
# alignment objective


def _stack_right(series, P):
    """sum_i P_i H_i for a batch P of shape (n, d, d)."""
    n, d = series.n, series.dim
    wide = np.ascontiguousarray(np.swapaxes(P, 0, 1)).reshape(d, n * d)
    return np.asarray((series.right_stack.T @ wide.T).T)


def _dense_coeffs(series):
    if series.n * series.dim ** 2 > DENSE_LIMIT:
        raise ValidationError(
            f"series too large for dense alignment evaluation (n={series.n}, d={series.dim})"
        )
    return series.dense()


def _w_parts(series, H, Q1, Q2, Q3):
    M = series.phi(Q2 @ H @ Q3)
    W = series.stack_product(Q1 @ M)
    return W, M


def alignment_matrix(series, triple):
    Q1, Q2, Q3 = triple
    d = series.dim
    if Q1.shape != (d, d):
        raise ValidationError(f"triple has dimension {Q1.shape[0]}, series has {d}")
    return _w_parts(series, _dense_coeffs(series), Q1, Q2, Q3)[0]


def _objective_from_w(W, q):
    s = np.linalg.svd(W, compute_uv=False)
    if q == np.inf:
        return float(s.max()) ** 0.25
    # (tr |W|^{q/4})^{1/q}
    return schatten_from_singular_values(s, q / 4.0) ** 0.25


def alignment_objective(series, triple, q):
    """(tr |W|^{q/4})^{1/q} for the triple, or ||W||^{1/4} at q = inf."""
    if q != np.inf and q < 4:
        raise DomainError(f"alignment exponent must be >= 4, got {q}")
    return _objective_from_w(alignment_matrix(series, triple), q)


# ---------------------------------------------------------------------------
# ascent over unitary triples


class _FreeTriple:
    """Three independent unitaries."""

    def __init__(self, Qs):
        self.Qs = [np.asarray(Q, dtype=complex) for Q in Qs]

    def triple(self):
        return self.Qs

    def direction(self, A):
        # d f = Re tr(A_l Q_l S_l) along Q_l -> Q_l (I + S_l); steepest skew direction
        out = []
        for Al, Q in zip(A, self.Qs):
            B = Al @ Q
            out.append(0.5 * (B.conj().T - B))
        return out

    def moved(self, direction, t):
        return _FreeTriple([polar_unitary(Q + t * (Q @ S)) for Q, S in zip(self.Qs, direction)])


class _CommutingTriple:
    """Q_l = U diag(exp(i theta_l)) U*, with slot ``fixed`` pinned to the identity."""

    def __init__(self, U, thetas, fixed):
        self.U = U
        self.thetas = [np.asarray(t, dtype=float) for t in thetas]
        self.fixed = fixed

    def triple(self):
        d = self.U.shape[0]
        out, k = [], 0
        for slot in range(3):
            if slot == self.fixed:
                out.append(np.eye(d, dtype=complex))
            else:
                out.append((self.U * np.exp(1j * self.thetas[k])) @ self.U.conj().T)
                k += 1
        return out

    def direction(self, A):
        U = self.U
        C = np.zeros_like(U)
        gth = []
        k = 0
        for slot in range(3):
            if slot == self.fixed:
                continue
            D = np.exp(1j * self.thetas[k])
            B = U.conj().T @ A[slot] @ U
            gth.append(np.real(1j * D * np.diagonal(B)))
            C += D[:, None] * B - B * D[None, :]
            k += 1
        return [0.5 * (C.conj().T - C)] + gth

    def moved(self, direction, t):
        S, *gth = direction
        U = polar_unitary(self.U + t * (self.U @ S))
        return _CommutingTriple(U, [th + t * g for th, g in zip(self.thetas, gth)], self.fixed)


def _surrogate(W, m):
    s = np.linalg.svd(W, compute_uv=False)
    return float(np.sum(s ** (2 * m)))


def _euclidean_grads(series, H, Qs, W, M, m):
    """A_l with d tr (W*W)^m = 2m Re tr(A_l dQ_l)."""
    Q1, Q2, Q3 = Qs
    WW = W.conj().T @ W
    G = W @ np.linalg.matrix_power(WW, m - 1)
    Gs = G.conj().T
    A1 = _stack_right(series, M @ Gs)
    N = series.phi(Gs @ H @ Q1)
    A2 = series.stack_product(Q3 @ N)
    A3 = _stack_right(series, N @ Q2)
    return [A1, A2, A3]


def _norm(direction):
    return math.sqrt(sum(float(np.vdot(x, x).real) for x in direction))


def _ascend(series, H, state, q, m, iters, best):
    """Backtracking steepest ascent on tr (W*W)^m; updates ``best`` with the true objective."""
    Qs = state.triple()
    W, M = _w_parts(series, H, *Qs)
    f = _surrogate(W, m)
    history = [f]
    step = 0.25
    for _ in range(iters):
        A = _euclidean_grads(series, H, Qs, W, M, m)
        direction = state.direction(A)
        g = _norm(direction)
        if g == 0.0 or not np.isfinite(g):
            break
        direction = [x / g for x in direction]
        accepted = False
        while step > 1e-12:
            cand = state.moved(direction, step)
            cQs = cand.triple()
            cW, cM = _w_parts(series, H, *cQs)
            cf = _surrogate(cW, m)
            if cf > f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        state, Qs, W, M, f = cand, cQs, cW, cM, cf
        step = min(2.0 * step, 1.0)
        value = _objective_from_w(W, q)
        if value > best[0]:
            best[0], best[1] = value, [Q.copy() for Q in Qs]
        history.append(f)
        if len(history) > 10 and f - history[-11] <= 1e-9 * abs(f):
            break
    return state


def _surrogate_powers(q):
    if q == np.inf:
        return [1, 2, 4]
    return [max(1, math.ceil(q / 8.0))]


def alignment_lower(series, q, restarts=20, iters=200, seed=0, restricted=False,
                    include_identity=True):
    """Best alignment objective found by ascent; a certified lower bound on w_q.

    Returns ``(value, UnitaryTriple)``.  Trajectory ``r`` starts from a Haar
    triple drawn from the substream ``(seed, r)``; when ``include_identity``
    an extra trajectory starts at the identity triple, so the result is never
    below ``delta``-type values at the identity.
    """
    if q != np.inf and q < 4:
        raise DomainError(f"alignment exponent must be >= 4, got {q}")
    H = _dense_coeffs(series)
    d = series.dim
    eye = np.eye(d, dtype=complex)
    best = [-1.0, None]

    starts = []
    if include_identity:
        starts.append(_FreeTriple([eye, eye, eye]))
    for r in range(restarts):
        rs = RngStream(seed, r, "alignment")
        if restricted:
            U = haar_unitary(d, rs)
            thetas = [2 * np.pi * rs.uniform(d), 2 * np.pi * rs.uniform(d)]
            starts.append(_CommutingTriple(U, thetas, r % 3))
        else:
            starts.append(_FreeTriple([haar_unitary(d, rs) for _ in range(3)]))

    powers = _surrogate_powers(q)
    budget = max(1, iters // len(powers))
    for state in starts:
        Qs = state.triple()
        W, _ = _w_parts(series, H, *Qs)
        value = _objective_from_w(W, q)
        if value > best[0]:
            best[0], best[1] = value, [Q.copy() for Q in Qs]
        for m in powers:
            state = _ascend(series, H, state, q, m, budget, best)
    return best[0], UnitaryTriple(*best[1])


def alignment_upper(series, q):
    """sigma_q, an upper bound on w_q for q >= 4."""
    if q != np.inf and q < 4:
        raise DomainError(f"the sigma bound on alignment needs q >= 4, got {q}")
    return sigma(series, q)


def closed_form_alignment(spec, q):
    """Known values of w_q for the named ensembles, or ``None``."""
    if q != np.inf and q < 4:
        raise DomainError(f"alignment exponent must be >= 4, got {q}")
    root = 0.0 if q == np.inf else 1.0 / q
    if spec.kind == "diag":
        d = spec.params["d"]
        return ClosedForm(d ** root, "exact")
    if spec.kind == "goe":
        d = spec.params["d"]
        value = (1.0 / d + 3.0 / d ** 2) ** 0.25 * d ** root
        alt = {"intro_upper": (4.0 * d) ** -0.25} if q == np.inf else {}
        return ClosedForm(value, "upper", alt)
    if spec.kind == "indep":
        A = np.abs(np.asarray(spec.params["A"], dtype=float))
        return ClosedForm(float(np.max(np.sum(A ** 4, axis=1)) ** 0.25), "approx")
    return None


# ---------------------------------------------------------------------------
# delta and weak variance


def delta_matrix(series):
    """sum_{i,j} H_i H_j H_i H_j, assembled sparsely."""
    d = series.dim
    P = (series.superop @ series.coeffs.T).T.tocoo()  # row i = Phi(H_i), row-major
    k, b = np.divmod(P.col, d)
    stack = sp.csr_matrix((P.data, (P.row * d + k, b)), shape=(series.n * d, d))
    D = (series.left_stack @ stack).toarray()
    return as_hermitian(D, rtol=1e-8)


def _delta_eigs(series):
    """|eigenvalues| of the delta matrix, with rounding residue flushed to zero.

    The fourth root turns a 1e-16 residue into 1e-4, so eigenvalues below
    ``ROUNDING_FLOOR * ||V||^2`` are treated as exact zeros.
    """
    s = np.abs(np.linalg.eigvalsh(delta_matrix(series)))
    scale = float(np.max(_variance_eigs(series))) ** 2
    s[s <= ROUNDING_FLOOR * scale] = 0.0
    return s


def delta_param(series):
    """||sum_{i,j} H_i H_j H_i H_j||^{1/4}."""
    return float(np.max(_delta_eigs(series))) ** 0.25


def _identity_objective(series, q):
    return _objective_from_w(np.diag(_delta_eigs(series)), q)


def alignment(series, q, spec=None, restarts=20, iters=200, seed=0, restricted=False):
    """Full AlignmentResult: optimizer lower bound, sigma upper bound, closed form."""
    upper = alignment_upper(series, q)
    closed = closed_form_alignment(spec, q) if spec is not None else None
    if series.n * series.dim ** 2 <= DENSE_LIMIT:
        lower, witness = alignment_lower(series, q, restarts, iters, seed, restricted)
        optimized = True
    else:
        lower, witness = _identity_objective(series, q), UnitaryTriple.identity(series.dim)
        optimized = False
    return AlignmentResult(q, lower, witness, upper, closed, optimized)


def _weak_top(series, v):
    """Top eigenpair of sum_i (H_i v)(H_i v)*."""
    d = series.dim
    C = series.coeffs.tocoo()
    a, k = np.divmod(C.col, d)
    B = sp.csr_matrix((C.data * v[k], (C.row, a)), shape=(series.n, d))  # row i = H_i v
    if d <= 64:
        M = as_hermitian((B.T @ B.conj()).toarray(), rtol=1e-8)
        lam, U = scipy.linalg.eigh(M, subset_by_index=[d - 1, d - 1])
        return max(lam[-1], 0.0), U[:, -1]
    Bt, Bc = B.T.tocsr(), B.conj().tocsr()
    op = LinearOperator((d, d), matvec=lambda x: Bt @ (Bc @ x), dtype=complex)
    lam, U = eigsh(op, k=1, which="LA", v0=v.astype(complex), tol=1e-13)
    u = U[:, 0]
    return max(float(lam[0]), 0.0), u / np.linalg.norm(u)


def weak_variance_lower(series, restarts=10, iters=100, seed=0):
    """Alternating maximization of (sum_i |u* H_i v|^2)^{1/2}; a lower bound on sigma_*."""
    d = series.dim
    best = 0.0
    for r in range(restarts):
        v = RngStream(seed, r, "weak").complex_normal(d)
        v /= np.linalg.norm(v)
        value = -1.0
        for _ in range(iters):
            _, u = _weak_top(series, v)
            val_v, v = _weak_top(series, u)
            new = math.sqrt(val_v)
            if new - value <= 1e-13 * max(new, 1e-300):
                value = max(value, new)
                break
            value = new
        best = max(best, value)
    return best


def compute_params(series, spec=None, qs=(2, 4, 8, np.inf), restarts=20, iters=200, seed=0,
                   restricted=False, weak_restarts=10):
    sig = {q: sigma(series, q) for q in qs}
    align = {q: alignment(series, q, spec, restarts, iters, seed, restricted)
             for q in qs if q == np.inf or q >= 4}
    return ParamReport(
        label=series.label,
        sigma=sig,
        alignment=align,
        delta=delta_param(series),
        weak_variance_lower=weak_variance_lower(series, weak_restarts, 100, seed),
    )
