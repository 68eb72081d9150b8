"""Matrix Gaussian series X = sum_i gamma_i H_i and the named ensembles.

A series stores its coefficients as one sparse ``(n, d*d)`` matrix whose row
``i`` is the row-major flattening of ``H_i``.  The named ensembles are very
sparse (a GOE of dimension d has d**2 coefficients with two nonzeros each),
so this keeps ``goe:400`` at a few megabytes.
"""

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import SpecParseError, ValidationError
from .matalg import as_hermitian, as_matrix, check_unitary
from .rng import RngStream

__all__ = [
    "SPIN_ALPHA",
    "PAULI",
    "GaussianSeries",
    "RectSeries",
    "SampleDraw",
    "EnsembleSpec",
    "build",
    "sample",
    "sample_gaussians",
    "dilate",
    "random_series",
    "read_custom",
    "write_custom",
]

SPIN_ALPHA = 2.0 * math.sqrt(3.0) - 3.0

PAULI = (
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
)


@dataclass(frozen=True, eq=False)
class GaussianSeries:
    """Hermitian matrix Gaussian series with ``n`` coefficients of dimension ``dim``."""

    dim: int
    coeffs: sp.csr_matrix
    label: str = ""

    def __post_init__(self):
        C = self.coeffs
        if C.ndim != 2 or C.shape[1] != self.dim * self.dim:
            raise ValidationError("coefficient table has the wrong shape")
        if C.shape[0] < 1:
            raise ValidationError("a series needs at least one coefficient")
        if C.nnz == 0 or not np.any(C.data != 0):
            raise ValidationError("all coefficients are zero")

    @classmethod
    def from_matrices(cls, matrices, label=""):
        mats = [as_hermitian(np.asarray(H, dtype=complex)) for H in matrices]
        if not mats:
            raise ValidationError("a series needs at least one coefficient")
        d = mats[0].shape[0]
        if any(H.shape != (d, d) for H in mats):
            raise ValidationError("coefficients must share one dimension")
        table = sp.csr_matrix(np.stack([H.reshape(-1) for H in mats]))
        table.eliminate_zeros()
        return cls(d, table, label)

    @classmethod
    def from_triplets(cls, d, n, coeff_index, row, col, values, label=""):
        """Assemble from entries ``H_k[row, col] = value``; duplicates are summed."""
        table = sp.csr_matrix(
            (np.asarray(values, dtype=complex), (coeff_index, np.asarray(row) * d + np.asarray(col))),
            shape=(n, d * d),
        )
        table.sum_duplicates()
        return cls(d, table, label)

    @property
    def n(self):
        return self.coeffs.shape[0]

    @cached_property
    def is_real(self):
        return bool(np.all(self.coeffs.data.imag == 0))

    @cached_property
    def is_diagonal(self):
        rows, cols = np.divmod(self.coeffs.indices, self.dim)
        return bool(np.all(rows == cols))

    def coefficient(self, i):
        return self.coeffs.getrow(i).toarray().reshape(self.dim, self.dim)

    def dense(self):
        """All coefficients as an ``(n, d, d)`` array."""
        return self.coeffs.toarray().reshape(self.n, self.dim, self.dim)

    def scaled(self, c):
        return GaussianSeries(self.dim, (self.coeffs * float(c)).tocsr(), self.label)

    @cached_property
    def _transposed(self):
        return self.coeffs.T.tocsr()

    def realize(self, gammas):
        """X = sum_i gamma_i H_i; ``gammas`` may be ``(n,)`` or a batch ``(b, n)``."""
        g = np.asarray(gammas, dtype=float)
        d = self.dim
        flat = (self._transposed @ np.atleast_2d(g).T).T
        if self.is_real:
            flat = flat.real
        X = flat.reshape(-1, d, d)
        X = 0.5 * (X + np.conj(np.swapaxes(X, 1, 2)))
        return X[0] if g.ndim == 1 else X

    @cached_property
    def left_stack(self):
        """Sparse ``(d, n*d)`` matrix [H_1 H_2 ... H_n]."""
        d = self.dim
        C = self.coeffs.tocoo()
        a, k = np.divmod(C.col, d)
        return sp.csr_matrix((C.data, (a, C.row * d + k)), shape=(d, self.n * d))

    @cached_property
    def right_stack(self):
        """Sparse ``(n*d, d)`` matrix [H_1; H_2; ...; H_n]."""
        d = self.dim
        C = self.coeffs.tocoo()
        k, b = np.divmod(C.col, d)
        return sp.csr_matrix((C.data, (C.row * d + k, b)), shape=(self.n * d, d))

    @cached_property
    def superop(self):
        """Sparse ``(d*d, d*d)`` matrix of A -> sum_j H_j A H_j on row-major vectors."""
        d = self.dim
        C = self.coeffs
        indptr, indices, data = C.indptr, C.indices, C.data
        cnt = np.diff(indptr)
        entry_row = np.repeat(np.arange(self.n), cnt)
        partners = cnt[entry_row]
        first = np.repeat(np.arange(C.nnz), partners)
        block_start = np.repeat(np.cumsum(partners) - partners, partners)
        second = np.repeat(indptr[entry_row], partners) + (np.arange(first.size) - block_start)
        a, k = np.divmod(indices[first], d)
        l, b = np.divmod(indices[second], d)
        K = sp.csr_matrix(
            (data[first] * data[second], (a * d + b, k * d + l)), shape=(d * d, d * d)
        )
        K.sum_duplicates()
        return K

    def phi(self, A):
        """sum_j H_j A H_j, batched over a leading axis."""
        A = np.asarray(A)
        d = self.dim
        batch = A.reshape(-1, d * d)
        out = (self.superop @ batch.T).T
        return out.reshape(A.shape)

    def stack_product(self, B):
        """sum_i H_i B_i for a batch ``B`` of shape ``(n, d, d)``."""
        return np.asarray(self.left_stack @ B.reshape(self.n * self.dim, self.dim))

    def __repr__(self):
        tag = f" {self.label!r}" if self.label else ""
        return f"<GaussianSeries{tag} d={self.dim} n={self.n}>"


@dataclass(frozen=True, eq=False)
class RectSeries:
    """Rectangular series Z = sum_i gamma_i S_i with ``rows x cols`` coefficients."""

    rows: int
    cols: int
    coeffs: tuple

    def __post_init__(self):
        if not self.coeffs:
            raise ValidationError("a series needs at least one coefficient")
        for S in self.coeffs:
            if np.shape(S) != (self.rows, self.cols):
                raise ValidationError("inconsistent coefficient shapes")

    @classmethod
    def from_matrices(cls, matrices):
        mats = tuple(as_matrix(np.asarray(S, dtype=complex)) for S in matrices)
        if not mats:
            raise ValidationError("a series needs at least one coefficient")
        r, c = mats[0].shape
        return cls(r, c, mats)

    def realize(self, gammas):
        return sum(g * S for g, S in zip(gammas, self.coeffs))


def dilate(rect):
    """Hermitian dilation: coefficients [[0, S_i], [S_i*, 0]]."""
    r, c = rect.rows, rect.cols
    blocks = []
    for S in rect.coeffs:
        D = np.zeros((r + c, r + c), dtype=complex)
        D[:r, r:] = S
        D[r:, :r] = S.conj().T
        blocks.append(D)
    return GaussianSeries.from_matrices(blocks, label=f"dilation {r}x{c}")


@dataclass(frozen=True)
class SampleDraw:
    gaussians: np.ndarray
    realized: np.ndarray


def sample_gaussians(n, seed, index):
    return RngStream(seed, index, "sample").normal(n)


def sample(series, seed, index):
    """Draw number ``index`` of the series; a pure function of ``(seed, index)``."""
    g = sample_gaussians(series.n, seed, index)
    return SampleDraw(g, series.realize(g))


def random_series(d, n, stream, real=False):
    """Series with independent Gaussian-entry Hermitian coefficients."""
    if real:
        G = stream.normal((n, d, d))
    else:
        G = stream.complex_normal((n, d, d))
    H = (G + np.conj(np.swapaxes(G, 1, 2))) / 2.0
    return GaussianSeries.from_matrices(list(H), label=f"random d={d} n={n}")


# ---------------------------------------------------------------------------
# named ensembles


def _diag(d):
    i = np.arange(d)
    return GaussianSeries.from_triplets(d, d, i, i, i, np.ones(d), label=f"diag:{d}")


def _goe(d):
    i, j = np.divmod(np.arange(d * d), d)
    k = i * d + j
    s = 1.0 / math.sqrt(2.0 * d)
    # E_ij + E_ji for every ordered pair; duplicates on the diagonal sum to 2 E_ii
    idx = np.concatenate([k, k])
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    vals = np.full(idx.size, s)
    return GaussianSeries.from_triplets(d, d * d, idx, rows, cols, vals, label=f"goe:{d}")


def _spin(blocks):
    d = 2 * blocks
    base = [math.sqrt(SPIN_ALPHA) * np.eye(2, dtype=complex)] + list(PAULI)
    idx, rows, cols, vals = [], [], [], []
    for j in range(blocks):
        for k, P in enumerate(base):
            r, c = np.nonzero(P)
            idx.append(np.full(r.size, 4 * j + k))
            rows.append(2 * j + r)
            cols.append(2 * j + c)
            vals.append(P[r, c])
    return GaussianSeries.from_triplets(
        d, 4 * blocks, np.concatenate(idx), np.concatenate(rows), np.concatenate(cols),
        np.concatenate(vals), label=f"spin:{blocks}",
    )


def _indep(A, verbatim=False):
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    if verbatim:
        i, j = np.divmod(np.arange(d * d), d)
    else:
        i, j = np.triu_indices(d)
    a = A[i, j]
    keep = a != 0
    i, j, a = i[keep], j[keep], a[keep]
    k = np.arange(i.size)
    return GaussianSeries.from_triplets(
        d, max(i.size, 1), np.concatenate([k, k]), np.concatenate([i, j]),
        np.concatenate([j, i]), np.concatenate([a, a]), label=f"indep:{d}",
    )


def _group_closure(generators, cap):
    d = generators[0].shape[0]

    def key(U):
        return np.round(U, 8).tobytes()

    eye = np.eye(d, dtype=complex)
    elements = [eye]
    seen = {key(eye)}
    frontier = [eye]
    while frontier:
        nxt = []
        for U in frontier:
            for G in generators:
                V = G @ U
                kv = key(V + 0.0)
                if kv in seen:
                    continue
                seen.add(kv)
                elements.append(V)
                nxt.append(V)
                if len(elements) > cap:
                    raise ValidationError(f"group generated by the generators exceeds {cap} elements")
        frontier = nxt
    return elements


def _group_orbit(generators, seed_matrix, cap=10000):
    A = as_hermitian(np.asarray(seed_matrix, dtype=complex))
    gens = [check_unitary(np.asarray(G, dtype=complex)) for G in generators]
    if not gens:
        raise ValidationError("group_orbit needs at least one generator")
    if any(G.shape != A.shape for G in gens):
        raise ValidationError("generators and seed matrix must share one dimension")
    group = _group_closure(gens, cap)
    return GaussianSeries.from_matrices([U @ A @ U.conj().T for U in group],
                                        label=f"group_orbit |G|={len(group)}")


# ---------------------------------------------------------------------------
# specs


def _encode_matrix(M):
    M = np.asarray(M)
    if np.iscomplexobj(M) and np.any(M.imag != 0):
        return {"re": M.real.tolist(), "im": M.imag.tolist()}
    return np.real(M).tolist()


def _decode_matrix(obj):
    if isinstance(obj, np.ndarray):
        return obj
    if isinstance(obj, dict):
        return np.asarray(obj["re"], dtype=float) + 1j * np.asarray(obj["im"], dtype=float)
    return np.asarray(obj, dtype=float)


KINDS = ("diag", "goe", "spin", "indep", "group_orbit", "custom")


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Declarative description of an ensemble.

    ``params`` by kind: diag/goe ``{"d"}``, spin ``{"blocks"}``,
    indep ``{"A", "verbatim"}``, group_orbit ``{"generators", "seed_matrix", "cap"}``,
    custom ``{"path"}``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        k, p = self.kind, self.params
        if k not in KINDS:
            raise SpecParseError(f"unknown ensemble kind {k!r}")
        if k in ("diag", "goe"):
            if not isinstance(p.get("d"), int) or p["d"] < 1:
                raise SpecParseError(f"{k} needs a positive integer dimension d")
        elif k == "spin":
            if not isinstance(p.get("blocks"), int) or p["blocks"] < 1:
                raise SpecParseError("spin needs blocks >= 1")
        elif k == "indep":
            A = np.asarray(p.get("A"), dtype=float)
            if A.ndim != 2 or A.shape[0] != A.shape[1] or A.size == 0:
                raise SpecParseError("indep needs a square matrix A")
            if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
                raise SpecParseError("indep matrix A must be symmetric")
            if not np.any(A):
                raise SpecParseError("indep matrix A is zero")
            object.__setattr__(self, "params", {**p, "A": (0.5 * (A + A.T)).tolist(),
                                                "verbatim": bool(p.get("verbatim", False))})
        elif k == "group_orbit":
            if "generators" not in p or "seed_matrix" not in p:
                raise SpecParseError("group_orbit needs generators and seed_matrix")
        elif k == "custom":
            path = p.get("path")
            if not path or not Path(path).is_file():
                raise SpecParseError(f"custom ensemble file not readable: {path!r}")

    @property
    def dim(self):
        k, p = self.kind, self.params
        if k in ("diag", "goe"):
            return p["d"]
        if k == "spin":
            return 2 * p["blocks"]
        if k == "indep":
            return len(p["A"])
        if k == "group_orbit":
            return len(_decode_matrix(p["seed_matrix"]))
        return None

    @property
    def name(self):
        if self.label:
            return self.label
        k, p = self.kind, self.params
        if k in ("diag", "goe"):
            return f"{k}:{p['d']}"
        if k == "spin":
            return f"spin:{p['blocks']}"
        if k == "custom":
            return f"custom:{p['path']}"
        return f"{k}:{self.dim}"

    def to_dict(self):
        params = dict(self.params)
        if self.kind == "group_orbit":
            params["generators"] = [_encode_matrix(_decode_matrix(G)) for G in params["generators"]]
            params["seed_matrix"] = _encode_matrix(_decode_matrix(params["seed_matrix"]))
        return {"kind": self.kind, "params": params, "label": self.label}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(obj["kind"], dict(obj.get("params", {})), obj.get("label", ""))
        except (KeyError, TypeError) as exc:
            raise SpecParseError(f"malformed ensemble document: {exc}") from None

    @classmethod
    def from_json(cls, text):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(obj)

    @classmethod
    def from_inline(cls, text):
        """Parse ``kind:param[,param]``, e.g. ``goe:200``, ``spin:64``, ``custom:coeffs.txt``."""
        kind, sep, rest = text.partition(":")
        kind = kind.strip()
        if kind not in KINDS:
            raise SpecParseError(f"unknown ensemble kind {kind!r} (position 0)")
        if not sep or not rest.strip():
            raise SpecParseError(f"{kind} needs a parameter after ':' (position {len(kind)})")
        if kind == "custom":
            return cls("custom", {"path": rest})
        if kind in ("diag", "goe", "spin"):
            try:
                value = int(rest)
            except ValueError:
                raise SpecParseError(f"expected an integer at position {len(kind) + 1}, got {rest!r}") from None
            key = "blocks" if kind == "spin" else "d"
            return cls(kind, {key: value})
        if kind == "indep":
            # indep:ones,d  or  indep:bump,d  (a_11 = 2, others 1)
            parts = [s.strip() for s in rest.split(",")]
            if len(parts) != 2 or not parts[1].isdigit():
                raise SpecParseError("inline indep is 'indep:ones,d' or 'indep:bump,d'")
            d = int(parts[1])
            A = np.ones((d, d))
            if parts[0] == "bump":
                A[0, 0] = 2.0
            elif parts[0] != "ones":
                raise SpecParseError(f"unknown indep pattern {parts[0]!r}")
            return cls("indep", {"A": A.tolist()})
        raise SpecParseError(f"{kind} has no inline form; use a JSON file")


def build(spec):
    """Construct the Gaussian series described by ``spec``."""
    k, p = spec.kind, spec.params
    if k == "diag":
        series = _diag(p["d"])
    elif k == "goe":
        series = _goe(p["d"])
    elif k == "spin":
        series = _spin(p["blocks"])
    elif k == "indep":
        series = _indep(p["A"], p.get("verbatim", False))
    elif k == "group_orbit":
        gens = [_decode_matrix(G) for G in p["generators"]]
        series = _group_orbit(gens, _decode_matrix(p["seed_matrix"]), p.get("cap", 10000))
    else:
        series = read_custom(p["path"])
    label = spec.label or spec.name
    return GaussianSeries(series.dim, series.coeffs, label)


# ---------------------------------------------------------------------------
# custom coefficient files

def _parse_complex(token, where):
    t = token.strip()
    if t.endswith("i"):
        t = t[:-1] + "j"
    try:
        return complex(t)
    except ValueError:
        raise SpecParseError(f"{where}: cannot parse complex entry {token!r}") from None


def _format_complex(z):
    z = complex(z)
    im = z.imag
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"{z.real!r}{sign}{abs(im)!r}i"


def read_custom(path):
    """Read a coefficient file: header ``d n``, then n blocks of d rows of d entries ``re+imi``."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from None
    rows = [(no, ln.split()) for no, ln in enumerate(lines, start=1) if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise SpecParseError(f"{path}: empty file")
    no, head = rows[0]
    if len(head) != 2 or not all(h.isdigit() for h in head):
        raise SpecParseError(f"{path}:{no}: header must be 'd n'")
    d, n = int(head[0]), int(head[1])
    if d < 1 or n < 1:
        raise SpecParseError(f"{path}:{no}: d and n must be positive")
    body = rows[1:]
    if len(body) != n * d:
        raise SpecParseError(f"{path}: expected {n * d} matrix rows, found {len(body)}")
    mats = np.empty((n, d, d), dtype=complex)
    for r, (no, toks) in enumerate(body):
        k, i = divmod(r, d)
        if len(toks) != d:
            raise SpecParseError(f"{path}:{no}: coefficient {k} row {i} has {len(toks)} entries, expected {d}")
        for j, tok in enumerate(toks):
            mats[k, i, j] = _parse_complex(tok, f"{path}:{no} field {j + 1}")
    try:
        return GaussianSeries.from_matrices(list(mats), label=f"custom:{path.name}")
    except ValidationError as exc:
        raise SpecParseError(f"{path}: {exc}") from None


def write_custom(series, path):
    d = series.dim
    out = [f"{d} {series.n}"]
    for H in series.dense():
        for row in H:
            out.append(" ".join(_format_complex(z) for z in row))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
