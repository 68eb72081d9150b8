"""Randomized checks of auxiliary matrix and scalar inequalities.

* ``heinz_check``        tr[H A^q H A^{r-q}] <= tr[H |A|^s H |A|^{r-s}]
* ``lust_piquard_check`` ||sum_i A_i B A_i||_{rho/2} <= ||sum_i A_i^2||_rho ||B||_rho
* ``poly_root``          positive root of u^k - beta u^{k-2} - alpha is at most
                         alpha^{1/k} + beta^{1/2}
* ``symmetrization_check``  E||sum Y_i|| <= sqrt(2 pi) E||sum gamma_i Y_i||

The ``*_sweep`` functions run seeded randomized trials and return a
:class:`TrialReport`.  Trial ``t`` draws from its own substream, so reports
do not depend on the number of worker threads.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import bisect

from .errors import DomainError, ValidationError
from .matalg import as_hermitian, herm_apply, herm_eig, schatten_norm
from .rng import RngStream

__all__ = [
    "TrialReport",
    "heinz_check",
    "lust_piquard_check",
    "poly_root",
    "symmetrization_check",
    "rademacher_family",
    "heinz_sweep",
    "lust_piquard_sweep",
    "poly_sweep",
]

CSV_COLUMNS = ("name", "trials", "violations", "worst_slack", "seed")


def _tolerance(rhs):
    return 1e-8 * (1.0 + abs(rhs))


@dataclass(frozen=True)
class TrialReport:
    name: str
    trials: int
    violations: int
    worst_slack: float
    seed: int

    @property
    def passed(self):
        return self.violations == 0

    def to_dict(self):
        return asdict(self)

    def csv_row(self):
        return [self.name, self.trials, self.violations, repr(self.worst_slack), self.seed]


# ---------------------------------------------------------------------------
# single checks


def _power(H, t):
    """H^t for Hermitian H and a nonnegative integer t (sign preserved)."""
    return herm_apply(H, lambda lam: lam ** t)


def _abs_power(H, t):
    return herm_apply(H, lambda lam: np.abs(lam) ** t)


def heinz_check(H, A, q, r, s):
    """Compare tr[H A^q H A^{r-q}] with tr[H |A|^s H |A|^{r-s}]."""
    if int(q) != q or int(r) != r or not 0 <= q <= r:
        raise DomainError(f"need integers 0 <= q <= r, got q={q}, r={r}")
    if not 0 <= s <= min(q, r - q):
        raise DomainError(f"need 0 <= s <= min(q, r - q) = {min(q, r - q)}, got s={s}")
    H = as_hermitian(H)
    A = as_hermitian(A)
    if H.shape != A.shape:
        raise ValidationError("H and A must have the same shape")
    lhs = float(np.trace(H @ _power(A, int(q)) @ H @ _power(A, int(r - q))).real)
    rhs = float(np.trace(H @ _abs_power(A, s) @ H @ _abs_power(A, r - s)).real)
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + _tolerance(rhs)}


def lust_piquard_check(A_list, B, rho):
    """Compare (tr (sum A_i B A_i)^{rho/2})^{2/rho} with ||sum A_i^2||_rho ||B||_rho."""
    if rho < 2:
        raise DomainError(f"rho must be >= 2, got {rho}")
    B = as_hermitian(B)
    lam = herm_eig(B).eigenvalues
    if lam[0] < -1e-10 * max(1.0, abs(lam[-1])):
        raise DomainError(f"B is not positive semidefinite (min eigenvalue {lam[0]:.3g})")
    A_list = [as_hermitian(A) for A in A_list]
    if not A_list:
        raise ValidationError("need at least one A_i")
    M = sum(A @ B @ A for A in A_list)
    S = sum(A @ A for A in A_list)
    lhs = schatten_norm(as_hermitian(M, rtol=1e-9), rho / 2.0)
    rhs = schatten_norm(as_hermitian(S, rtol=1e-9), rho) * schatten_norm(B, rho)
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + _tolerance(rhs)}


def poly_root(k, alpha, beta):
    """Positive root of u^k - beta u^{k-2} - alpha and the bound alpha^{1/k} + beta^{1/2}.

    By Descartes' rule of signs the root is unique; it is found by bisection.
    """
    if int(k) != k or k < 3:
        raise DomainError(f"k must be an integer >= 3, got {k}")
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    k = int(k)
    f = lambda u: u ** k - beta * u ** (k - 2) - alpha
    hi = max(1.0, (alpha + beta) ** (1.0 / (k - 2))) + math.sqrt(beta) + alpha ** (1.0 / k)
    root = bisect(f, 0.0, hi, xtol=1e-300, rtol=1e-12, maxiter=2000)
    bound = alpha ** (1.0 / k) + math.sqrt(beta)
    return {"root": root, "bound": bound, "holds": root <= bound * (1.0 + 1e-12)}


def rademacher_family(H_list):
    """Sampler of Y_i = eps_i H_i with independent random signs."""
    H = np.stack([as_hermitian(A) for A in H_list])

    def draw(stream):
        return stream.rademacher(len(H))[:, None, None] * H

    return draw


def _norm_fn(norm):
    if norm == "spectral":
        return lambda M: schatten_norm(M, np.inf)
    if isinstance(norm, tuple) and norm[0] == "schatten":
        return lambda M: schatten_norm(M, norm[1])
    raise ValidationError(f"norm must be 'spectral' or ('schatten', q), got {norm!r}")


def symmetrization_check(family, norm="spectral", samples=200, seed=0, inner=200):
    """Nested Monte Carlo check of E||sum Y_i|| <= sqrt(2 pi) E E[||sum gamma_i Y_i|| | Y].

    ``family(stream)`` returns an ``(n, d, d)`` array of independent
    zero-mean summands.  Each outer draw of Y feeds ``inner`` Gaussian draws.
    """
    if samples < 2 or inner < 1:
        raise ValidationError("need samples >= 2 and inner >= 1")
    nrm = _norm_fn(norm)
    lhs = np.empty(samples)
    rhs = np.empty(samples)
    for t in range(samples):
        Y = np.asarray(family(RngStream(seed, t, "symm-outer")))
        lhs[t] = nrm(Y.sum(axis=0))
        G = RngStream(seed, t, "symm-inner").normal((inner, len(Y)))
        rhs[t] = np.mean([nrm(np.tensordot(g, Y, axes=1)) for g in G])
    c = math.sqrt(2.0 * math.pi)
    l_mean, r_mean = lhs.mean(), c * rhs.mean()
    l_se = lhs.std(ddof=1) / math.sqrt(samples)
    r_se = c * rhs.std(ddof=1) / math.sqrt(samples)
    pooled = math.hypot(l_se, r_se)
    return {
        "lhs": float(l_mean), "lhs_stderr": float(l_se),
        "rhs": float(r_mean), "rhs_stderr": float(r_se),
        "holds_within_stat": bool(l_mean <= r_mean + 4.0 * pooled),
    }


# ---------------------------------------------------------------------------
# randomized sweeps


def _random_herm(stream, d):
    G = stream.complex_normal((d, d))
    return (G + G.conj().T) / 2.0


def _heinz_trial(seed, t):
    st = RngStream(seed, t, "heinz")
    d = int(st.integers(1, 6))
    r = int(st.integers(0, 7))
    q = int(st.integers(0, r + 1))
    top = min(q, r - q)
    pick = int(st.integers(0, 3))
    s = [0.0, float(top), float(st.uniform()) * top][pick]
    res = heinz_check(_random_herm(st, d), _random_herm(st, d), q, r, s)
    return res["rhs"] - res["lhs"], res


def _lp_trial(seed, t):
    st = RngStream(seed, t, "lust-piquard")
    d = int(st.integers(1, 6))
    n = int(st.integers(1, 5))
    rho = (2.0, 3.0, 4.5)[int(st.integers(0, 3))]
    G = st.complex_normal((d, d))
    B = G @ G.conj().T
    res = lust_piquard_check([_random_herm(st, d) for _ in range(n)], B, rho)
    return res["rhs"] - res["lhs"], res


def _poly_trial(seed, t):
    st = RngStream(seed, t, "poly")
    k = int(st.integers(3, 11))
    alpha, beta = 10.0 ** (6.0 * st.uniform(2) - 3.0)
    res = poly_root(k, alpha, beta)
    u = res["root"]
    residual = abs(u ** k - beta * u ** (k - 2) - alpha)
    if residual > 1e-9 * (alpha + beta * u ** (k - 2)):
        raise ArithmeticError(f"poly_root residual {residual:.3g} too large (k={k})")
    res = dict(res, lhs=u, rhs=res["bound"])
    return res["bound"] - u, res


def _sweep(name, trial, trials, seed, threads):
    if trials < 1:
        raise ValidationError("trials must be positive")
    run = lambda t: trial(seed, t)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(t) for t in range(trials)]
    violations = 0
    worst = math.inf
    for slack, res in results:
        rel = slack / (1.0 + abs(res["rhs"]))
        worst = min(worst, rel)
        if res["lhs"] > res["rhs"] + _tolerance(res["rhs"]):
            violations += 1
    return TrialReport(name, trials, violations, float(worst), int(seed))


def heinz_sweep(trials=1000, seed=0, threads=1):
    return _sweep("heinz", _heinz_trial, trials, seed, threads)


def lust_piquard_sweep(trials=1000, seed=0, threads=1):
    return _sweep("lust-piquard", _lp_trial, trials, seed, threads)


def poly_sweep(trials=1000, seed=0, threads=1):
    return _sweep("poly", _poly_trial, trials, seed, threads)
