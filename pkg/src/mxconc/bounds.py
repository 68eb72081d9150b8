"""Khintchine-type bounds and their Monte Carlo verdicts.

Each evaluator turns computed parameters into a numeric bound on one of
three scales:

* ``schatten(p)``          (E ||X||_{2p}^{2p})^{1/(2p)}
* ``normalized_trace(p)``  (E tr X^{2p} / d)^{1/(2p)}
* ``spectral``             E ||X||

:func:`verify` draws the Monte Carlo sample once, evaluates every requested
bound against it and returns one :class:`BoundCheck` per bound.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .ensembles import EnsembleSpec, build
from .errors import DomainError, ValidationError
from .moments import Statistic, draw_spectra, evaluate_statistic, recursion_bounds
from .parameters import alignment_upper, closed_form_alignment, sigma

__all__ = [
    "BOUND_NAMES",
    "BoundCheck",
    "khintchine_schatten",
    "khintchine_spectral",
    "k2_schatten",
    "k2_spectral",
    "strong_iso_bounds",
    "bvh_spectral",
    "judge",
    "verify",
]

BVH_DEFAULT_CONSTANT = 10.0

CSV_COLUMNS = ("name", "scale", "lower", "upper", "mean", "stderr", "slack_sigmas", "verdict")

BOUND_NAMES = (
    "khintchine-schatten",
    "khintchine-spectral",
    "k2-schatten",
    "k2-spectral",
    "strong-iso",
    "bvh",
    "fixed",
)


def _check_p(p, least=1):
    if int(p) != p or p < least:
        raise DomainError(f"p must be an integer >= {least}, got {p}")
    return int(p)


# ---------------------------------------------------------------------------
# evaluators


def khintchine_schatten(series, p):
    """sigma_{2p} <= (E ||X||_{2p}^{2p})^{1/(2p)} <= sqrt(2p - 1) sigma_{2p}."""
    p = _check_p(p)
    s = sigma(series, 2 * p)
    return {"lower": s, "upper": math.sqrt(2 * p - 1) * s}


def khintchine_spectral(series):
    """sigma / sqrt(2) <= E ||X|| <= sqrt(e (1 + 2 ln d)) sigma."""
    s = sigma(series, np.inf)
    d = series.dim
    return {"lower": s / math.sqrt(2.0), "upper": math.sqrt(math.e * (1.0 + 2.0 * math.log(d))) * s}


def k2_schatten(series, p, w_value):
    """Second-order Schatten bound 3 (2p-5)^{1/4} sigma_{2p} + sqrt(2p-4) w, for p >= 3."""
    p = _check_p(p, least=3)
    s = sigma(series, 2 * p)
    return 3.0 * (2 * p - 5) ** 0.25 * s + math.sqrt(2 * p - 4) * w_value


def k2_spectral(series, w_value):
    """Second-order spectral bound 3 sigma (2e ln d)^{1/4} + w (2e ln d)^{1/2}, for d >= 8."""
    d = series.dim
    if d < 8:
        raise DomainError(f"the spectral second-order bound needs d >= 8, got {d}")
    L = 2.0 * math.e * math.log(d)
    return 3.0 * sigma(series, np.inf) * L ** 0.25 + w_value * math.sqrt(L)


def strong_iso_bounds(series, p, w_value, scale="normalized_trace"):
    """Recursion bounds with sigma = sigma_inf, for strongly isotropic series."""
    rb = recursion_bounds(sigma(series, np.inf), w_value, _check_p(p), series.dim, scale)
    return {"lower": rb.lower, "upper": rb.upper, "lower_valid": rb.lower_valid}


def bvh_spectral(spec, constant=BVH_DEFAULT_CONSTANT):
    """2 sigma + constant * max|a_ij| * sqrt(ln d) for an independent-entry ensemble.

    The constant is a convention (the sharp value is not known); the default
    of 10 is deliberately generous.
    """
    if not isinstance(spec, EnsembleSpec) or spec.kind != "indep":
        raise DomainError("the independent-entry bound needs an indep ensemble spec")
    if constant < 0:
        raise DomainError("constant must be nonnegative")
    A = np.asarray(spec.params["A"], dtype=float)
    s = sigma(build(spec), np.inf)
    return 2.0 * s + constant * float(np.max(np.abs(A))) * math.sqrt(math.log(A.shape[0]))


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class BoundCheck:
    name: str
    scale: str
    lower: float = None
    upper: float = None
    estimate: object = None
    slack_sigmas: float = None
    verdict: str = "error"
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "name": self.name,
            "scale": self.scale,
            "lower": self.lower,
            "upper": self.upper,
            "estimate": None if self.estimate is None else self.estimate.to_dict(),
            "slack_sigmas": self.slack_sigmas,
            "verdict": self.verdict,
            "notes": self.notes,
        }

    def csv_row(self):
        est = self.estimate
        cell = lambda v: "" if v is None else repr(float(v))
        return [self.name, self.scale, cell(self.lower), cell(self.upper),
                cell(est.mean if est else None), cell(est.stderr if est else None),
                cell(self.slack_sigmas), self.verdict]


def judge(name, scale, lower, upper, estimate, notes=None):
    """Statistical verdict for ``lower <= E[stat] <= upper``.

    The estimate fails when it sits outside the bounds by more than
    ``4 * stderr + 1e-9 * |upper|``; it is inconclusive when the standard
    error exceeds 10% of the gap between the bounds.
    """
    m, se = estimate.mean, estimate.stderr
    ref = upper if upper is not None else (lower if lower is not None else 0.0)
    tol = 4.0 * se + 1e-9 * abs(ref)
    distances = []
    if lower is not None:
        distances.append(m - lower)
    if upper is not None:
        distances.append(upper - m)
    slack = min(distances) if distances else None
    slack_sigmas = None if slack is None or se == 0 else slack / se
    if (lower is not None and m < lower - tol) or (upper is not None and m > upper + tol):
        verdict = "fail"
    elif lower is not None and upper is not None and se > 0.1 * (upper - lower):
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return BoundCheck(name, scale, lower, upper, estimate, slack_sigmas, verdict, dict(notes or {}))


# ---------------------------------------------------------------------------
# verify


def _w_default(series, spec, q):
    """Closed-form w_q for named ensembles when it is a proven upper bound, else sigma_q."""
    if spec is not None:
        cf = closed_form_alignment(spec, q)
        if cf is not None and cf.tag in ("exact", "upper"):
            return cf.value, f"closed_form:{cf.tag}"
    return alignment_upper(series, q), "sigma_upper"


def _plan(series, spec, check, bvh_constant):
    """Return (scale, statistic, lower, upper, notes) for one named check."""
    name = check["name"]
    p = check.get("p")
    notes = {}
    if name == "khintchine-schatten":
        b = khintchine_schatten(series, p)
        return f"schatten({int(p)})", Statistic("schatten_root", p), b["lower"], b["upper"], notes
    if name == "khintchine-spectral":
        b = khintchine_spectral(series)
        return "spectral", Statistic("spectral_norm"), b["lower"], b["upper"], notes
    if name == "k2-schatten":
        p = _check_p(p, least=3)
        w = check.get("w")
        if w is None:
            w, notes["w_source"] = _w_default(series, spec, 2 * p)
        notes["w"] = w
        return f"schatten({p})", Statistic("schatten_root", p), None, k2_schatten(series, p, w), notes
    if name == "k2-spectral":
        w = check.get("w")
        if w is None:
            w, notes["w_source"] = _w_default(series, spec, np.inf)
        notes["w"] = w
        return "spectral", Statistic("spectral_norm"), None, k2_spectral(series, w), notes
    if name == "strong-iso":
        p = _check_p(p)
        scale = check.get("scale", "normalized_trace")
        w = check.get("w")
        if w is None:
            w, notes["w_source"] = _w_default(series, spec, np.inf)
        notes["w"] = w
        b = strong_iso_bounds(series, p, w, scale)
        notes["lower_valid"] = b["lower_valid"]
        lower = b["lower"] if b["lower_valid"] else None
        stat = "normalized_trace_root" if scale == "normalized_trace" else "schatten_root"
        return f"{scale}({p})", Statistic(stat, p), lower, b["upper"], notes
    if name == "bvh":
        c = check.get("constant", bvh_constant)
        notes["constant"] = c
        return "spectral", Statistic("spectral_norm"), None, bvh_spectral(spec, c), notes
    if name == "fixed":
        stat = Statistic(check.get("stat", "spectral_norm"), p)
        scale = "spectral" if stat.name == "spectral_norm" else f"{stat.name}({stat.p})"
        return scale, stat, check.get("lower"), check.get("upper"), notes
    raise ValidationError(f"unknown bound {name!r}; expected one of {BOUND_NAMES}")


def _normalize(check):
    if isinstance(check, str):
        return {"name": check}
    if "name" not in check:
        raise ValidationError(f"bound entry without a name: {check!r}")
    return dict(check)


def verify(series, checks, samples=1000, seed=0, spec=None, threads=1,
           bvh_constant=BVH_DEFAULT_CONSTANT):
    """Evaluate every check against one shared Monte Carlo sample.

    ``checks`` holds bound names or dicts ``{"name": ..., "p": ..., "w": ...}``.
    A check that does not apply to the series (e.g. ``k2-schatten`` with
    ``p < 3``) yields an entry with verdict ``"error"`` instead of raising.
    """
    plans = []
    for check in map(_normalize, checks):
        try:
            plans.append((check, _plan(series, spec, check, bvh_constant)))
        except (DomainError, ValidationError) as exc:
            plans.append((check, exc))
    spectra = None
    out = []
    for check, plan in plans:
        if isinstance(plan, Exception):
            out.append(BoundCheck(check["name"], "", notes={"error": str(plan)}))
            continue
        if spectra is None:
            spectra = draw_spectra(series, samples, seed, threads)
        scale, stat, lower, upper, notes = plan
        est = evaluate_statistic(spectra, stat, seed)
        out.append(judge(check["name"], scale, lower, upper, est, notes))
    return out
