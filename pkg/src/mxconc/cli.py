"""Command-line front end.

    mxconc params    --ensemble goe:50 --q 4,inf --seed 1
    mxconc estimate  --ensemble diag:1000 --stat spectral --samples 300 --seed 42
    mxconc verify    --ensemble goe:200 --bound khintchine-spectral --samples 300 --seed 42
    mxconc check     heinz --samples 1000 --seed 0
    mxconc isotropy  --ensemble goe:8 --p 4 --samples 20000 --seed 0
    mxconc reproduce --preset spin-counterexample --seed 7

Exit status: 0 when every bound or property holds, 1 when any fails,
2 on usage or configuration errors.  Reports are JSON (sorted keys, one
``generated_at`` timestamp) or CSV with a fixed column order.
"""

import argparse
import csv
import datetime
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds, inequalities, isotropy, moments, parameters
from ._config import reload as reload_tolerances
from .ensembles import EnsembleSpec, build
from .errors import DomainError, NumericalError, SpecParseError, ValidationError

__all__ = ["main", "run", "parse_spec", "PRESETS"]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CHECK_KINDS = ("heinz", "lust-piquard", "poly", "ibp", "symmetrization")
PRESETS = ("intro-examples", "goe-semicircle", "spin-counterexample", "indep-comparison")

PARAMS_COLUMNS = ("label", "q", "sigma", "w_lower", "w_upper", "w_closed_form", "delta",
                  "weak_variance_lower")
ISOTROPY_COLUMNS = ("label", "p", "deviation", "verdict", "exact_signed_perm")
IBP_COLUMNS = ("p", "lhs_mean", "lhs_stderr", "rhs_mean", "rhs_stderr", "zscore", "verdict")
SYMM_COLUMNS = ("lhs", "lhs_stderr", "rhs", "rhs_stderr", "verdict")
PRESET_COLUMNS = ("preset", "item", "value", "target", "verdict")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def parse_spec(text):
    """Inline ``kind:param[,param]`` or the path of a JSON spec document."""
    if text is None:
        raise UsageError("--ensemble is required")
    path = Path(text)
    if text.endswith(".json") or (path.is_file() and ":" not in text):
        try:
            content = path.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read ensemble file {text!r}: {exc.strerror}") from None
        return EnsembleSpec.from_json(content)
    return EnsembleSpec.from_inline(text)


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _q_list(text):
    try:
        return [parameters.parse_q(t) for t in text.split(",") if t.strip()]
    except (ValueError, DomainError):
        raise argparse.ArgumentTypeError(f"expected comma-separated exponents, got {text!r}")


def _parse_bound(text):
    """``name`` or ``name:key=value,key=value``."""
    name, _, rest = text.partition(":")
    entry = {"name": name.strip()}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"bad bound option {item!r} in {text!r}; expected key=value")
        key = key.strip()
        try:
            entry[key] = value.strip() if key in ("scale", "stat") else float(value)
        except ValueError:
            raise UsageError(f"bad value for {key!r} in {text!r}") from None
    if "p" in entry:
        entry["p"] = int(entry["p"])
    if entry["name"] not in bounds.BOUND_NAMES:
        raise UsageError(f"unknown bound {entry['name']!r}; choose from {', '.join(bounds.BOUND_NAMES)}")
    return entry


def build_parser():
    parser = argparse.ArgumentParser(prog="mxconc", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stochastic=True, ensemble=True):
        if ensemble:
            p.add_argument("--ensemble", help="inline spec (e.g. goe:200) or JSON file")
        if stochastic:
            p.add_argument("--seed", type=int, help="random seed (required)")
            p.add_argument("--samples", type=int, default=1000)
            p.add_argument("--threads", type=int, default=1,
                           help="worker threads; results do not depend on it")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("params", help="sigma, alignment, delta and weak variance")
    common(p, stochastic=False)
    p.add_argument("--seed", type=int, default=0, help="seed for optimizer restarts")
    p.add_argument("--q", type=_q_list, default=[2.0, 4.0, 8.0, math.inf])
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--restricted-triples", action="store_true",
                   help="optimize over commuting triples with one identity slot")

    p = sub.add_parser("estimate", help="Monte Carlo moment or norm estimate")
    common(p)
    p.add_argument("--stat", default="spectral",
                   help="spectral | trace_moment | normalized_trace_moment | schatten_root | "
                        "normalized_trace_root")
    p.add_argument("--p", type=int, help="half-order p for trace statistics (E tr X^{2p})")

    p = sub.add_parser("verify", help="check named bounds against a Monte Carlo estimate")
    common(p)
    p.add_argument("--bound", action="append", default=[],
                   help="bound name, optionally with options: k2-schatten:p=3,w=0.2")
    p.add_argument("--p", type=int, help="default p for bounds that need one")
    p.add_argument("--bvh-const", type=float, default=bounds.BVH_DEFAULT_CONSTANT)

    p = sub.add_parser("check", help="randomized property sweeps and identity checks")
    p.add_argument("kind", choices=CHECK_KINDS)
    common(p)
    p.add_argument("--p", type=_int_list, default=[2], help="orders for the ibp check")
    p.add_argument("--trials", type=int, help="sweep trials (defaults to --samples)")

    p = sub.add_parser("isotropy", help="exact and Monte Carlo strong-isotropy checks")
    common(p)
    p.add_argument("--p", type=int, default=4, help="largest power checked")

    p = sub.add_parser("reproduce", help="run a reproduction preset")
    common(p, ensemble=False)
    p.set_defaults(samples=None)
    p.add_argument("--preset", required=True, choices=PRESETS)
    return parser


# ---------------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return None if math.isnan(v) else v
    return obj


def render_json(report):
    doc = dict(report)
    doc["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


def render_csv(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(args, report, columns, rows):
    text = render_json(report) if args.format == "json" else render_csv(columns, rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ---------------------------------------------------------------------------
# commands


def _require_seed(args):
    if args.seed is None:
        raise UsageError("--seed is required for stochastic commands")
    if args.samples is not None and args.samples < 2:
        raise UsageError("--samples must be >= 2")


def _provenance(args, spec=None, **extra):
    out = {"command": args.command, "seed": args.seed}
    if getattr(args, "samples", None) is not None:
        out["samples"] = args.samples
    if spec is not None:
        out["ensemble"] = spec.to_dict()
    out.update(extra)
    return out


def cmd_params(args):
    spec = parse_spec(args.ensemble)
    series = build(spec)
    rep = parameters.compute_params(series, spec, tuple(args.q), args.restarts, args.iters,
                                    args.seed, args.restricted_triples)
    rows = []
    for q in args.q:
        a = rep.alignment.get(q)
        cf = a.closed_form.value if a is not None and a.closed_form is not None else None
        rows.append([rep.label, parameters.qkey(q), rep.sigma[q], a and a.lower, a and a.upper,
                     cf, rep.delta, rep.weak_variance_lower])
    report = {"provenance": _provenance(args, spec, restarts=args.restarts, iters=args.iters,
                                        restricted_triples=args.restricted_triples),
              "params": rep}
    _emit(args, report, PARAMS_COLUMNS, [[_fmt(v) for v in r] for r in rows])
    return EXIT_OK


def cmd_estimate(args):
    _require_seed(args)
    spec = parse_spec(args.ensemble)
    stat = moments.parse_statistic(args.stat, args.p)
    est = moments.mc_estimate(build(spec), stat, args.samples, args.seed, threads=args.threads)
    report = {"provenance": _provenance(args, spec), "estimate": est}
    _emit(args, report, moments.CSV_COLUMNS, [[_fmt(v) for v in est.csv_row()]])
    return EXIT_OK


def _bound_entries(args):
    if not args.bound:
        raise UsageError("at least one --bound is required")
    entries = []
    for text in args.bound:
        entry = _parse_bound(text)
        if "p" not in entry and args.p is not None:
            entry["p"] = args.p
        entries.append(entry)
    return entries


def _verdict_code(verdicts):
    if "fail" in verdicts:
        return EXIT_FAIL
    if "error" in verdicts:
        return EXIT_USAGE
    return EXIT_OK


def cmd_verify(args):
    _require_seed(args)
    spec = parse_spec(args.ensemble)
    entries = _bound_entries(args)
    checks = bounds.verify(build(spec), entries, args.samples, args.seed, spec, args.threads,
                           args.bvh_const)
    report = {"provenance": _provenance(args, spec, bounds=entries, bvh_constant=args.bvh_const),
              "checks": checks}
    _emit(args, report, bounds.CSV_COLUMNS, [c.csv_row() for c in checks])
    return _verdict_code([c.verdict for c in checks])


def cmd_check(args):
    _require_seed(args)
    kind = args.kind
    if kind in ("heinz", "lust-piquard", "poly"):
        trials = args.trials or args.samples
        sweep = {"heinz": inequalities.heinz_sweep, "lust-piquard": inequalities.lust_piquard_sweep,
                 "poly": inequalities.poly_sweep}[kind]
        rep = sweep(trials, args.seed, args.threads)
        _emit(args, {"provenance": _provenance(args, trials=trials), "report": rep},
              inequalities.CSV_COLUMNS, [rep.csv_row()])
        return EXIT_OK if rep.passed else EXIT_FAIL
    spec = parse_spec(args.ensemble)
    series = build(spec)
    if kind == "ibp":
        results, rows, ok = [], [], True
        for p in args.p:
            r = moments.ibp_residual(series, p, args.samples, args.seed, args.threads)
            passed = abs(r["zscore"]) <= 4.0
            ok &= passed
            results.append(dict(r, p=p, verdict="pass" if passed else "fail"))
            rows.append([_fmt(v) for v in (p, r["lhs"].mean, r["lhs"].stderr, r["rhs"].mean,
                                           r["rhs"].stderr, r["zscore"], results[-1]["verdict"])])
        _emit(args, {"provenance": _provenance(args, spec), "ibp": results}, IBP_COLUMNS, rows)
        return EXIT_OK if ok else EXIT_FAIL
    # symmetrization: random-sign summands built from the series coefficients
    family = inequalities.rademacher_family(list(series.dense()))
    inner = max(2, int(round(math.sqrt(args.samples))))
    r = inequalities.symmetrization_check(family, "spectral", args.samples, args.seed, inner)
    verdict = "pass" if r["holds_within_stat"] else "fail"
    row = [_fmt(v) for v in (r["lhs"], r["lhs_stderr"], r["rhs"], r["rhs_stderr"], verdict)]
    _emit(args, {"provenance": _provenance(args, spec, inner_samples=inner),
                 "symmetrization": dict(r, verdict=verdict)}, SYMM_COLUMNS, [row])
    return EXIT_OK if r["holds_within_stat"] else EXIT_FAIL


def cmd_isotropy(args):
    _require_seed(args)
    spec = parse_spec(args.ensemble)
    rep = isotropy.isotropy_report(build(spec), args.p, args.samples, args.seed)
    rows = [[rep.label, p, _fmt(dev), "pass" if rep.verdicts[p] else "fail", rep.exact_signed_perm]
            for p, dev in rep.mc_deviations.items()]
    _emit(args, {"provenance": _provenance(args, spec), "isotropy": rep}, ISOTROPY_COLUMNS, rows)
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# presets


def _item(name, value, target=None, verdict="info"):
    return {"item": name, "value": value, "target": target, "verdict": verdict}


def _inside(est, lo, hi):
    return "pass" if lo <= est <= hi else "fail"


def preset_intro_examples(seed, samples, threads):
    samples = samples or 300
    items = []
    for text, approx in (("diag:1000", math.sqrt(2 * math.log(1000))), ("goe:200", 2.0)):
        spec = EnsembleSpec.from_inline(text)
        series = build(spec)
        (check,) = bounds.verify(series, ["khintchine-spectral"], samples, seed, spec, threads)
        est = check.estimate
        items.append(_item(f"{text} E||X||", est.mean, approx,
                           _inside(est.mean, 0.95 * approx, 1.05 * approx)
                           if text.startswith("diag") else _inside(est.mean, 1.85, 2.05)))
        items.append(_item(f"{text} khintchine-spectral", est.mean,
                           [check.lower, check.upper], check.verdict))
    return items


def preset_goe_semicircle(seed, samples, threads):
    samples = samples or 200
    res = isotropy.semicircle_check(build(EnsembleSpec.from_inline("goe:400")), 4, samples, seed,
                                    threads)
    return [_item(f"goe:400 ratio p={p}", r["ratio"], 1.0, _inside(r["ratio"], 0.93, 1.07))
            for p, r in res.items()]


def preset_spin_counterexample(seed, samples, threads):
    samples = samples or 500
    items = []
    for blocks in (1, 4, 16, 64):
        series = build(EnsembleSpec.from_inline(f"spin:{blocks}"))
        delta = parameters.delta_param(series)
        sig = parameters.sigma(series, math.inf)
        est = moments.mc_estimate(series, "spectral", samples, seed, threads=threads)
        items.append(_item(f"spin:{blocks} delta", delta, 0.0,
                           "pass" if abs(delta) <= 1e-10 else "fail"))
        items.append(_item(f"spin:{blocks} sigma", sig, 12 ** 0.25,
                           "pass" if abs(sig - 12 ** 0.25) <= 1e-10 else "fail"))
        verdict = ("pass" if est.mean > 2.5 else "fail") if blocks == 64 else "info"
        items.append(_item(f"spin:{blocks} E||X||", est.mean, 2.5 if blocks == 64 else None, verdict))
    return items


def preset_indep_comparison(seed, samples, threads, bvh_constant=bounds.BVH_DEFAULT_CONSTANT):
    samples = samples or 300
    items = []
    for text in ("indep:ones,64", "indep:bump,64"):
        spec = EnsembleSpec.from_inline(text)
        series = build(spec)
        w_est = parameters.closed_form_alignment(spec, math.inf).value
        items.append(_item(f"{text} sigma", parameters.sigma(series, math.inf)))
        items.append(_item(f"{text} weak variance (lower)", parameters.weak_variance_lower(series, seed=seed)))
        items.append(_item(f"{text} w estimate", w_est))
        checks = bounds.verify(series, ["khintchine-spectral", {"name": "k2-spectral", "w": w_est},
                                        {"name": "bvh", "constant": bvh_constant}],
                               samples, seed, spec, threads)
        for c in checks:
            items.append(_item(f"{text} {c.name}", c.estimate.mean, [c.lower, c.upper], c.verdict))
    return items


def cmd_reproduce(args):
    if args.seed is None:
        raise UsageError("--seed is required for reproduce")
    if args.samples is not None and args.samples < 2:
        raise UsageError("--samples must be >= 2")
    run_preset = {
        "intro-examples": preset_intro_examples,
        "goe-semicircle": preset_goe_semicircle,
        "spin-counterexample": preset_spin_counterexample,
        "indep-comparison": preset_indep_comparison,
    }[args.preset]
    items = run_preset(args.seed, args.samples, args.threads)
    rows = [[args.preset, it["item"], _fmt(it["value"]),
             _fmt(it["target"]) if not isinstance(it["target"], list)
             else "[" + ";".join(_fmt(t) for t in it["target"]) + "]", it["verdict"]]
            for it in items]
    _emit(args, {"provenance": _provenance(args, preset=args.preset), "items": items},
          PRESET_COLUMNS, rows)
    return EXIT_FAIL if any(it["verdict"] == "fail" for it in items) else EXIT_OK


COMMANDS = {
    "params": cmd_params,
    "estimate": cmd_estimate,
    "verify": cmd_verify,
    "check": cmd_check,
    "isotropy": cmd_isotropy,
    "reproduce": cmd_reproduce,
}


def run(argv=None):
    """Run the CLI and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        reload_tolerances()
        if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        return COMMANDS[args.command](args)
    except (UsageError, SpecParseError, ValidationError, DomainError, NumericalError) as exc:
        print(f"mxconc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"mxconc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None):
    sys.exit(run(argv))
