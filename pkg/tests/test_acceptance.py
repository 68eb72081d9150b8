"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python3 tests/test_acceptance.py`` for just the summary lines.
"""

import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import conftest
from mxconc import bounds, cli, inequalities, isotropy, moments, parameters
from mxconc.ensembles import EnsembleSpec, build, random_series
from mxconc.rng import RngStream

SEED = 42


def named(text):
    return build(EnsembleSpec.from_inline(text))


def report(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return ok


def _random_small(k, stream_domain):
    st = RngStream(SEED, k, stream_domain)
    d = int(st.integers(1, 5))
    n = int(st.integers(1, 5))
    return random_series(d, n, st)


def check(number, ok, detail):
    report(number, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------------------


def test_criterion_01_goe_norm():
    t = time.perf_counter()
    est = moments.mc_estimate(named("goe:200"), "spectral", 300, SEED)
    dt = time.perf_counter() - t
    ok = 1.85 <= est.mean <= 2.05 and dt < 60
    check(1, ok, f"goe:200 E||X|| = {est.mean:.4f} +- {est.stderr:.4f} (target [1.85, 2.05]), {dt:.1f}s")


def test_criterion_02_diag_norm():
    t = time.perf_counter()
    est = moments.mc_estimate(named("diag:1000"), "spectral", 300, SEED)
    dt = time.perf_counter() - t
    target = math.sqrt(2 * math.log(1000))
    rel = est.mean / target - 1
    ok = abs(rel) <= 0.05 and dt < 60
    check(2, ok, f"diag:1000 E||X|| = {est.mean:.4f} vs sqrt(2 ln d) = {target:.4f} "
                 f"(rel. diff {rel:+.2%}, allowed 5%), {dt:.1f}s")


def test_criterion_03_khintchine_sandwich():
    details, ok = [], True
    for text in ("goe:200", "diag:1000"):
        spec = EnsembleSpec.from_inline(text)
        (c,) = bounds.verify(build(spec), ["khintchine-spectral"], 300, SEED, spec)
        m, se = c.estimate.mean, c.estimate.stderr
        inside = c.lower - 4 * se <= m <= c.upper + 4 * se
        ok &= inside and c.verdict == "pass"
        details.append(f"{text}: {c.lower:.3f} <= {m:.3f} <= {c.upper:.3f} [{c.verdict}]")
    check(3, ok, "; ".join(details))


def test_criterion_04_second_moment_identity():
    cases = [(t, named(t)) for t in ("diag:16", "goe:16", "spin:8")]
    cases += [(f"random#{k}", _random_small(k, "acceptance-4")) for k in range(20)]
    worst, ok = 0.0, True
    for k, (name, s) in enumerate(cases):
        exact = moments.exact_moment(s, 2)
        est = moments.mc_estimate(s, "trace_moment", 2000, SEED + k, p=2)
        z = abs(est.mean - exact) / est.stderr
        worst = max(worst, z)
        ok &= z <= 4
    ok &= moments.exact_moment(named("diag:16"), 2) == pytest.approx(48.0)
    check(4, ok, f"{len(cases)} series, worst |MC - exact| = {worst:.2f} stderr (allowed 4); "
                 f"diag:16 exact = {moments.exact_moment(named('diag:16'), 2):.6g} (3d = 48)")


def test_criterion_05_trace_moment_identity():
    t = time.perf_counter()
    worst, ok, count = 0.0, True, 0
    for k in range(50):
        s = _random_small(k, "acceptance-5")
        for p in (2, 3):
            z = moments.ibp_residual(s, p, 2000, SEED + k)["zscore"]
            worst = max(worst, abs(z))
            ok &= abs(z) <= 4
            count += 1
    dt = time.perf_counter() - t
    ok &= dt < 180
    check(5, ok, f"{count} paired z-scores, worst |z| = {worst:.2f} (allowed 4), {dt:.1f}s")


def test_criterion_06_alignment_closed_forms():
    diag, _ = parameters.alignment_lower(named("diag:6"), np.inf, restarts=20, seed=SEED)
    goe, _ = parameters.alignment_lower(named("goe:6"), np.inf, restarts=20, seed=SEED)
    goe_cap = (1 / 6 + 3 / 36) ** 0.25
    ok = 1 - 1e-6 <= diag <= 1 + 1e-8 and goe <= goe_cap + 1e-6
    check(6, ok, f"diag:6 w_inf lower = {diag:.9f} (in [1-1e-6, 1+1e-8]); "
                 f"goe:6 lower = {goe:.9f} <= {goe_cap:.9f} + 1e-6")


def _orbit_spec():
    P = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    F = np.diag([-1.0, 1.0, 1.0])
    seed_matrix = [[1.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, -1.0]]
    return EnsembleSpec("group_orbit", {"generators": [P.tolist(), F.tolist()],
                                        "seed_matrix": seed_matrix})


def test_criterion_07_alignment_below_sigma():
    series = [(t, named(t)) for t in ("diag:4", "goe:4", "spin:2", "indep:bump,3")]
    series.append(("group_orbit", build(_orbit_spec())))
    series += [(f"random#{k}", _random_small(k, "acceptance-7")) for k in range(20)]
    worst, ok = -math.inf, True
    for name, s in series:
        for q in (4.0, 8.0, np.inf):
            lo, _ = parameters.alignment_lower(s, q, restarts=5, iters=100, seed=SEED)
            gap = lo - parameters.sigma(s, q)
            worst = max(worst, gap)
            ok &= gap <= 1e-8
    check(7, ok, f"{len(series)} series x 3 exponents, max (w_lower - sigma) = {worst:.3e} (allowed 1e-8)")


def test_criterion_08_spin_counterexample():
    s = named("spin:64")
    delta = parameters.delta_param(s)
    sig = parameters.sigma(s, np.inf)
    est = moments.mc_estimate(s, "spectral", 500, SEED)
    ok = abs(delta) <= 1e-10 and abs(sig - 12 ** 0.25) <= 1e-10 and est.mean > 2.5
    check(8, ok, f"spin:64 delta = {delta:.1e}, sigma - 12^(1/4) = {sig - 12 ** 0.25:.1e}, "
                 f"E||X|| = {est.mean:.3f} (> 2.5)")


def test_criterion_09_strong_isotropy():
    exact = {t: isotropy.signed_perm_invariant(named(t)) for t in ("goe:8", "diag:8", "indep:bump,3")}
    ok = exact["goe:8"] == "pass" and exact["diag:8"] == "pass" and exact["indep:bump,3"] == "fail"
    worst = 0.0
    for t in ("goe:8", "diag:8"):
        dev = isotropy.mc_isotropy(named(t), 4, 20000, SEED)
        worst = max(worst, max(dev.values()))
    ok &= worst < 0.05
    check(9, ok, f"exact: {exact}; max MC deviation (p <= 4) = {worst:.4f} (< 0.05)")


def test_criterion_10_semicircle():
    t = time.perf_counter()
    res = isotropy.semicircle_check(named("goe:400"), 4, 200, SEED)
    dt = time.perf_counter() - t
    ratios = {p: r["ratio"] for p, r in res.items()}
    ok = all(0.93 <= v <= 1.07 for v in ratios.values()) and dt < 180
    text = ", ".join(f"p={p}: {v:.4f}" for p, v in ratios.items())
    check(10, ok, f"goe:400 ratios {text} (target [0.93, 1.07]), {dt:.1f}s")


def test_criterion_11_strong_isotropy_sandwich():
    spec = EnsembleSpec.from_inline("goe:200")
    s = build(spec)
    w = parameters.closed_form_alignment(spec, np.inf).value
    b = bounds.strong_iso_bounds(s, 3, w)
    est = moments.mc_estimate(s, "normalized_trace_root", 300, SEED, p=3)
    inside = b["lower"] - 4 * est.stderr <= est.mean <= b["upper"] + 4 * est.stderr
    ok = b["lower_valid"] and inside
    check(11, ok, f"goe:200 p=3 w = {w:.4f}: lower_valid = {b['lower_valid']} "
                  f"(p^(7/4) w = {3 ** 1.75 * w:.3f} vs 0.7 sigma = {0.7 * parameters.sigma(s, np.inf):.3f}); "
                  f"root = {est.mean:.4f} in [{b['lower']:.4f}, {b['upper']:.4f}]: {inside}")


def test_criterion_12_property_sweeps():
    t = time.perf_counter()
    reps = [inequalities.heinz_sweep(1000, SEED), inequalities.lust_piquard_sweep(1000, SEED),
            inequalities.poly_sweep(1000, SEED)]
    dt = time.perf_counter() - t
    ok = all(r.violations == 0 and r.trials == 1000 for r in reps) and dt < 120
    text = ", ".join(f"{r.name}: {r.violations} violations" for r in reps)
    check(12, ok, f"{text}, {dt:.1f}s")


DETERMINISM_COMMANDS = [
    ["estimate", "--ensemble", "goe:200", "--stat", "spectral", "--samples", "300"],
    ["estimate", "--ensemble", "diag:1000", "--stat", "spectral", "--samples", "300"],
    ["verify", "--ensemble", "goe:200", "--bound", "khintchine-spectral", "--samples", "300"],
    ["verify", "--ensemble", "goe:200", "--bound", "strong-iso:p=3", "--samples", "300"],
    ["params", "--ensemble", "goe:6", "--q", "inf"],
    ["check", "heinz", "--samples", "1000"],
    ["check", "ibp", "--ensemble", "goe:3", "--p", "2,3", "--samples", "2000"],
    ["isotropy", "--ensemble", "goe:8", "--p", "4", "--samples", "20000"],
    ["reproduce", "--preset", "goe-semicircle"],
    ["reproduce", "--preset", "spin-counterexample"],
]


def _report_bytes(argv, tmp_path, threads):
    out = tmp_path / f"r{threads}.json"
    thread_flag = [] if argv[0] == "params" else ["--threads", str(threads)]
    cli.run(argv + ["--seed", str(SEED), "--out", str(out)] + thread_flag)
    doc = json.loads(out.read_text())
    doc.pop("generated_at")
    return json.dumps(doc, sort_keys=True).encode()


def test_criterion_13_determinism(tmp_path):
    mismatched = []
    for argv in DETERMINISM_COMMANDS:
        runs = {_report_bytes(argv, tmp_path, th) for th in (1, 4)}
        runs.add(_report_bytes(argv, tmp_path, 1))
        if len(runs) != 1:
            mismatched.append(" ".join(argv[:3]))
    ok = not mismatched
    check(13, ok, f"{len(DETERMINISM_COMMANDS)} commands rerun with --threads 1/4/1: "
                  f"{'identical bytes' if ok else 'differ: ' + '; '.join(mismatched)}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
