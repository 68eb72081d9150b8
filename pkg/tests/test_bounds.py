import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mxconc import bounds as B
from mxconc.ensembles import EnsembleSpec
from mxconc.errors import DomainError
from mxconc.moments import MomentEstimate
from mxconc.parameters import alignment_upper, sigma
from conftest import named, rand_series


def test_khintchine_schatten_values():
    b = B.khintchine_schatten(named("goe:5"), 1)
    assert b["lower"] == b["upper"]
    for d, p in ((7, 2), (10, 3)):
        b = B.khintchine_schatten(named(f"diag:{d}"), p)
        assert b["lower"] == pytest.approx(d ** (1 / (2 * p)))
        assert b["upper"] / b["lower"] == pytest.approx(math.sqrt(2 * p - 1))


def test_khintchine_spectral_values():
    assert B.khintchine_spectral(named("diag:1000"))["upper"] == pytest.approx(6.346, abs=1e-3)
    assert B.khintchine_spectral(named("goe:200"))["lower"] == pytest.approx(0.709, abs=1e-3)


def test_k2_schatten():
    s = named("goe:8")
    assert B.k2_schatten(s, 3, 0.0) == pytest.approx(3 * sigma(s, 6))
    with pytest.raises(DomainError):
        B.k2_schatten(s, 2, 0.1)


@pytest.mark.parametrize("text", ["diag:6", "goe:6", "spin:3", "indep:bump,4"])
@pytest.mark.parametrize("p", [3, 4])
def test_k2_schatten_never_much_worse(text, p):
    s = named(text)
    w = alignment_upper(s, 2 * p)
    assert B.k2_schatten(s, p, w) <= (3 * (2 * p - 1) ** 0.25 + math.sqrt(2 * p - 1)) * sigma(s, 2 * p)


def test_k2_spectral():
    d = 50
    s = named(f"goe:{d}")
    L = 2 * math.e * math.log(d)
    assert B.k2_spectral(s, 0.0) == pytest.approx(3 * sigma(s, np.inf) * L ** 0.25)
    intro = (4 * d) ** -0.25
    expected = 3 * sigma(s, np.inf) * L ** 0.25 + math.sqrt(L) * intro
    assert B.k2_spectral(s, intro) == pytest.approx(expected)
    B.k2_spectral(named("diag:8"), 1.0)
    with pytest.raises(DomainError):
        B.k2_spectral(named("diag:7"), 1.0)


def test_strong_iso_bounds():
    s = named("goe:10")
    b = B.strong_iso_bounds(s, 2, 0.0)
    assert b["lower"] == pytest.approx(b["upper"])
    sch = B.strong_iso_bounds(s, 2, 0.1, scale="schatten")
    nt = B.strong_iso_bounds(s, 2, 0.1)
    assert sch["upper"] == pytest.approx(nt["upper"] * 10 ** 0.25)


def test_bvh():
    spec = EnsembleSpec("indep", {"A": np.eye(5).tolist()})
    s2 = 2 * sigma(named("diag:5"), np.inf)
    assert B.bvh_spectral(spec, 0) == pytest.approx(2 * sigma(__import__("mxconc").build(spec), np.inf))
    assert B.bvh_spectral(spec, 3.0) - B.bvh_spectral(spec, 0) == pytest.approx(3 * math.sqrt(math.log(5)))
    with pytest.raises(DomainError):
        B.bvh_spectral(EnsembleSpec.from_inline("goe:4"))


def test_bvh_homogeneous_approaches_two_sigma():
    ratios = []
    for d in (16, 64, 256):
        A = np.full((d, d), 1 / math.sqrt(d))
        spec = EnsembleSpec("indep", {"A": A.tolist()})
        ratios.append(B.bvh_spectral(spec, 1.0) / B.bvh_spectral(spec, 0.0))
    assert ratios[0] > ratios[1] > ratios[2] > 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(0.1, 5))
def test_homogeneity(seed, c):
    s = rand_series(seed, d=3)
    sc = s.scaled(-c)
    assert B.khintchine_spectral(sc)["upper"] == pytest.approx(c * B.khintchine_spectral(s)["upper"])
    assert B.k2_schatten(sc, 3, c * 0.3) == pytest.approx(c * B.k2_schatten(s, 3, 0.3))
    assert B.strong_iso_bounds(sc, 2, c * 0.1)["upper"] == pytest.approx(
        c * B.strong_iso_bounds(s, 2, 0.1)["upper"])


def est(mean, se):
    return MomentEstimate("spectral_norm", None, 100, mean, se, 0)


def test_judge_rules():
    assert B.judge("x", "spectral", 0.0, 10.0, est(5.0, 0.1)).verdict == "pass"
    assert B.judge("x", "spectral", 0.0, 10.0, est(10.3, 0.1)).verdict == "pass"
    assert B.judge("x", "spectral", 0.0, 10.0, est(10.5, 0.1)).verdict == "fail"
    assert B.judge("x", "spectral", 0.0, 1.0, est(0.5, 0.2)).verdict == "inconclusive"
    c = B.judge("x", "spectral", None, 10.0, est(8.0, 0.5))
    assert c.slack_sigmas == pytest.approx(4.0)
    assert B.judge("x", "spectral", None, 0.0, est(1.0, 0.0)).verdict == "fail"


def test_verify_examples():
    spec = EnsembleSpec.from_inline("goe:60")
    checks = B.verify(named("goe:60"), ["khintchine-spectral", {"name": "k2-schatten", "p": 2},
                                         {"name": "k2-schatten", "p": 3},
                                         {"name": "fixed", "upper": 0.0}],
                      samples=200, seed=1, spec=spec)
    assert [c.verdict for c in checks] == ["pass", "error", "pass", "fail"]
    assert "p must be" in checks[1].notes["error"]
    # shared draws: both spectral checks see the same estimate
    assert checks[0].estimate == checks[3].estimate
    row = checks[0].csv_row()
    assert len(row) == len(B.CSV_COLUMNS) and row[-1] == "pass"


def test_verify_deterministic():
    run = lambda: [c.to_dict() for c in B.verify(named("spin:4"), ["khintchine-spectral"], 100, 9)]
    assert run() == run()


def test_strong_iso_lower_dropped_when_invalid():
    spec = EnsembleSpec.from_inline("goe:30")
    (c,) = B.verify(named("goe:30"), [{"name": "strong-iso", "p": 3}], 50, 1, spec=spec)
    assert c.notes["lower_valid"] is False and c.lower is None
