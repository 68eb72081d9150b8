import numpy as np
import pytest

from mxconc.ensembles import EnsembleSpec, build, random_series
from mxconc.rng import RngStream


def named(text):
    return build(EnsembleSpec.from_inline(text))


def rand_series(seed, d=3, n=3, real=False):
    return random_series(d, n, RngStream(seed, 0, "test-series"), real=real)


def rand_herm(stream, d):
    G = stream.complex_normal((d, d))
    return (G + G.conj().T) / 2.0


@pytest.fixture
def stream():
    return RngStream(1234, 0, "tests")


# one summary line per acceptance criterion, shown after the test run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
