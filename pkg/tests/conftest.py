import numpy as np
import pytest

from affdim.presets import antidiagonal_example
from affdim.words import MatrixTuple

ACCEPTANCE_LINES = {}


def random_contracting(rng, m, d, lo=0.2, hi=0.9):
    """``m`` random ``d x d`` matrices with operator norms drawn from ``[lo, hi]``."""
    A = rng.normal(size=(m, d, d))
    A *= rng.uniform(lo, hi, size=(m, 1, 1)) / np.linalg.norm(A, 2, axis=(1, 2))[:, None, None]
    return MatrixTuple(A)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example():
    return antidiagonal_example()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
