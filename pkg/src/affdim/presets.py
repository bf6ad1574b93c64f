"""Ready-made tuples, measures and subspaces used by the CLI and tests."""

import math

import numpy as np

from .ergodic import MeasureSpec
from .linalg import Subspace
from .words import MatrixTuple


def antidiagonal_example():
    """Three antidiagonal maps, a period-2 Markov measure and the x-axis.

    Returns ``(T, mu, W)``. Along typical paths the projected exponent takes
    the two values ``log 2 / (2 log 5/2)`` and ``log 2 / (2 log 5)``.
    """
    T = MatrixTuple(
        [
            [[0.0, 2 / 5], [1 / 5, 0.0]],
            [[0.0, 2 / 5], [1 / 5, 0.0]],
            [[0.0, 1 / 5], [2 / 5, 0.0]],
        ]
    )
    mu = MeasureSpec.markov([0.25, 0.25, 0.5], [[0, 0, 1], [0, 0, 1], [0.5, 0.5, 0]])
    return T, mu, Subspace.coordinate(2, [1])


ANTIDIAGONAL_S_UPPER = math.log(2) / (2 * math.log(5 / 2))
ANTIDIAGONAL_S_LOWER = math.log(2) / (2 * math.log(5))


def similarity_tuple(m, ratio, d=2):
    """``m`` copies of ``ratio * I_d``."""
    return MatrixTuple(np.stack([ratio * np.eye(d)] * m))


def diagonal_pair():
    """``diag(1/2, 1/3)`` and ``diag(1/3, 1/2)``."""
    return MatrixTuple([np.diag([1 / 2, 1 / 3]), np.diag([1 / 3, 1 / 2])])
