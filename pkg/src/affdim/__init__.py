"""Projected affinity dimensions, Lyapunov spectra and projected local exponents
of self-affine iterated function systems."""

__version__ = "0.1.0"

from .ergodic import MeasureSpec, entropy, lyapunov_dim, lyapunov_exact, lyapunov_mc, s_extremes, s_limit, s_n
from .linalg import Subspace, exterior_power, pivot_vector, rref, svf, svf_via_wedge
from .pressure import PressureConfig, affinity_dim, pressure_estimate, proj_affinity_dim
from .words import MatrixTuple, Word

__all__ = [
    "MatrixTuple",
    "MeasureSpec",
    "PressureConfig",
    "Subspace",
    "Word",
    "affinity_dim",
    "entropy",
    "exterior_power",
    "lyapunov_dim",
    "lyapunov_exact",
    "lyapunov_mc",
    "pivot_vector",
    "pressure_estimate",
    "proj_affinity_dim",
    "rref",
    "s_extremes",
    "s_limit",
    "s_n",
    "svf",
    "svf_via_wedge",
]
