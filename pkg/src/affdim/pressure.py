"""Subadditive pressures of the projected singular value potentials and the
dimensions obtained as their zeros.

All sums are accumulated in the log domain. The core quantity is the table of
``log || (B^T)^{wedge j} T_I^{wedge j} ||`` over words ``I`` of a fixed length,
where ``B`` is an orthonormal basis of a subspace; ``log phi^s`` of every
projected product is read off that table for any ``s`` without re-enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidInputError
from .linalg import Subspace, exterior_power, image_subspace, log_svf_from_wedge, svf
from .words import as_word, check_budget, log_norm_blocks, word_product, words_up_to

TABLE_CACHE_WORDS = 1 << 21
DEFAULT_WORD_TARGET = 1 << 15


@dataclass
class PressureConfig:
    """Estimator parameters shared by the pressure and dimension routines.

    ``n`` defaults to the largest length with ``m**n <= word_target``;
    ``schedule`` defaults to ``[n // 2, n]``.
    """

    n: int | None = None
    schedule: list | None = None
    depth: int | None = None
    tol: float = 1e-4
    max_iter: int = 200
    word_target: int = DEFAULT_WORD_TARGET
    budget: int | None = None

    def length(self, m):
        if self.schedule:
            return int(max(self.schedule))
        if self.n is not None:
            return int(self.n)
        if m == 1:
            return 1
        return max(1, int(math.floor(math.log(self.word_target) / math.log(m) + 1e-9)))

    def lengths(self, m):
        if self.schedule:
            return sorted(int(x) for x in self.schedule)
        n = self.length(m)
        return sorted({max(1, n // 2), n})

    def psi_depth(self, d):
        return d - 1 if self.depth is None else int(self.depth)


@dataclass
class PressureEstimate:
    s: float
    value: float
    upper_bound: float
    sequence: list
    psi_sequence: list
    method: str
    psi_upper: float = math.inf


@dataclass
class DimensionEstimate:
    value: float
    bracket: tuple
    iterations: int
    pressure_at_value: float
    flagged: bool = False
    n: int | None = None
    rigorous_upper: float = math.inf
    trace: dict = field(default_factory=dict)

    @property
    def width(self):
        return self.bracket[1] - self.bracket[0]

    def as_dict(self):
        return {
            "value": self.value,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "pressure_at_value": self.pressure_at_value,
            "flagged": self.flagged,
            "n": self.n,
            "rigorous_upper": self.rigorous_upper,
            "trace": self.trace,
        }


def _subspace_or_full(T, W):
    if W is None:
        return Subspace.full(T.d)
    if W.ambient_dim != T.d:
        raise InvalidInputError(f"subspace lives in R^{W.ambient_dim}, tuple in R^{T.d}")
    return W


def _orbit_family(T, W, depth):
    """Subspaces ``T_K^* W`` for words ``K`` with ``|K| <= depth`` (shortlex)."""
    if W.is_full():
        return [W]
    Ts = T.transposes
    family = []
    for K in words_up_to(T.m, depth):
        V = W
        for k in K:
            V = image_subspace(Ts[k], V)
        family.append(V)
    return family


class LogNormTable:
    """Log exterior-power norms of ``P_V T_I`` for ``I`` in ``Sigma_n``.

    ``V`` ranges over the orbit family ``T_K^* W`` with ``|K| <= depth``; the
    first member is ``W`` itself. Row ``I`` of level ``j`` holds
    ``log alpha_1 ... alpha_j (P_V T_I)``.
    """

    def __init__(self, T, W, n, depth=0, budget=None):
        self.T = T
        self.W = _subspace_or_full(T, W)
        self.n = int(n)
        if self.n < 1:
            raise InvalidInputError("word length n must be >= 1")
        self.k = self.W.dim
        self.family = _orbit_family(T, self.W, depth)
        self.budget = budget
        check_budget(T.m, self.n, budget)
        self.channels = []
        for V in self.family:
            for j in range(1, self.k + 1):
                left = exterior_power(V.basis.T, j)
                self.channels.append((left, T.wedge(j)))
        self._cache = None
        if T.m**self.n * len(self.family) <= TABLE_CACHE_WORDS:
            self._cache = np.concatenate(list(self._raw_blocks()), axis=0)

    def _raw_blocks(self):
        nf = len(self.family)
        for block in log_norm_blocks(self.channels, self.T.m, self.n, budget=self.budget):
            L = block.reshape(block.shape[0], nf, self.k)
            yield np.concatenate([np.zeros(L.shape[:-1] + (1,)), L], axis=-1)

    def blocks(self):
        if self._cache is not None:
            yield self._cache
        else:
            yield from self._raw_blocks()

    def log_phi(self, L, s, kind):
        vals = log_svf_from_wedge(L, s, self.T.d)
        if kind == "phi":
            return vals[:, 0]
        return vals.max(axis=1)

    def rate(self, s, kind="phi"):
        """``(1/n) log sum_I phi^s(T_I^* P_W)`` (``kind="phi"``) or the psi analogue."""
        if s < 0:
            raise InvalidInputError("s must be non-negative")
        total = -math.inf
        for L in self.blocks():
            v = self.log_phi(L, s, kind)
            total = np.logaddexp(total, logsumexp(v) if np.isfinite(v).any() else -math.inf)
        return float(total) / self.n


def phi_sum_rate(T, W, s, n, budget=None):
    """``(1/n) log sum_{I in Sigma_n} phi^s(T_I^* P_W)``; ``W=None`` means ``R^d``.

    Returns ``-inf`` when ``s`` exceeds the dimension of a proper ``W``.
    """
    W = _subspace_or_full(T, W)
    if not W.is_full() and s > W.dim:
        return -math.inf
    return LogNormTable(T, W, n, budget=budget).rate(s, "phi")


def psi_value(T, W, s, word, depth):
    """``max_{|K| <= depth} phi^s(T_I^* P_{T_K^* W})``.

    A truncation of the supremum over all ``K``; non-decreasing in ``depth``.
    """
    W = _subspace_or_full(T, W)
    A = word_product(T, as_word(word)).T
    return max(svf(A @ V.projector(), s) for V in _orbit_family(T, W, depth))


def _aitken(seq):
    x0, x1, x2 = seq[-3:]
    denom = x2 - 2 * x1 + x0
    if abs(denom) < 1e-15:
        return x2
    return x2 - (x2 - x1) ** 2 / denom


def _unprojected_upper(T, s, lengths, budget=None):
    """``min_n (1/n) log sum phi^s(T_I)``; rigorous since that sequence is subadditive."""
    return min(LogNormTable(T, None, n, budget=budget).rate(s) for n in lengths)


def pressure_estimate(T, W, s, schedule, depth=None, extrapolate=False, budget=None):
    """Finite-length estimate of ``P(T, W, s)`` with a rigorous upper bound.

    ``upper_bound`` is the minimum over the schedule of the unprojected rates
    ``(1/n) log sum phi^s(T_I)``. That is the psi envelope taken over the whole
    Grassmannian (the sup of ``phi^s(A P_V)`` over ``k``-planes ``V`` equals
    ``phi^s(A)`` for ``s <= k``), which is submultiplicative, so every term
    bounds the pressure from above.

    ``value`` is the phi-sum rate at the largest length (Aitken-extrapolated
    over the last three lengths when ``extrapolate`` is set), capped at
    ``upper_bound``. ``psi_sequence`` and ``psi_upper`` come from the
    depth-truncated envelope over ``T_K^* W``, ``|K| <= depth``; truncation
    breaks submultiplicativity, so ``psi_upper`` is a heuristic.
    """
    W = _subspace_or_full(T, W)
    lengths = sorted(int(n) for n in schedule)
    if not lengths:
        raise InvalidInputError("schedule must be non-empty")
    depth = T.d - 1 if depth is None else depth
    seq, psi_seq = [], []
    for n in lengths:
        table = LogNormTable(T, W, n, depth=depth, budget=budget)
        seq.append((n, table.rate(s, "phi")))
        psi_seq.append((n, table.rate(s, "psi")))
    value = seq[-1][1]
    method = "phi-sum"
    if extrapolate and len(seq) >= 3:
        value = _aitken([v for _, v in seq])
        method = "phi-sum+aitken"
    upper = _unprojected_upper(T, s, lengths, budget) if W.is_full() or s <= W.dim else -math.inf
    if value > upper:
        value = upper
        method += "+capped"
    return PressureEstimate(
        s=float(s),
        value=float(value),
        upper_bound=float(upper),
        sequence=seq,
        psi_sequence=psi_seq,
        method=method,
        psi_upper=float(min(v for _, v in psi_seq)),
    )


def bisect_decreasing(f, lo, hi, tol, max_iter=200):
    """Bisection for the zero of a non-increasing function on ``[lo, hi]``.

    Returns ``(lo, hi, iterations, converged)`` with ``f(lo) >= 0 > f(hi)``
    maintained throughout.
    """
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, hi, it, hi - lo <= tol


def _root_of_rate(T, table, s_max, cfg, extra_trace=None):
    lo, hi = 0.0, float(s_max)
    if table.rate(hi) >= 0:
        return DimensionEstimate(
            value=hi,
            bracket=(hi, hi),
            iterations=0,
            pressure_at_value=table.rate(hi),
            n=table.n,
            trace=dict(extra_trace or {}, clamped=True),
        )
    lo, hi, it, ok = bisect_decreasing(table.rate, lo, hi, cfg.tol, cfg.max_iter)
    value = 0.5 * (lo + hi)
    return DimensionEstimate(
        value=value,
        bracket=(lo, hi),
        iterations=it,
        pressure_at_value=table.rate(value),
        flagged=not ok,
        n=table.n,
        trace=dict(extra_trace or {}, clamped=False),
    )


def _rigorous_dim_upper(T, s, lengths, budget):
    """Upper bound on the critical exponent from the subadditive unprojected rates."""
    slope = math.log(1.0 / T.alpha_plus)
    ub = _unprojected_upper(T, s, lengths, budget)
    return s + max(ub, 0.0) / slope


def _stability(T, W, cfg, est, half_n, s_max):
    if half_n < 1 or half_n == est.n:
        return None
    table = LogNormTable(T, W, half_n, budget=cfg.budget)
    half = _root_of_rate(T, table, s_max, cfg)
    return {"n": half_n, "value": half.value, "shift": abs(half.value - est.value)}


def affinity_dim(T, cfg=None):
    """Zero of ``s -> (1/n) log sum_I phi^s(T_I)`` by bisection.

    The search interval is ``[0, log m / log(1/alpha_+)]``, which brackets the
    finite-length root. The estimate carries the bisection bracket, the root at
    half the length (doubling stability check) and a rigorous upper bound.
    """
    cfg = cfg or PressureConfig()
    n = cfg.length(T.m)
    s_max = math.log(T.m) / math.log(1.0 / T.alpha_plus) if T.m > 1 else 0.0
    s_max = s_max * (1 + 1e-9) + 1e-9
    table = LogNormTable(T, None, n, budget=cfg.budget)
    est = _root_of_rate(T, table, s_max, cfg)
    est.trace["search_interval"] = [0.0, s_max]
    est.trace["stability"] = _stability(T, None, cfg, est, n // 2, s_max)
    est.rigorous_upper = _rigorous_dim_upper(T, est.bracket[1], cfg.lengths(T.m), cfg.budget)
    return est


def proj_affinity_dim(T, W, cfg=None):
    """Critical exponent of ``sum_I phi^s(P_W T_I)``, searched on ``[0, dim W]``.

    Returns ``dim W`` when the rate at ``s = dim W`` is non-negative; otherwise
    bisects on the phi-sum rate of the largest length.
    """
    cfg = cfg or PressureConfig()
    W = _subspace_or_full(T, W)
    n = cfg.length(T.m)
    k = W.dim
    table = LogNormTable(T, W, n, budget=cfg.budget)
    est = _root_of_rate(T, table, k, cfg)
    est.trace["search_interval"] = [0.0, float(k)]
    est.trace["stability"] = _stability(T, W, cfg, est, n // 2, k)
    est.rigorous_upper = min(
        float(k), _rigorous_dim_upper(T, est.bracket[1], cfg.lengths(T.m), cfg.budget)
    )
    return est


def pressure_curve(T, W, s_values, n, depth=None, budget=None):
    """Rows ``(s, phi-rate, psi-rate)`` at a single length ``n``."""
    W = _subspace_or_full(T, W)
    depth = T.d - 1 if depth is None else depth
    table = LogNormTable(T, W, n, depth=depth, budget=budget)
    rows = []
    for s in s_values:
        if not W.is_full() and s > W.dim:
            rows.append((float(s), -math.inf, -math.inf))
        else:
            rows.append((float(s), table.rate(s, "phi"), table.rate(s, "psi")))
    return rows
