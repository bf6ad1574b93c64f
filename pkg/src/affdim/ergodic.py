"""Bernoulli and Markov measures on the full shift, Lyapunov exponents of the
transpose cocycle, Lyapunov dimension, and the projected local-dimension
exponents ``S_n``/``S`` with their extremes over sampled paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product as iproduct

import numpy as np
from scipy.sparse.csgraph import connected_components

from ._parallel import pmap
from .errors import InvalidInputError
from .linalg import Subspace, exterior_power
from .words import Word, as_word

MC_STRIDE = 10
STDERR_FLOOR = 1e-9
RENORM_EVERY = 16
MIN_CLUSTER_TOL = 1e-2


class ZeroMassWarning(UserWarning):
    """A cylinder outside the support was evaluated; ``S_n`` defaults to ``k``."""


def rng_for(seed, index):
    """Generator keyed by ``(seed, index)``; independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """Bernoulli (``P is None``) or stationary Markov measure on ``{1..m}^N``."""

    p: np.ndarray
    P: np.ndarray | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise InvalidInputError("p must be a non-empty probability vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise InvalidInputError("p has negative or non-finite entries")
        if abs(p.sum() - 1) > 1e-12:
            raise InvalidInputError(f"p sums to {p.sum():.15g}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        if self.P is not None:
            P = np.array(self.P, dtype=float)
            if P.shape != (p.size, p.size):
                raise InvalidInputError(f"P must be {p.size}x{p.size}, got {P.shape}")
            if np.any(P < 0) or not np.all(np.isfinite(P)):
                raise InvalidInputError("P has negative or non-finite entries")
            if np.any(np.abs(P.sum(axis=1) - 1) > 1e-12):
                raise InvalidInputError("rows of P must sum to 1")
            if np.max(np.abs(p @ P - p)) > 1e-10:
                raise InvalidInputError("p is not stationary for P (pP != p)")
            P.setflags(write=False)
            object.__setattr__(self, "P", P)

    @classmethod
    def bernoulli(cls, p):
        return cls(p)

    @classmethod
    def uniform(cls, m):
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def markov(cls, p, P):
        return cls(p, P)

    @property
    def kind(self):
        return "bernoulli" if self.P is None else "markov"

    @property
    def m(self):
        return self.p.size

    @property
    def support(self):
        return np.flatnonzero(self.p > 0)

    @property
    def transition(self):
        """Transition matrix (rows equal to ``p`` in the Bernoulli case)."""
        if self.P is None:
            return np.tile(self.p, (self.m, 1))
        return self.P

    @property
    def ergodic(self):
        """Transition digraph restricted to the support is strongly connected."""
        if self.P is None:
            return True
        sup = self.support
        graph = (self.P[np.ix_(sup, sup)] > 0).astype(int)
        n, _ = connected_components(graph, directed=True, connection="strong")
        return n == 1

    def period(self):
        """Period of the chain on its support and the cyclic class of each letter."""
        sup = list(self.support)
        if self.P is None:
            return 1, {i: 0 for i in sup}
        adj = self.P > 0
        level = {sup[0]: 0}
        queue = [sup[0]]
        g = 0
        while queue:
            u = queue.pop(0)
            for v in np.flatnonzero(adj[u]):
                v = int(v)
                if v not in level:
                    level[v] = level[u] + 1
                    queue.append(v)
                else:
                    g = math.gcd(g, level[u] + 1 - level[v])
        g = abs(g) or 1
        return g, {i: level[i] % g for i in level}

    def as_dict(self):
        if self.P is None:
            return {"bernoulli": {"p": self.p.tolist()}}
        return {"markov": {"p": self.p.tolist(), "P": self.P.tolist()}}


def entropy(mu):
    """Entropy of the shift in nats."""
    if mu.P is None:
        p = mu.p[mu.p > 0]
        return float(-(p * np.log(p)).sum())
    P = mu.P
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
    return float(-(mu.p[:, None] * terms).sum())


def log_cylinder_mass(mu, word):
    w = as_word(word).check_alphabet(mu.m)
    if len(w) == 0:
        return 0.0
    idx = w.indices
    with np.errstate(divide="ignore"):
        if mu.P is None:
            return float(np.log(mu.p[idx]).sum())
        return float(np.log(mu.p[idx[0]]) + np.log(mu.P[idx[:-1], idx[1:]]).sum())


def cylinder_mass(mu, word):
    """``mu([I])``; the empty word has mass 1."""
    return math.exp(log_cylinder_mass(mu, word))


def _draw(mu, u):
    """Turn uniforms ``u`` of shape ``(count, n)`` into 0-based symbol paths."""
    count, n = u.shape
    out = np.empty((count, n), dtype=np.int64)
    cp = np.cumsum(mu.p)
    out[:, 0] = np.minimum((u[:, :1] >= cp[None, :]).sum(axis=1), mu.m - 1)
    if mu.P is None:
        out[:, 1:] = np.minimum(np.searchsorted(cp, u[:, 1:], side="right"), mu.m - 1)
        return out
    cP = np.cumsum(mu.P, axis=1)
    for t in range(1, n):
        rows = cP[out[:, t - 1]]
        out[:, t] = np.minimum((u[:, t : t + 1] >= rows).sum(axis=1), mu.m - 1)
    return out


def sample_indices(mu, n, count, seed, first=0):
    """``count`` paths of length ``n`` as 0-based arrays; row ``r`` uses key ``(seed, first + r)``."""
    if n < 1:
        raise InvalidInputError("path length must be >= 1")
    u = np.stack([rng_for(seed, first + r).random(n) for r in range(count)]) if count else np.zeros((0, n))
    return _draw(mu, u)


def sample_block(mu, n, count, rng):
    """``count`` paths drawn from one generator (used for bulk point sampling)."""
    return _draw(mu, rng.random((count, n)))


def sample_path(mu, n, seed, index=0):
    """One ``mu``-typical word of length ``n``, reproducible from ``(seed, index)``."""
    return Word(tuple(int(x) + 1 for x in sample_indices(mu, n, 1, seed, index)[0]))


@dataclass
class LyapunovSpectrum:
    exponents: np.ndarray
    stderr: np.ndarray
    mode: str
    n: int | None = None
    trials: int | None = None

    def __post_init__(self):
        self.exponents = np.asarray(self.exponents, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)

    def as_dict(self):
        return {
            "exponents": self.exponents.tolist(),
            "stderr": self.stderr.tolist(),
            "mode": self.mode,
            "n": self.n,
            "trials": self.trials,
        }


def _benettin(Ts, paths, stride):
    trials, n = paths.shape
    d = Ts.shape[1]
    Q = np.broadcast_to(np.eye(d), (trials, d, d)).copy()
    acc = np.zeros((trials, d))
    for t in range(n):
        Q = np.matmul(Ts[paths[:, t]], Q)
        if (t + 1) % stride == 0 or t == n - 1:
            Q, R = np.linalg.qr(Q)
            acc += np.log(np.abs(np.diagonal(R, axis1=1, axis2=2)))
    return acc / n


def lyapunov_mc(T, mu, n=10000, trials=64, seed=0, stride=MC_STRIDE, workers=1):
    """Monte Carlo Lyapunov spectrum of ``x -> T_{x_1}^*`` by QR re-orthogonalisation.

    Trials are independent paths keyed by ``(seed, trial)``; each trial's
    exponents are sorted before averaging. ``stderr`` is floored at
    ``STDERR_FLOOR`` so near-deterministic cocycles still get a usable band.
    """
    if mu.m != T.m:
        raise InvalidInputError("measure alphabet and tuple size differ")
    Ts = T.transposes
    chunks = [list(range(a, min(a + 16, trials))) for a in range(0, trials, 16)]

    def run(chunk):
        paths = sample_indices(mu, n, len(chunk), seed, chunk[0])
        return _benettin(Ts, paths, stride)

    per_trial = -np.sort(-np.concatenate(pmap(run, chunks, workers), axis=0), axis=1)
    mean = per_trial.mean(axis=0)
    err = per_trial.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(T.d)
    return LyapunovSpectrum(mean, np.maximum(err, STDERR_FLOOR), "mc", n=n, trials=trials)


def _is_diagonal(A):
    return bool(np.all(A[:, ~np.eye(A.shape[1], dtype=bool)] == 0))


def _is_antidiagonal(A):
    if A.shape[1] != 2:
        return False
    return bool(np.all(A[:, 0, 0] == 0) and np.all(A[:, 1, 1] == 0))


def lyapunov_exact(T, mu):
    """Closed-form spectrum for all-diagonal or all-antidiagonal (2x2) tuples.

    Returns ``None`` for any other structure. In the antidiagonal case the
    two-step products are diagonal; for a chain of even period the even and odd
    cyclic classes feed the two diagonal entries differently, otherwise both
    entries grow at the same rate.
    """
    A = T.matrices
    w = mu.p
    with np.errstate(divide="ignore"):
        if _is_diagonal(A):
            logs = np.log(np.abs(np.diagonal(A, axis1=1, axis2=2)))
            ex = np.sort((w[:, None] * np.where(w[:, None] > 0, logs, 0.0)).sum(axis=0))[::-1]
            return LyapunovSpectrum(ex, np.zeros_like(ex), "exact-diagonal")
        if _is_antidiagonal(A):
            lc = np.log(np.abs(A[:, 0, 1]))
            ld = np.log(np.abs(A[:, 1, 0]))
    if not _is_antidiagonal(A):
        return None
    g, cls = mu.period()
    sup = mu.support
    if g % 2 == 1:
        lam = 0.5 * float(sum(w[i] * (lc[i] + ld[i]) for i in sup))
        ex = np.array([lam, lam])
    else:
        even = [i for i in sup if cls[i] % 2 == 0]
        odd = [i for i in sup if cls[i] % 2 == 1]
        u = sum(w[i] * lc[i] for i in even) + sum(w[i] * ld[i] for i in odd)
        v = sum(w[i] * ld[i] for i in even) + sum(w[i] * lc[i] for i in odd)
        ex = np.array(sorted([float(u), float(v)], reverse=True))
    return LyapunovSpectrum(ex, np.zeros(2), "exact-antidiagonal")


def _exponents(spectrum):
    if isinstance(spectrum, LyapunovSpectrum):
        return [float(x) for x in spectrum.exponents]
    return [float(x) for x in spectrum]


def lyapunov_dim(mu, T, spectrum):
    """Unique ``s >= 0`` with ``h + G^s = 0``, solved segment by segment.

    ``G^s`` is piecewise linear: ``Lambda_1 + ... + Lambda_j + (s-j) Lambda_{j+1}``
    below ``d`` and ``(s/d) sum Lambda`` above.
    """
    h = entropy(mu)
    lam = _exponents(spectrum)
    d = len(lam)
    if h <= 0:
        return 0.0
    acc = h
    for j in range(d):
        if acc + lam[j] <= 0:
            return j + acc / -lam[j]
        acc += lam[j]
    total = sum(lam)
    return -h * d / total


def s_via_gamma(h, spectrum, pivots, k):
    """``k`` if ``h + Gamma(k) >= 0``, else the root of ``h + Gamma(s) = 0``.

    ``Gamma(s) = sum_{j <= floor(s)} Lambda_{p_j} + (s - floor(s)) Lambda_{p_{floor(s)+1}}``
    with 1-based pivot positions ``p``.
    """
    lam = _exponents(spectrum)
    rates = [lam[p - 1] for p in pivots[:k]]
    acc = float(h)
    for j, r in enumerate(rates):
        if acc + r < 0:
            return j + acc / -r
        acc += r
    return float(k)


# --- projected exponents S_n -------------------------------------------------


def _log_levels_along(T, W, paths, checkpoints):
    """``log alpha_1...alpha_j (P_W T_{x|n})`` for ``j = 0..k`` at each checkpoint.

    Each exterior level is carried as ``(B^T)^{wedge j} T_{x_1}^{wedge j} ...``
    with periodic rescaling, so no level is lost to underflow relative to the
    others. Returns shape ``(paths, len(checkpoints), k + 1)``.
    """
    count, N = paths.shape
    k = W.dim
    stack = []
    for j in range(1, k + 1):
        left = exterior_power(W.basis.T, j)
        R = np.broadcast_to(left, (count,) + left.shape).copy()
        stack.append([R, np.zeros(count), T.wedge(j)])
    out = np.zeros((count, len(checkpoints), k + 1))
    cps = {int(c): i for i, c in enumerate(checkpoints)}
    for t in range(N):
        x = paths[:, t]
        for item in stack:
            item[0] = np.matmul(item[0], item[2][x])
        step = t + 1
        if step % RENORM_EVERY == 0 or step in cps:
            for item in stack:
                mx = np.abs(item[0]).max(axis=(1, 2))
                safe = np.where(mx > 0, mx, 1.0)
                item[0] = item[0] / safe[:, None, None]
                with np.errstate(divide="ignore"):
                    item[1] = item[1] + np.where(mx > 0, np.log(safe), -np.inf)
        if step in cps:
            col = cps[step]
            for j, (R, scale, _) in enumerate(stack, start=1):
                if R.shape[1] == 1:
                    norms = np.linalg.norm(R[:, 0, :], axis=1)
                else:
                    norms = np.linalg.norm(R, ord=2, axis=(1, 2))
                with np.errstate(divide="ignore"):
                    out[:, col, j] = scale + np.log(norms)
    return out


def _log_masses_along(mu, paths, checkpoints):
    with np.errstate(divide="ignore"):
        lp = np.log(mu.p)[paths[:, 0]]
        if mu.P is None:
            steps = np.log(mu.p)[paths[:, 1:]]
        else:
            steps = np.log(mu.P)[paths[:, :-1], paths[:, 1:]]
    cum = np.concatenate([lp[:, None], lp[:, None] + np.cumsum(steps, axis=1)], axis=1)
    return cum[:, np.asarray(checkpoints, dtype=int) - 1]


def _s_from_levels(L, M, k):
    """Solve ``log phi^s = M`` on the piecewise-linear profile ``L`` (last axis)."""
    L = np.asarray(L, dtype=float)
    M = np.asarray(M, dtype=float)
    out = np.full(M.shape, float(k))
    todo = L[..., k] < M
    for j in range(k - 1, -1, -1):
        hit = todo & (L[..., j] >= M)
        if np.any(hit):
            lo = L[..., j][hit]
            hi = L[..., j + 1][hit]
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.where(np.isneginf(hi), 0.0, (lo - M[hit]) / (lo - hi))
            out[hit] = j + frac
            todo = todo & ~hit
    return out


def s_n(mu, T, W, word):
    """``S_n = sup{s in [0, k]: phi^s(P_W T_I) >= mu([I])}`` for a word ``I``.

    A zero-mass cylinder returns ``k`` and emits :class:`ZeroMassWarning`.
    """
    w = as_word(word).check_alphabet(T.m)
    if len(w) == 0:
        raise InvalidInputError("S_n needs a non-empty word")
    M = log_cylinder_mass(mu, w)
    if M == -math.inf:
        warnings.warn(f"cylinder [{w}] has zero mass", ZeroMassWarning, stacklevel=2)
        return float(W.dim)
    L = _log_levels_along(T, W, w.indices[None, :], [len(w)])[0, 0]
    return float(_s_from_levels(L, np.array(M), W.dim))


def default_schedule(N, points=16, start=10):
    start = min(start, N)
    grid = np.unique(np.round(np.geomspace(start, N, points)).astype(int))
    return [int(x) for x in grid]


@dataclass
class SLimit:
    estimate: float
    trace: list
    oscillation: float


def _limit_from_trace(schedule, values):
    tail = max(1, len(schedule) // 3)
    last = np.asarray(values[-tail:])
    return SLimit(float(values[-1]), list(zip(schedule, map(float, values))), float(last.max() - last.min()))


def _s_traces(mu, T, W, paths, schedule):
    L = _log_levels_along(T, W, paths, schedule)
    M = _log_masses_along(mu, paths, schedule)
    return _s_from_levels(L, M, W.dim)


def s_limit(mu, T, W, path, schedule=None):
    """``S_n`` along the prefixes of ``path`` at the scheduled lengths.

    The estimate is the last value; ``oscillation`` is the spread over the
    final third of the schedule.
    """
    w = as_word(path).check_alphabet(T.m)
    schedule = default_schedule(len(w)) if schedule is None else sorted(int(x) for x in schedule)
    if not schedule or schedule[-1] > len(w):
        raise InvalidInputError("schedule must be non-empty and end within the path")
    values = _s_traces(mu, T, W, w.indices[None, :], schedule)[0]
    return _limit_from_trace(schedule, values)


def cluster_values(values, tol):
    """Single-linkage clusters of sorted values with gaps larger than ``tol`` split."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return []
    groups = [[v[0]]]
    for x in v[1:]:
        if x - groups[-1][-1] > tol:
            groups.append([x])
        else:
            groups[-1].append(x)
    return [
        {"center": float(np.mean(g)), "count": len(g), "min": float(g[0]), "max": float(g[-1])}
        for g in groups
    ]


@dataclass
class SProfile:
    records: list
    s_lower: float
    s_upper: float
    clusters: list
    cluster_tol: float
    histogram: dict = field(default_factory=dict)
    k: int = 1

    def as_dict(self, with_records=True):
        out = {
            "s_lower": self.s_lower,
            "s_upper": self.s_upper,
            "clusters": self.clusters,
            "cluster_tol": self.cluster_tol,
            "cluster_note": "heuristic single-linkage grouping",
            "histogram": self.histogram,
            "k": self.k,
            "samples": len(self.records),
        }
        if with_records:
            out["records"] = self.records
        return out


def s_extremes(mu, T, W, samples=200, N=2000, seed=0, schedule=None, workers=1, batch=64):
    """Sample ``S(mu, T, W, x)`` over ``mu``-typical paths and summarise.

    Sample ``r`` uses the path keyed by ``(seed, r)``. The cluster tolerance is
    twice the median final-third oscillation, at least ``1e-2``.
    """
    if mu.m != T.m:
        raise InvalidInputError("measure alphabet and tuple size differ")
    schedule = default_schedule(N) if schedule is None else sorted(int(x) for x in schedule)
    chunks = [list(range(a, min(a + batch, samples))) for a in range(0, samples, batch)]

    def run(chunk):
        paths = sample_indices(mu, N, len(chunk), seed, chunk[0])
        vals = _s_traces(mu, T, W, paths, schedule)
        recs = []
        for r, row, path in zip(chunk, vals, paths):
            lim = _limit_from_trace(schedule, row)
            recs.append(
                {
                    "sample": r,
                    "prefix": "".join(str(x + 1) for x in path[:12]) if T.m < 10 else None,
                    "estimate": lim.estimate,
                    "oscillation": lim.oscillation,
                    "trace": lim.trace,
                }
            )
        return recs

    records = [rec for part in pmap(run, chunks, workers) for rec in part]
    est = [r["estimate"] for r in records]
    osc = float(np.median([r["oscillation"] for r in records])) if records else 0.0
    tol = max(2 * osc, MIN_CLUSTER_TOL)
    counts, edges = np.histogram(est, bins=40, range=(0.0, float(W.dim)))
    return SProfile(
        records=records,
        s_lower=float(min(est)),
        s_upper=float(max(est)),
        clusters=cluster_values(est, tol),
        cluster_tol=tol,
        histogram={"edges": edges.tolist(), "counts": counts.tolist()},
        k=W.dim,
    )


@dataclass
class SupermultiplicativityReport:
    constant: float
    zero_pairs: list
    pairs_tested: int


def check_supermultiplicative(mu, max_len=3, keep=20):
    """Smallest ``mu([IJ]) / (mu([I]) mu([J]))`` over ``1 <= |I|, |J| <= max_len``.

    Pairs with a positive denominator but ``mu([IJ]) = 0`` are listed (first
    ``keep`` of them) and force the constant to 0.
    """
    words = [
        Word(tuple(x + 1 for x in w)) for n in range(1, max_len + 1) for w in iproduct(range(mu.m), repeat=n)
    ]
    logs = {w: log_cylinder_mass(mu, w) for w in words}
    best = math.inf
    zeros = []
    tested = 0
    for I in words:
        if logs[I] == -math.inf:
            continue
        for J in words:
            if logs[J] == -math.inf:
                continue
            tested += 1
            lij = log_cylinder_mass(mu, I + J)
            if lij == -math.inf:
                if len(zeros) < keep:
                    zeros.append((str(I), str(J)))
                best = 0.0
                continue
            best = min(best, math.exp(lij - logs[I] - logs[J]))
    return SupermultiplicativityReport(best if tested else math.nan, zeros, tested)


def spectrum_for(T, mu, n=10000, trials=64, seed=0, workers=1):
    """Exact spectrum when the tuple is structured, Monte Carlo otherwise."""
    exact = lyapunov_exact(T, mu)
    if exact is not None:
        return exact
    return lyapunov_mc(T, mu, n=n, trials=trials, seed=seed, workers=workers)


__all__ = [
    "MeasureSpec",
    "LyapunovSpectrum",
    "SProfile",
    "SLimit",
    "ZeroMassWarning",
    "entropy",
    "cylinder_mass",
    "log_cylinder_mass",
    "sample_path",
    "sample_indices",
    "lyapunov_mc",
    "lyapunov_exact",
    "lyapunov_dim",
    "s_n",
    "s_limit",
    "s_extremes",
    "s_via_gamma",
    "check_supermultiplicative",
    "spectrum_for",
    "cluster_values",
    "default_schedule",
]
