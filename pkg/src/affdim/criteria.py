"""Structural tests on matrix tuples: orbit spans, irreducibility, the planar
and ``d = 3`` dimension-drop screens, the antidiagonal non-exactness test and
the combinatorial bounds on the number of distinct values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ergodic import entropy, lyapunov_exact
from .errors import ConsistencyError, InvalidInputError, ResourceLimitError
from .linalg import Subspace, exterior_power, orthonormalize, subspace_distance
from .pressure import DimensionEstimate, affinity_dim
from .words import MatrixTuple

INVARIANCE_TOL = 1e-10
ROOT_TOL = 1e-12
ROOT_HI = 50.0
RATIO_TOL = 1e-12
IRREDUCIBLE_MAX_D = 64


@dataclass
class CriterionReport:
    """``verdict`` is ``"holds"``, ``"fails"`` or ``"inconclusive"``."""

    verdict: str
    evidence: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    name: str = ""

    @property
    def holds(self):
        return self.verdict == "holds"

    def as_dict(self):
        return {"name": self.name, "verdict": self.verdict, "evidence": _jsonable(self.evidence), "tolerances": self.tolerances}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, Subspace):
        return {"dim": x.dim, "basis": x.basis.T.tolist()}
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def _verdict(flag):
    return "holds" if flag else "fails"


def orbit_span(matrices, W, j_max=None):
    """Smallest subspace containing ``A_J W`` for all words ``|J| <= j_max``.

    Grows ``X <- span(X, A_1 X, ..., A_m X)`` until the dimension stops
    increasing (at most ``d - 1`` rounds are ever needed).
    """
    mats = np.asarray(matrices, dtype=float)
    d = mats.shape[1]
    rounds = d - 1 if j_max is None else j_max
    X = W.basis
    for _ in range(rounds):
        if X.shape[1] == d:
            break
        grown = orthonormalize(np.column_stack([X] + [A @ X for A in mats]))
        if grown.shape[1] == X.shape[1]:
            break
        X = grown
    return Subspace(X)


def _largest_invariant_inside(matrices, W, tol=INVARIANCE_TOL):
    """Largest subspace of ``W`` mapped into itself by every matrix (may be ``None``)."""
    Y = W.basis
    d = Y.shape[0]
    while Y.shape[1] > 0:
        if Y.shape[1] == d:
            return Subspace(Y)
        u, _, _ = np.linalg.svd(Y, full_matrices=True)
        C = u[:, Y.shape[1]:]
        M = np.vstack([C.T @ A @ Y for A in matrices])
        _, s, vt = np.linalg.svd(M)
        rank = int((s > tol * max(1.0, s[0] if s.size else 0.0)).sum())
        null = vt[rank:].T
        if null.shape[1] == Y.shape[1]:
            return Subspace(Y)
        Y = orthonormalize(Y @ null) if null.shape[1] else np.zeros((d, 0))
    return None


def is_invariant(matrices, W, tol=INVARIANCE_TOL):
    """Every ``A_i W = W`` up to projector distance ``tol``."""
    B = W.basis
    for A in np.asarray(matrices, dtype=float):
        img = orthonormalize(A @ B)
        if img.shape[1] != W.dim or subspace_distance(Subspace(img), W) > tol:
            return False
    return True


def _null_space(M, tol):
    _, s, vt = np.linalg.svd(M)
    rank = int((s > tol * (s[0] if s.size else 1.0)).sum())
    return vt[rank:]


def _algebra_dim(gens, tol=1e-9):
    """Dimension of the unital algebra generated by ``gens`` (span growth over words)."""
    D = gens.shape[1]
    basis = []

    def add(M):
        v = M.ravel() / np.linalg.norm(M)
        for _ in range(2):
            for q in basis:
                v = v - (q @ v) * q
        r = np.linalg.norm(v)
        if r > tol:
            basis.append(v / r)
            return True
        return False

    frontier = [np.eye(D)]
    add(frontier[0])
    while frontier and len(basis) < D * D:
        nxt = []
        for M in frontier:
            for A in gens:
                P = A @ M
                P = P / np.linalg.norm(P)
                if add(P):
                    nxt.append(P)
        frontier = nxt
    return len(basis)


def algebra_irreducible(T, q=1):
    """No common proper invariant subspace for ``{T_i^{wedge q}}`` over the reals.

    Uses the double-commutant characterisation: with ``A`` the generated algebra
    and ``C`` its commutant, the action is irreducible exactly when ``C`` is a
    division algebra and ``dim A * dim C = D^2``. ``C`` is recognised as a
    division algebra by a nondegenerate trace form with a single positive
    direction (the real, complex and quaternion cases).
    """
    if not 1 <= q <= T.d:
        raise InvalidInputError(f"q must lie in 1..{T.d}")
    gens = T.wedge(q) if q > 1 else T.matrices
    D = gens.shape[1]
    if D == 1:
        return True
    if D > IRREDUCIBLE_MAX_D:
        raise ResourceLimitError(D * D, IRREDUCIBLE_MAX_D**2, "algebra dimension D^2")
    dim_a = _algebra_dim(np.asarray(gens))
    I = np.eye(D)
    # vec(AX - XA) = (I kron A - A^T kron I) vec(X), row-major vec
    eqs = np.vstack([np.kron(A, I) - np.kron(I, A.T) for A in gens])
    comm = _null_space(eqs, 1e-9)
    dim_c = comm.shape[0]
    if dim_a * dim_c != D * D:
        return False
    mats = comm.reshape(dim_c, D, D)
    gram = np.einsum("aij,bji->ab", mats, mats)
    ev = np.linalg.eigvalsh((gram + gram.T) / 2)
    scale = np.abs(ev).max()
    if np.any(np.abs(ev) <= 1e-9 * scale):
        return False
    return int((ev > 0).sum()) == 1


def _scalar_root(values):
    """Root ``r`` of ``sum |v|^r = 1`` on ``[0, 50]`` by bisection."""
    v = np.abs(np.asarray(values, dtype=float))

    def f(r):
        return float(np.sum(v**r)) - 1.0

    lo, hi = 0.0, ROOT_HI
    if f(hi) > 0:
        return hi
    if f(lo) <= 0:
        return lo
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _eigen_pair(T, W, idx):
    """``a_i`` (eigenvalue of ``T_i^*`` on the line ``W``) and ``b_i = det T_i / a_i``."""
    w = W.basis[:, 0]
    Ts = T.transposes[idx]
    a = np.einsum("i,mij,j->m", w, Ts, w)
    b = np.linalg.det(T.matrices[idx]) / a
    return a, b


def _check_planar(T, W):
    if T.d != 2 or W.ambient_dim != 2 or W.dim != 1:
        raise InvalidInputError("planar criteria need d = 2 and a line W")


def planar_set_drop_criterion(T, W):
    """Line ``W`` in the plane: does the projected affinity dimension drop?

    Holds iff every ``T_i^*`` fixes ``W`` and the root ``t`` of
    ``sum |a_i|^t = 1`` is below ``min(1, s)`` with ``s`` the root of
    ``sum |b_i|^s = 1``.
    """
    _check_planar(T, W)
    tols = {"invariance": INVARIANCE_TOL, "root": ROOT_TOL}
    inv = is_invariant(T.transposes, W)
    if not inv:
        return CriterionReport("fails", {"invariant": False}, tols, "planar-set-drop")
    a, b = _eigen_pair(T, W, np.arange(T.m))
    t = _scalar_root(a)
    s = _scalar_root(b)
    ev = {"invariant": True, "a": a, "b": b, "t": t, "s": s}
    return CriterionReport(_verdict(t < min(1.0, s)), ev, tols, "planar-set-drop")


def _oseledets_mass(T, mu, W, spectrum):
    """``mu{x : E_2(x) = W}`` where closed form is available, else ``None``."""
    mats = T.matrices
    on_axis = [i for i in range(2) if np.allclose(np.abs(W.basis[:, 0]), np.eye(2)[i], atol=INVARIANCE_TOL)]
    if spectrum.mode == "exact-diagonal":
        if not on_axis:
            return 0.0
        with np.errstate(divide="ignore"):
            rates = (mu.p[:, None] * np.log(np.abs(np.diagonal(mats, axis1=1, axis2=2)))).sum(axis=0)
        axis = on_axis[0]
        return 1.0 if rates[axis] < rates[1 - axis] else 0.0
    if spectrum.mode == "exact-antidiagonal":
        if not on_axis:
            return 0.0
        g, cls = mu.period()
        if g % 2 == 1:
            return 0.0
        sup = mu.support
        even = [i for i in sup if cls[i] % 2 == 0]
        odd = [i for i in sup if cls[i] % 2 == 1]
        lc = np.log(np.abs(mats[:, 0, 1]))
        ld = np.log(np.abs(mats[:, 1, 0]))
        u = sum(mu.p[i] * lc[i] for i in even) + sum(mu.p[i] * ld[i] for i in odd)
        v = sum(mu.p[i] * ld[i] for i in even) + sum(mu.p[i] * lc[i] for i in odd)
        # starting in an even class, e_1 grows at rate u and e_2 at rate v
        e1_slow_from_even = u < v
        mass_even = float(sum(mu.p[i] for i in even))
        e1_mass = mass_even if e1_slow_from_even else 1.0 - mass_even
        return e1_mass if on_axis[0] == 0 else 1.0 - e1_mass
    return None


def planar_measure_drop_criterion(T, W, mu):
    """Planar tests for a line ``W`` and an ergodic measure ``mu``.

    ``verdict`` answers whether the upper projected exponent drops below
    ``min(1, Lyapunov dimension)``. ``evidence["nonexact"]`` answers whether the
    upper and lower exponents differ; it is decided only when the tuple is
    all-diagonal or all-antidiagonal and is ``"inconclusive"`` otherwise.
    """
    _check_planar(T, W)
    if mu.m != T.m:
        raise InvalidInputError("measure alphabet and tuple size differ")
    tols = {"invariance": INVARIANCE_TOL}
    h = entropy(mu)
    sup = mu.support
    ev = {"entropy": h, "support": [int(i) + 1 for i in sup]}
    inv = is_invariant(T.transposes[sup], W)
    ev["invariant_on_support"] = inv
    drop = False
    if inv:
        a, b = _eigen_pair(T, W, sup)
        lam2 = float(np.sum(mu.p[sup] * np.log(np.abs(a))))
        lam1 = float(np.sum(mu.p[sup] * np.log(np.abs(b))))
        ev.update({"a": a, "b": b, "lambda_W": lam2, "lambda_other": lam1})
        drop = lam2 < lam1 and h > 0 and h + lam2 < 0
    spectrum = lyapunov_exact(T, mu)
    if spectrum is None:
        ev["nonexact"] = "inconclusive"
    else:
        l1, l2 = spectrum.exponents
        mass = _oseledets_mass(T, mu, W, spectrum)
        ev.update({"exponents": [l1, l2], "slow_direction_mass": mass})
        cond = l1 > l2 and mass is not None and 0 < mass < 1 and h > 0 and h + l2 < 0
        ev["nonexact"] = _verdict(cond)
    return CriterionReport(_verdict(drop), ev, tols, "planar-measure-drop")


def line_projection_dim(T, W, cfg=None):
    """Projected affinity dimension for a line via the orbit span of ``W``.

    Runs the affinity dimension of ``T^*`` restricted to the smallest invariant
    subspace containing ``W`` and clamps at 1.
    """
    if W.dim != 1:
        raise InvalidInputError("line_projection_dim needs a line W")
    X = orbit_span(T.transposes, W)
    if X.is_full():
        est = affinity_dim(T, cfg)
    else:
        Q = X.basis
        resid = max(np.linalg.norm(A @ Q - Q @ (Q.T @ A @ Q)) for A in T.transposes)
        if resid > 1e-8:
            raise ConsistencyError(f"orbit span not invariant (residual {resid:.3g})")
        est = affinity_dim(MatrixTuple(T.restricted(Q)), cfg)
    lo, hi = est.bracket
    return DimensionEstimate(
        value=min(1.0, est.value),
        bracket=(min(1.0, lo), min(1.0, hi)),
        iterations=est.iterations,
        pressure_at_value=est.pressure_at_value,
        flagged=est.flagged,
        n=est.n,
        rigorous_upper=min(1.0, est.rigorous_upper),
        trace={"orbit_span_dim": X.dim, **est.trace},
    )


def d3_necessary_conditions(T, W):
    """Necessary structure for a projected affinity dimension drop when ``d = 3``.

    Looks for ``W`` itself invariant under every ``T_i^*``, or an invariant plane
    containing a line ``W``, or an invariant line inside a plane ``W``. When none
    exists a drop is impossible.
    """
    if T.d != 3 or W.ambient_dim != 3 or W.dim not in (1, 2):
        raise InvalidInputError("d3_necessary_conditions needs d = 3 and dim W in {1, 2}")
    Ts = T.transposes
    tols = {"invariance": INVARIANCE_TOL}
    ev = {"k": W.dim}
    if is_invariant(Ts, W):
        ev["scenario"] = "W invariant"
        return CriterionReport("holds", ev, tols, "d3-necessary")
    if W.dim == 1:
        X = orbit_span(Ts, W)
        ev["orbit_span_dim"] = X.dim
        if X.dim == 2:
            ev["scenario"] = "invariant plane contains W"
            ev["invariant_subspace"] = X
            return CriterionReport("holds", ev, tols, "d3-necessary")
    else:
        V = _largest_invariant_inside(Ts, W)
        ev["invariant_core_dim"] = 0 if V is None else V.dim
        if V is not None and V.dim == 1:
            ev["scenario"] = "W contains an invariant line"
            ev["invariant_subspace"] = V
            return CriterionReport("holds", ev, tols, "d3-necessary")
    ev["scenario"] = "drop impossible"
    return CriterionReport("fails", ev, tols, "d3-necessary")


def antidiagonal_ratios(T, tol=0.0):
    A = T.matrices
    if T.d != 2 or np.any(np.abs(A[:, 0, 0]) > tol) or np.any(np.abs(A[:, 1, 1]) > tol):
        raise InvalidInputError("every matrix must be antidiagonal [[0, c], [d, 0]]")
    return np.abs(A[:, 0, 1] / A[:, 1, 0])


def antidiagonal_nonexact_criterion(T):
    """Antidiagonal planar tuple: do two letters have different ``|c_i / d_i|``?

    When they do, some ergodic measure has a non-exact-dimensional projection
    onto a coordinate axis.
    """
    r = antidiagonal_ratios(T)
    spread = r.max() - r.min()
    verdict = spread > RATIO_TOL * r.max()
    return CriterionReport(_verdict(verdict), {"ratios": r}, {"ratio_relative": RATIO_TOL}, "antidiagonal-nonexact")


def ceil_level(x, k):
    """Smallest integer not less than ``min(k, x)``."""
    return int(math.ceil(min(float(k), float(x)) - 1e-12))


def distinct_value_bounds(d, k, ell, ell_prime):
    """Upper bounds on the number of distinct projected dimensions and ``S`` values.

    ``set_bound = min_{ell <= q <= k} C(d, q) - C(k, q) + 1`` and
    ``measure_bound = C(d + ell_prime - k, ell_prime)``.
    """
    if not (1 <= k <= d - 1 and 0 <= ell <= k and 0 <= ell_prime <= k):
        raise InvalidInputError("need 1 <= k <= d-1 and 0 <= ell, ell_prime <= k")
    set_bound = min(math.comb(d, q) - math.comb(k, q) + 1 for q in range(ell, k + 1))
    return set_bound, math.comb(d + ell_prime - k, ell_prime)


__all__ = [
    "CriterionReport",
    "orbit_span",
    "is_invariant",
    "algebra_irreducible",
    "planar_set_drop_criterion",
    "planar_measure_drop_criterion",
    "line_projection_dim",
    "d3_necessary_conditions",
    "antidiagonal_nonexact_criterion",
    "antidiagonal_ratios",
    "distinct_value_bounds",
    "ceil_level",
]
