"""Small dense linear algebra: singular values, the singular value function,
exterior powers, subspaces and projectors, row reduction and pivot positions.

Exterior powers use lexicographically ordered index sets: for a matrix with
``r`` rows and ``c`` columns, row ``a`` of ``exterior_power(A, k)`` corresponds
to ``itertools.combinations(range(r), k)[a]`` and likewise for columns.

Supported ambient dimensions are ``d <= 16``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DegenerateSubspaceError, InvalidInputError

MAX_DIM = 16
ORTHO_TOL = 1e-10
RREF_TOL = 1e-10


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D float array or raise InvalidInputError."""
    M = np.array(A, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def _square(A, name="matrix"):
    M = as_matrix(A, name)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {M.shape}")
    if M.shape[0] > MAX_DIM:
        raise InvalidInputError(f"dimension {M.shape[0]} exceeds the supported maximum {MAX_DIM}")
    return M


def singular_values(A):
    """Singular values of ``A`` in non-increasing order.

    Values below the numerical rank threshold ``max(shape) * eps * alpha_1``
    are returned as exact zeros.
    """
    M = as_matrix(A)
    if M.size == 0:
        return np.zeros(0)
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size and sv[0] > 0:
        sv[sv <= max(M.shape) * np.finfo(float).eps * sv[0]] = 0.0
    return sv


def svf(A, s):
    """Singular value function ``phi^s(A)``.

    For ``0 <= s < d`` this is ``alpha_1 ... alpha_j * alpha_{j+1}^(s-j)`` with
    ``j = floor(s)``; for ``s >= d`` it is ``|det A|^(s/d)``.
    """
    M = _square(A)
    if s < 0:
        raise InvalidInputError(f"s must be non-negative, got {s}")
    d = M.shape[0]
    if s >= d:
        return abs(float(np.linalg.det(M))) ** (s / d)
    sv = singular_values(M)
    j = int(math.floor(s))
    frac = s - j
    value = float(np.prod(sv[:j]))
    if frac > 0:
        value *= float(sv[j]) ** frac
    return value


def log_svf(A, s):
    """``log phi^s(A)``, with ``-inf`` for a vanishing value."""
    v = svf(A, s)
    return math.log(v) if v > 0 else -math.inf


def svf_dual_check(A, s):
    """Return ``(phi^s(A), phi^s(A^T))``; the two agree up to rounding."""
    M = _square(A)
    return svf(M, s), svf(M.T, s)


@lru_cache(maxsize=None)
def index_sets(n, k):
    """Lexicographically ordered ``k``-subsets of ``range(n)`` as an int array."""
    if k == 0:
        return np.zeros((1, 0), dtype=int)
    return np.array(list(combinations(range(n), k)), dtype=int).reshape(-1, k)


def exterior_power(A, k):
    """``k``-th exterior power (compound matrix) of ``A``.

    Entry ``(a, b)`` is the minor of ``A`` on rows ``index_sets(r, k)[a]`` and
    columns ``index_sets(c, k)[b]``. Leading batch axes are allowed.
    """
    M = np.asarray(A, dtype=float)
    if M.ndim < 2:
        raise InvalidInputError("exterior_power needs a matrix")
    r, c = M.shape[-2:]
    if not 1 <= k <= min(r, c):
        raise InvalidInputError(f"k={k} out of range 1..{min(r, c)}")
    if max(r, c) > MAX_DIM:
        raise InvalidInputError(f"dimension {max(r, c)} exceeds the supported maximum {MAX_DIM}")
    if k == 1:
        return M.copy()
    rows = index_sets(r, k)
    cols = index_sets(c, k)
    sub = M[..., rows[:, None, :, None], cols[None, :, None, :]]
    return np.linalg.det(sub)


def log_wedge_norms(A):
    """``[0, log||A^1||, ..., log||A^q||]`` for ``q = min(shape)``, via singular values."""
    sv = singular_values(A)
    with np.errstate(divide="ignore"):
        logs = np.log(sv)
    return np.concatenate([[0.0], np.cumsum(logs)])


def log_svf_from_wedge(L, s, d):
    """Evaluate ``log phi^s`` from log exterior-power norms.

    ``L[..., j]`` holds ``log ||A^{wedge j}||`` for ``j = 0..q`` (``L[..., 0] = 0``).
    Levels above ``q`` are treated as ``-inf`` (rank deficiency), so ``q < d`` is
    the projected case. ``d`` is the ambient dimension, used for ``s >= d``.
    """
    L = np.asarray(L, dtype=float)
    q = L.shape[-1] - 1
    if s >= d:
        if q < d:
            return np.full(L.shape[:-1], -np.inf)
        return (s / d) * L[..., d]
    j = int(math.floor(s))
    frac = s - j
    if j > q or (frac > 0 and j + 1 > q):
        return np.full(L.shape[:-1], -np.inf)
    if frac == 0:
        return L[..., j].copy()
    lo, hi = L[..., j], L[..., j + 1]
    with np.errstate(invalid="ignore"):
        out = lo + frac * (hi - lo)
    return np.where(np.isneginf(hi) | np.isneginf(lo), -np.inf, out)


def svf_via_wedge(A, s):
    """``phi^s(A) = ||A^k||^(k+1-s) * ||A^(k+1)||^(s-k)`` with ``k = floor(s)``."""
    M = _square(A)
    d = M.shape[0]
    if s < 0 or s > d:
        raise InvalidInputError(f"s must lie in [0, {d}], got {s}")
    k = int(math.floor(s))

    def norm_wedge(j):
        if j == 0:
            return 1.0
        return float(np.linalg.norm(exterior_power(M, j), 2))

    if k == d:
        return norm_wedge(d)
    lo = norm_wedge(k)
    if s == k:
        return lo
    return lo ** (k + 1 - s) * norm_wedge(k + 1) ** (s - k)


def orthonormalize(vectors, tol=ORTHO_TOL):
    """Modified Gram-Schmidt with one re-orthogonalisation pass.

    ``vectors`` holds candidate vectors as columns. A candidate is kept when its
    residual exceeds ``tol`` times its original norm. Returns a (possibly
    narrower) matrix with orthonormal columns.
    """
    V = np.array(vectors, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    basis = []
    for col in V.T:
        norm0 = np.linalg.norm(col)
        if norm0 == 0:
            continue
        v = col / norm0
        for _ in range(2):
            for q in basis:
                v = v - (q @ v) * q
        r = np.linalg.norm(v)
        if r > tol:
            basis.append(v / r)
    if not basis:
        return np.zeros((V.shape[0], 0))
    return np.column_stack(basis)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace of ``R^d`` stored through an orthonormal basis (columns)."""

    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        B = np.array(self.basis, dtype=float)
        if B.ndim != 2:
            raise InvalidInputError("basis must be a d x k matrix")
        d, k = B.shape
        if not 1 <= k <= d:
            raise InvalidInputError(f"subspace dimension {k} outside 1..{d}")
        if d > MAX_DIM:
            raise InvalidInputError(f"dimension {d} exceeds the supported maximum {MAX_DIM}")
        if not np.allclose(B.T @ B, np.eye(k), rtol=0, atol=1e-12):
            raise InvalidInputError("basis columns are not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @classmethod
    def span(cls, vectors, dim=None, tol=ORTHO_TOL):
        """Subspace spanned by the columns of ``vectors``.

        When ``dim`` is given, a rank below it raises DegenerateSubspaceError.
        """
        V = np.array(vectors, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        if not np.all(np.isfinite(V)):
            raise InvalidInputError("spanning vectors have non-finite entries")
        Q = orthonormalize(V, tol)
        if Q.shape[1] == 0 or (dim is not None and Q.shape[1] < dim):
            raise DegenerateSubspaceError(
                f"vectors span dimension {Q.shape[1]}, expected {dim if dim is not None else '>= 1'}"
            )
        return cls(Q)

    @classmethod
    def full(cls, d):
        return cls(np.eye(d))

    @classmethod
    def coordinate(cls, d, axes):
        """Span of the standard basis vectors ``e_i`` for 1-based ``axes``."""
        return cls(np.eye(d)[:, [a - 1 for a in axes]])

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    def is_full(self):
        return self.dim == self.ambient_dim

    def projector(self):
        return projector(self)


def projector(W):
    """Orthogonal projector ``P_W = B B^T`` onto ``W``."""
    B = W.basis
    return B @ B.T


def subspace_distance(V, U):
    """Operator-norm distance between the orthogonal projectors of ``V`` and ``U``."""
    if V.ambient_dim != U.ambient_dim:
        raise InvalidInputError("subspaces live in different ambient spaces")
    return float(np.linalg.norm(projector(V) - projector(U), 2))


def image_subspace(A, W, tol=ORTHO_TOL):
    """The subspace ``A(W)``; raises DegenerateSubspaceError on rank collapse."""
    M = _square(A)
    if M.shape[0] != W.ambient_dim:
        raise InvalidInputError("matrix and subspace dimensions differ")
    return Subspace.span(M @ W.basis, dim=W.dim, tol=tol)


def orthogonal_complement(W):
    """Orthogonal complement of ``W``; ``None`` when ``W`` is the whole space."""
    if W.is_full():
        return None
    u, _, _ = np.linalg.svd(W.basis, full_matrices=True)
    return Subspace(u[:, W.dim:])


def rref(M, tol=RREF_TOL):
    """Reduced row echelon form with partial pivoting.

    An entry qualifies as a pivot when its magnitude exceeds ``tol`` times the
    max-row-sum norm of the input. Returns ``(R, pivots)`` with 1-based pivot
    columns; a rank-deficient input yields fewer pivots and zero rows below.
    """
    R = as_matrix(M, "rref input").copy()
    rows, cols = R.shape
    scale = float(np.max(np.sum(np.abs(R), axis=1))) if R.size else 0.0
    threshold = tol * scale
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        i = r + int(np.argmax(np.abs(R[r:, c])))
        if abs(R[i, c]) <= threshold:
            R[r:, c] = 0.0
            continue
        if i != r:
            R[[r, i]] = R[[i, r]]
        R[r] /= R[r, c]
        for other in range(rows):
            if other != r and R[other, c] != 0:
                R[other] -= R[other, c] * R[r]
        R[r, c] = 1.0
        R[np.arange(rows) != r, c] = 0.0
        pivots.append(c + 1)
        r += 1
    R[r:] = 0.0
    R[np.abs(R) <= threshold] = 0.0
    return R, tuple(pivots)


def pivot_vector(W, basis, tol=RREF_TOL):
    """Pivot position vector of ``W`` relative to an ordered basis of ``R^d``.

    ``basis`` holds the ordered vectors ``v_1..v_d`` as columns. The rows of the
    coordinate matrix of ``W`` in that basis are row-reduced and the 1-based
    pivot columns returned.
    """
    V = _square(basis, "basis")
    if V.shape[0] != W.ambient_dim:
        raise InvalidInputError("basis and subspace dimensions differ")
    sv = np.linalg.svd(V, compute_uv=False)
    if sv[-1] <= ORTHO_TOL * sv[0]:
        raise InvalidInputError("ordered basis is degenerate")
    coords = np.linalg.solve(V, W.basis).T
    _, pivots = rref(coords, tol)
    if len(pivots) != W.dim:
        raise InvalidInputError("coordinate matrix lost rank during reduction")
    return pivots
