import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affdim.errors import DegenerateSubspaceError, InvalidInputError
from affdim.linalg import (
    Subspace,
    exterior_power,
    image_subspace,
    orthogonal_complement,
    pivot_vector,
    projector,
    rref,
    singular_values,
    subspace_distance,
    svf,
    svf_dual_check,
    svf_via_wedge,
)


def leibniz_det(M):
    """Determinant by the permutation expansion (independent of LAPACK)."""
    n = len(M)
    total = 0.0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1.0
        for i in range(n):
            prod *= M[i][perm[i]]
        total += (-1) ** inv * prod
    return total


def minors_oracle(A, k):
    rows = list(itertools.combinations(range(A.shape[0]), k))
    cols = list(itertools.combinations(range(A.shape[1]), k))
    return np.array([[leibniz_det(A[np.ix_(r, c)]) for c in cols] for r in rows])


def svf_oracle(A, s):
    """Singular value function from an eigen-decomposition of ``A^T A``."""
    d = A.shape[0]
    ev = np.sort(np.clip(np.linalg.eigvalsh(A.T @ A), 0, None))[::-1]
    a = np.sqrt(ev)
    if s >= d:
        return abs(np.prod(a)) ** (s / d)
    k = int(math.floor(s))
    out = float(np.prod(a[:k]))
    return out * a[k] ** (s - k) if s > k else out


matrices = st.integers(1, 5).flatmap(
    lambda d: st.lists(st.integers(-200, 200), min_size=d * d, max_size=d * d).map(lambda v: np.array(v, dtype=float).reshape(d, d) / 100)
)


# --- singular values and svf ---------------------------------------------------


def test_singular_values_examples():
    assert np.allclose(singular_values(np.eye(2)), [1, 1])
    assert np.allclose(singular_values(np.diag([0.5, 0.25])), [0.5, 0.25])
    sv = singular_values(np.diag([4 / 25, 0]))
    assert sv[0] == pytest.approx(4 / 25) and sv[1] == 0.0


def test_singular_values_rectangular_and_rejects_nonfinite():
    assert singular_values(np.ones((2, 3))).shape == (2,)
    with pytest.raises(InvalidInputError):
        singular_values(np.array([[np.nan, 0], [0, 1]]))


def test_svf_examples():
    A = np.diag([0.5, 0.25])
    assert svf(np.random.default_rng(0).normal(size=(3, 3)), 0) == 1.0
    assert svf(A, 1.5) == pytest.approx(0.25, rel=1e-14)
    assert svf(np.diag([4 / 25, 0]), 0.5) == pytest.approx(0.4, rel=1e-14)


def test_svf_zero_conventions():
    Z = np.diag([4 / 25, 0])
    assert svf(Z, 1.0) == pytest.approx(4 / 25)
    assert svf(Z, 1.3) == 0.0


def test_svf_determinant_branch_uses_absolute_value():
    A = np.array([[0, 0.5], [0.3, 0]])
    assert svf(A, 2) == pytest.approx(0.15)
    assert svf(A, 3) == pytest.approx(0.15**1.5)


def test_svf_rejects_negative_s():
    with pytest.raises(InvalidInputError):
        svf(np.eye(2), -0.1)


def test_svf_dual_examples():
    a, b = svf_dual_check(np.random.default_rng(1).normal(size=(3, 3)), 1.7)
    assert a == pytest.approx(b, rel=1e-10)
    assert svf_dual_check(np.eye(3), 2.2) == pytest.approx((1.0, 1.0))
    assert svf_dual_check(np.diag([0.5, 1 / 3]), 1) == pytest.approx((0.5, 0.5))


@settings(max_examples=150, deadline=None)
@given(matrices, st.floats(0, 1))
def test_svf_matches_eigen_oracle(A, frac):
    s = frac * A.shape[0]
    assert svf(A, s) == pytest.approx(svf_oracle(A, s), rel=1e-8, abs=1e-12)


# --- exterior powers -----------------------------------------------------------


def test_exterior_power_examples():
    A = np.array([[0.3, -0.2], [0.1, 0.5]])
    assert exterior_power(A, 2) == pytest.approx(np.array([[0.17]]))
    for k in range(1, 5):
        assert np.allclose(exterior_power(np.eye(4), k), np.eye(math.comb(4, k)))
    a, b, c = 0.2, 0.3, 0.7
    assert np.allclose(exterior_power(np.diag([a, b, c]), 2), np.diag([a * b, a * c, b * c]))


def test_exterior_power_rejects_bad_k():
    for k in (0, 4):
        with pytest.raises(InvalidInputError):
            exterior_power(np.eye(3), k)


def test_exterior_power_matches_minor_oracle(rng):
    for _ in range(20):
        r, c = rng.integers(2, 5, size=2)
        A = rng.normal(size=(r, c))
        for k in range(1, min(r, c) + 1):
            assert np.allclose(exterior_power(A, k), minors_oracle(A, k), atol=1e-12)


def test_exterior_power_transpose(rng):
    A = rng.normal(size=(4, 4))
    for k in range(1, 5):
        assert np.allclose(exterior_power(A.T, k), exterior_power(A, k).T, rtol=0, atol=1e-15)


def test_exterior_power_batched(rng):
    A = rng.normal(size=(3, 4, 4))
    W = exterior_power(A, 2)
    assert W.shape == (3, 6, 6)
    assert np.allclose(W[1], exterior_power(A[1], 2))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_cauchy_binet_and_norm(d, seed):
    g = np.random.default_rng(seed)
    A, B = g.normal(size=(2, d, d))
    sv = np.linalg.svd(A, compute_uv=False)
    for k in range(1, d + 1):
        assert np.allclose(exterior_power(A @ B, k), exterior_power(A, k) @ exterior_power(B, k), atol=1e-10)
        assert np.linalg.norm(exterior_power(A, k), 2) == pytest.approx(np.prod(sv[:k]), rel=1e-10)


# --- svf via wedge norms ---------------------------------------------------------


def test_svf_via_wedge_examples(rng):
    assert svf_via_wedge(np.diag([0.5, 0.25]), 1.5) == pytest.approx(0.25, rel=1e-12)
    assert svf_via_wedge(np.eye(2), 2.0) == pytest.approx(1.0)
    A = rng.normal(size=(3, 3))
    assert svf_via_wedge(A, 2.3) == pytest.approx(svf(A, 2.3), rel=1e-9)


def test_svf_via_wedge_rejects_s_above_d():
    with pytest.raises(InvalidInputError):
        svf_via_wedge(np.eye(2), 2.5)


# --- subspaces -------------------------------------------------------------------


def test_projector_examples():
    assert np.allclose(projector(Subspace.coordinate(2, [1])), np.diag([1, 0]))
    assert np.allclose(projector(Subspace.full(3)), np.eye(3))
    assert np.allclose(projector(Subspace.span([[1], [1]])), np.full((2, 2), 0.5))


def test_projector_idempotent_symmetric(rng):
    W = Subspace.span(rng.normal(size=(5, 2)))
    P = projector(W)
    assert np.allclose(P @ P, P, atol=1e-12) and np.allclose(P, P.T, atol=1e-12)


def test_subspace_validation():
    with pytest.raises(InvalidInputError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(DegenerateSubspaceError):
        Subspace.span([[1, 2], [2, 4]], dim=2)
    with pytest.raises(InvalidInputError):
        Subspace.span([[np.inf], [0]])


def test_image_subspace_examples():
    W = Subspace.coordinate(2, [1])
    assert subspace_distance(image_subspace(np.eye(2), W), W) < 1e-12
    assert subspace_distance(image_subspace(np.diag([2, 1]), W), W) < 1e-12
    rot = np.array([[0, -1], [1, 0]])
    assert subspace_distance(image_subspace(rot, W), Subspace.coordinate(2, [2])) < 1e-12


def test_image_subspace_rank_collapse():
    with pytest.raises(DegenerateSubspaceError):
        image_subspace(np.diag([0.0, 1.0]), Subspace.coordinate(2, [1]))


def test_orthogonal_complement():
    W = Subspace.span([[1], [1], [0]])
    C = orthogonal_complement(W)
    assert C.dim == 2 and np.allclose(W.basis.T @ C.basis, 0)
    assert orthogonal_complement(Subspace.full(2)) is None


# --- singular value lemmas with projections --------------------------------------


def test_projected_svf_bounds(rng):
    for _ in range(100):
        d = int(rng.integers(2, 6))
        k = int(rng.integers(1, d))
        A = rng.normal(size=(d, d))
        W = Subspace.span(rng.normal(size=(d, k)))
        P = projector(W)
        amin = np.linalg.svd(A, compute_uv=False)[-1]
        s = rng.uniform(0, k)
        val = svf(A @ P, s)
        assert amin**s <= val * (1 + 1e-9)
        assert val <= svf(A, s) * (1 + 1e-9)
        assert svf(A @ P, k + rng.uniform(0.01, d - k)) == 0.0


# --- rref and pivots -------------------------------------------------------------


def test_rref_examples():
    R, piv = rref(np.array([[0.0, 1], [1, 0]]))
    assert np.allclose(R, np.eye(2)) and piv == (1, 2)
    R, piv = rref(np.array([[1.0, 1]]))
    assert np.allclose(R, [[1, 1]]) and piv == (1,)
    R, piv = rref(np.array([[0.0, 2, 0], [0, 0, 3]]))
    assert np.allclose(R, [[0, 1, 0], [0, 0, 1]]) and piv == (2, 3)


def test_rref_rank_deficient():
    _, piv = rref(np.array([[1.0, 2, 3], [2, 4, 6]]))
    assert piv == (1,)


def test_pivot_vector_examples():
    std2, std3 = np.eye(2), np.eye(3)
    assert pivot_vector(Subspace.coordinate(2, [2]), std2) == (2,)
    assert pivot_vector(Subspace.span([[1], [1]]), std2) == (1,)
    assert pivot_vector(Subspace.coordinate(3, [2, 3]), std3) == (2, 3)


def test_pivot_vector_basis_invariance(rng):
    for _ in range(30):
        d = int(rng.integers(2, 6))
        k = int(rng.integers(1, d + 1))
        W = Subspace.span(rng.normal(size=(d, k)))
        Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
        W2 = Subspace(W.basis @ Q)
        V = rng.normal(size=(d, d))
        assert pivot_vector(W, V) == pivot_vector(W2, V)


def test_pivot_vector_rejects_degenerate_basis():
    with pytest.raises(InvalidInputError):
        pivot_vector(Subspace.coordinate(2, [1]), np.array([[1.0, 2], [2, 4]]))


def test_rref_exact_on_rationals(rng):
    """Pivots agree with exact fraction arithmetic on small integer matrices."""
    for _ in range(50):
        M = rng.integers(-3, 4, size=(3, 5)).astype(float)
        M[:, rng.integers(0, 5)] = 0
        exact = [[Fraction(int(x)) for x in row] for row in M]
        piv, r = [], 0
        for c in range(5):
            p = next((i for i in range(r, 3) if exact[i][c] != 0), None)
            if p is None:
                continue
            exact[r], exact[p] = exact[p], exact[r]
            for i in range(3):
                if i != r and exact[i][c] != 0:
                    f = exact[i][c] / exact[r][c]
                    exact[i] = [a - f * b for a, b in zip(exact[i], exact[r])]
            piv.append(c + 1)
            r += 1
        assert rref(M)[1] == tuple(piv)
