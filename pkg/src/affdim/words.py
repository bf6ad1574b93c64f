"""Words over ``{1..m}``, matrix tuples and enumeration of the products ``T_I``."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as iproduct

import numpy as np

from .errors import InvalidInputError, ResourceLimitError
from .linalg import MAX_DIM, exterior_power

DEFAULT_BUDGET = 10**8


def visit_budget():
    """Word-visit cap, overridable through ``AFFDIM_BUDGET``."""
    raw = os.environ.get("AFFDIM_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        return int(float(raw))
    except ValueError as exc:
        raise InvalidInputError(f"AFFDIM_BUDGET must be numeric, got {raw!r}") from exc


def check_budget(m, n, budget=None, what="word visits"):
    cap = visit_budget() if budget is None else budget
    count = m**n
    if count > cap:
        raise ResourceLimitError(count, cap, what)
    return count


@dataclass(frozen=True)
class Word:
    """A finite word with 1-based symbols; the empty word is allowed."""

    symbols: tuple = ()

    def __post_init__(self):
        syms = tuple(int(x) for x in self.symbols)
        if any(x < 1 for x in syms):
            raise InvalidInputError(f"word symbols must be >= 1, got {syms}")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def parse(cls, text):
        """Parse ``"1313"`` (single digits) or ``"1 3 12"`` (whitespace separated)."""
        text = text.strip()
        if not text:
            return cls(())
        if any(ch.isspace() for ch in text) or "," in text:
            return cls(tuple(int(t) for t in text.replace(",", " ").split()))
        return cls(tuple(int(ch) for ch in text))

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __add__(self, other):
        return Word(self.symbols + as_word(other).symbols)

    def __str__(self):
        if all(x < 10 for x in self.symbols):
            return "".join(str(x) for x in self.symbols)
        return " ".join(str(x) for x in self.symbols)

    @property
    def indices(self):
        """0-based symbol array."""
        return np.asarray(self.symbols, dtype=np.int64) - 1

    def check_alphabet(self, m):
        if any(x > m for x in self.symbols):
            raise InvalidInputError(f"word {self} uses symbols outside 1..{m}")
        return self


def as_word(w):
    if isinstance(w, Word):
        return w
    if isinstance(w, str):
        return Word.parse(w)
    if isinstance(w, np.ndarray):
        return Word(tuple(int(x) for x in w.ravel()))
    return Word(tuple(w))


@dataclass(frozen=True, eq=False)
class MatrixTuple:
    """Tuple ``(T_1, ..., T_m)`` of invertible contracting ``d x d`` matrices."""

    matrices: np.ndarray = field(repr=False)

    def __post_init__(self):
        A = np.array(self.matrices, dtype=float)
        if A.ndim != 3 or A.shape[1] != A.shape[2]:
            raise InvalidInputError(f"expected an (m, d, d) array of matrices, got shape {A.shape}")
        if A.shape[0] < 1:
            raise InvalidInputError("a tuple needs at least one matrix")
        if A.shape[1] > MAX_DIM:
            raise InvalidInputError(f"dimension {A.shape[1]} exceeds the supported maximum {MAX_DIM}")
        if not np.all(np.isfinite(A)):
            raise InvalidInputError("matrix entries must be finite")
        sv = np.linalg.svd(A, compute_uv=False)
        for i, s in enumerate(sv):
            if not s[0] < 1:
                raise InvalidInputError(f"T_{i + 1} is not contracting (norm {s[0]:.6g})")
            if not s[-1] > 0:
                raise InvalidInputError(f"T_{i + 1} is singular")
        A.setflags(write=False)
        object.__setattr__(self, "matrices", A)
        object.__setattr__(self, "_sv", sv)

    @property
    def m(self):
        return self.matrices.shape[0]

    @property
    def d(self):
        return self.matrices.shape[1]

    @property
    def norms(self):
        return self._sv[:, 0].copy()

    @property
    def min_singular_values(self):
        return self._sv[:, -1].copy()

    @property
    def alpha_plus(self):
        """Largest operator norm among the letters."""
        return float(self._sv[:, 0].max())

    @property
    def alpha_minus(self):
        """Smallest least singular value among the letters."""
        return float(self._sv[:, -1].min())

    @property
    def transversal(self):
        """``max_{i != j} (||T_i|| + ||T_j||) < 1`` (vacuous for a single map)."""
        if self.m < 2:
            return True
        top = np.sort(self._sv[:, 0])[-2:]
        return bool(top.sum() < 1)

    @property
    def transposes(self):
        return np.ascontiguousarray(np.transpose(self.matrices, (0, 2, 1)))

    @cached_property
    def _wedges(self):
        return {}

    def wedge(self, j):
        """Stack of ``T_i^{wedge j}``, shape ``(m, C(d,j), C(d,j))``."""
        if j not in self._wedges:
            W = exterior_power(self.matrices, j)
            W.setflags(write=False)
            self._wedges[j] = W
        return self._wedges[j]

    def restricted(self, basis):
        """Matrices of ``T_i^*`` restricted to an invariant subspace with orthonormal ``basis``."""
        Q = np.asarray(basis, dtype=float)
        return np.einsum("ji,mjk,kl->mil", Q, self.transposes, Q)


def word_product(T, word):
    """``T_I = T_{i_1} ... T_{i_n}``; the empty word gives the identity."""
    w = as_word(word).check_alphabet(T.m)
    P = np.eye(T.d)
    for i in w.indices:
        P = P @ T.matrices[i]
    return P


def fold_words(T, n, visit, initial=None, budget=None):
    """Depth-first fold over all ``I`` in ``Sigma_n`` in lexicographic order.

    ``visit(acc, word, T_I)`` returns the new accumulator. The running product is
    kept on an explicit stack, one multiply per visited node.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    check_budget(T.m, n, budget)
    acc = initial
    m = T.m
    mats = T.matrices
    stack = [np.eye(T.d)]
    word = []
    # each frame: next letter to try at this depth
    nxt = [0]
    while nxt:
        depth = len(nxt) - 1
        i = nxt[-1]
        if i == m:
            nxt.pop()
            stack.pop()
            if word:
                word.pop()
            continue
        nxt[-1] += 1
        prod = stack[-1] @ mats[i]
        if depth + 1 == n:
            acc = visit(acc, Word(tuple(x + 1 for x in word) + (i + 1,)), prod)
        else:
            stack.append(prod)
            word.append(i)
            nxt.append(0)
    return acc


def all_words(m, n):
    """All words of length ``n`` (lexicographic) as a 0-based int array."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(iproduct(range(m), repeat=n)), dtype=np.int64)


def words_up_to(m, length):
    """Words of length ``0..length`` in shortlex order, as tuples of 0-based letters."""
    out = [()]
    level = [()]
    for _ in range(length):
        level = [w + (i,) for w in level for i in range(m)]
        out.extend(level)
    return out


def _chain_products(letters, length):
    """Products ``A_{i_1} ... A_{i_length}`` for all words, lexicographic."""
    m, D, _ = letters.shape
    prods = np.broadcast_to(np.eye(D), (1, D, D)).copy()
    for _ in range(length):
        prods = np.matmul(prods[:, None], letters[None]).reshape(-1, D, D)
    return prods


def log_norm_blocks(channels, m, n, block_size=4096, budget=None):
    """Stream ``log || L_c A_c[i_1] ... A_c[i_n] ||_2`` over all words of length ``n``.

    ``channels`` is a list of ``(L, A)`` with ``L`` an ``a x D`` left factor and
    ``A`` an ``(m, D, D)`` letter stack. Yields arrays of shape ``(count, C)`` in
    lexicographic word order. Prefixes are walked depth first with rescaling;
    the trailing letters are handled as one vectorised block.
    """
    check_budget(m, n, budget)
    tail = max(0, min(n, int(math.floor(math.log(block_size) / math.log(m))) if m > 1 else n))
    head = n - tail
    suffix = [_chain_products(np.asarray(A, dtype=float), tail) for _, A in channels]

    def leaf(prefixes, logscales):
        cols = []
        for c, (P, S) in enumerate(zip(prefixes, suffix)):
            block = np.matmul(P[None], S)
            if block.shape[1] == 1:
                norms = np.linalg.norm(block[:, 0, :], axis=1)
            else:
                norms = np.linalg.norm(block, ord=2, axis=(1, 2))
            with np.errstate(divide="ignore"):
                cols.append(logscales[c] + np.log(norms))
        return np.column_stack(cols)

    start = [np.array(L, dtype=float) for L, _ in channels]
    if head == 0:
        yield leaf(start, [0.0] * len(channels))
        return

    stack = [(start, [0.0] * len(channels))]
    nxt = [0]
    while nxt:
        i = nxt[-1]
        if i == m:
            nxt.pop()
            stack.pop()
            continue
        nxt[-1] += 1
        prefixes, scales = stack[-1]
        new_p, new_s = [], []
        for c, (_, A) in enumerate(channels):
            P = prefixes[c] @ A[i]
            mx = float(np.max(np.abs(P)))
            if mx > 0:
                P = P / mx
                new_s.append(scales[c] + math.log(mx))
            else:
                new_s.append(-math.inf)
            new_p.append(P)
        if len(nxt) == head:
            yield leaf(new_p, new_s)
        else:
            stack.append((new_p, new_s))
            nxt.append(0)
