"""Matrix arithmetic over GF(p) with numpy int64 arrays."""

from __future__ import annotations

import itertools
from typing import Iterator

import numpy as np

from .exceptions import OridtError


class SingularMatrixError(OridtError, ValueError):
    """Matrix not invertible mod p."""


class InconsistentSystemError(OridtError, ValueError):
    """No solution to a linear system over GF(p)."""


def mod_p(A: np.ndarray, p: int) -> np.ndarray:
    return np.asarray(np.asarray(A) % p, dtype=np.int64)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def zeros(m: int, n: int) -> np.ndarray:
    return np.zeros((m, n), dtype=np.int64)


def inv_mod_scalar(a: int, p: int) -> int:
    a = int(a) % p
    if a == 0:
        raise SingularMatrixError("0 has no inverse mod p")
    return pow(a, p - 2, p)


def rref_mod(aug: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """RREF over GF(p). Returns (reduced matrix, pivot columns)."""
    A = mod_p(np.array(aug, dtype=np.int64, copy=True), p)
    m, n = A.shape
    r = c = 0
    piv_cols: list[int] = []
    while r < m and c < n:
        nonzero = np.nonzero(A[r:, c])[0]
        if nonzero.size == 0:
            c += 1
            continue
        piv = r + int(nonzero[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r, :] = mod_p(A[r, :] * inv_mod_scalar(A[r, c], p), p)
        for i in range(m):
            if i != r and A[i, c]:
                A[i, :] = mod_p(A[i, :] - A[i, c] * A[r, :], p)
        piv_cols.append(c)
        r += 1
        c += 1
    return A, piv_cols


def rank_mod(A: np.ndarray, p: int) -> int:
    if A.size == 0:
        return 0
    _, pivots = rref_mod(A, p)
    return len(pivots)


def nullspace_mod(A: np.ndarray, p: int) -> np.ndarray:
    """Right nullspace basis of A over GF(p); columns form a basis."""
    A = mod_p(A, p)
    m, n = A.shape
    if m == 0:
        return identity(n)
    R, piv_cols = rref_mod(A, p)
    free = [j for j in range(n) if j not in set(piv_cols)]
    basis = np.zeros((n, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for row, pc in enumerate(piv_cols):
            basis[pc, k] = (-R[row, f]) % p
    return basis


def solve_mod(A: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """One solution of A x = b over GF(p), free variables set to 0."""
    A = mod_p(A, p)
    m, n = A.shape
    aug = np.concatenate([A, mod_p(b, p).reshape(m, -1)], axis=1)
    R, piv_cols = rref_mod(aug, p)
    if piv_cols and piv_cols[-1] >= n:
        raise InconsistentSystemError("no solution to linear system over GF(p)")
    x = np.zeros((n, aug.shape[1] - n), dtype=np.int64)
    for row, pc in enumerate(piv_cols):
        x[pc] = R[row, n:]
    return x


def matmul_mod(A: np.ndarray, B: np.ndarray, p: int) -> np.ndarray:
    return mod_p(A @ B, p)


def inv_mod_mat(A: np.ndarray, p: int) -> np.ndarray:
    """Gauss-Jordan inverse over GF(p)."""
    n = A.shape[0]
    if n == 0:
        return identity(0)
    aug = np.concatenate([mod_p(A, p), identity(n)], axis=1)
    R, _ = rref_mod(aug, p)
    if not np.array_equal(R[:, :n], identity(n)):
        raise SingularMatrixError("matrix not invertible mod p")
    return mod_p(R[:, n:], p)


def det_mod(A: np.ndarray, p: int) -> int:
    """Determinant over GF(p) by elimination."""
    A = mod_p(np.array(A, dtype=np.int64, copy=True), p)
    n = A.shape[0]
    det = 1
    for c in range(n):
        nonzero = np.nonzero(A[c:, c])[0]
        if nonzero.size == 0:
            return 0
        piv = c + int(nonzero[0])
        if piv != c:
            A[[c, piv]] = A[[piv, c]]
            det = -det
        det = det * int(A[c, c]) % p
        inv = inv_mod_scalar(A[c, c], p)
        for i in range(c + 1, n):
            if A[i, c]:
                A[i, :] = mod_p(A[i, :] - A[i, c] * inv * A[c, :], p)
    return det % p


def is_square_mod(a: int, p: int) -> bool:
    """Euler's criterion; 0 counts as a square."""
    a %= p
    return a == 0 or pow(a, (p - 1) // 2, p) == 1


def nonresidue(p: int) -> int:
    return next(a for a in range(2, p) if not is_square_mod(a, p))


def omega_matrix(n: int, p: int) -> np.ndarray:
    """Standard symplectic form [[0, I], [-I, 0]] of size 2n."""
    Id = identity(n)
    top = np.concatenate([zeros(n, n), Id], axis=1)
    bot = np.concatenate([mod_p(-Id, p), zeros(n, n)], axis=1)
    return np.concatenate([top, bot], axis=0)


def preserves_form(g: np.ndarray, J: np.ndarray, p: int) -> bool:
    return np.array_equal(mod_p(g.T @ J @ g, p), mod_p(J, p))


def all_matrices(m: int, n: int, p: int) -> Iterator[np.ndarray]:
    """Every m x n matrix over GF(p), in lexicographic order of entries."""
    for entries in itertools.product(range(p), repeat=m * n):
        yield np.array(entries, dtype=np.int64).reshape(m, n)


def invertible_matrices(n: int, p: int) -> Iterator[np.ndarray]:
    for g in all_matrices(n, n, p):
        if det_mod(g, p):
            yield g


def count_subspaces(n: int, k: int, p: int) -> int:
    """Gaussian binomial [n choose k]_p."""
    num = den = 1
    for i in range(k):
        num *= p ** (n - i) - 1
        den *= p ** (i + 1) - 1
    return num // den


def subspaces(n: int, k: int, p: int) -> Iterator[np.ndarray]:
    """Every k-dimensional subspace of GF(p)^n as a k x n RREF basis.

    Pivot positions run over k-combinations; the entries right of each pivot
    in non-pivot columns are free.
    """
    if k == 0:
        yield zeros(0, n)
        return
    for pivots in itertools.combinations(range(n), k):
        free = [(i, j) for i, pc in enumerate(pivots) for j in range(pc + 1, n) if j not in pivots]
        for values in itertools.product(range(p), repeat=len(free)):
            B = zeros(k, n)
            for i, pc in enumerate(pivots):
                B[i, pc] = 1
            for (i, j), x in zip(free, values):
                B[i, j] = x
            yield B


def contains(B: np.ndarray, W: np.ndarray, p: int) -> bool:
    """True if every row of W lies in the row span of B."""
    if W.shape[0] == 0:
        return True
    if B.shape[0] == 0:
        return not W.any()
    return rank_mod(np.concatenate([B, W], axis=0), p) == rank_mod(B, p)
