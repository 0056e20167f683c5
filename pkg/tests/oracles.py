"""Independent oracles used by the tests.

Nothing here goes through exterior powers or K-levels: the summand index
``|Z^s / (Gamma_k + Sigma)|`` is computed from determinants of bordered
matrices ``[V | b_S]`` (a gcd of maximal minors), and small cases are
cross-checked with plain lattice sums.
"""
from __future__ import annotations

from itertools import combinations, permutations
from math import gcd

import numpy as np

from bcrecon.exactla import det, hnf_basis, lattice_index, lattice_sum, standard_lattice


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def row_minors(V: np.ndarray) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All d x d minors of the (n, d, s) stack ``V`` (rows I of the s x d matrix
    whose columns are the basis vectors), by the Leibniz formula."""
    n, d, s = V.shape
    rows = list(combinations(range(s), d))
    out = np.zeros((n, len(rows)), dtype=np.int64)
    perms = [(p, _perm_sign(p)) for p in permutations(range(d))]
    for c, I in enumerate(rows):
        acc = np.zeros(n, dtype=np.int64)
        for p, sg in perms:
            term = np.ones(n, dtype=np.int64)
            for col in range(d):
                term = term * V[:, col, I[p[col]]]
            acc += sg * term
        out[:, c] = acc
    return rows, out


def _vp_capped(a: np.ndarray, p: int, cap: int) -> np.ndarray:
    out = np.zeros(a.shape, dtype=np.int64)
    a = a.copy()
    for _ in range(cap):
        m = (a % p == 0) & (out < cap)
        if not m.any():
            break
        out += m
        a = np.where(m, a // p, a)
    return np.minimum(out, cap)


def summand_index_exponents(V: np.ndarray, level_basis: list[list[int]], p: int, e: int) -> np.ndarray:
    """``v_p |Z^s / (Gamma + Sigma)|`` for every summand basis in ``V``.

    ``level_basis`` is an integral basis of Gamma with ``[Z^s : Gamma] = p^e``.
    The index is the gcd over (s-d)-subsets S of ``|det [V | b_S]|``, expanded
    along the first d columns (Laplace); it divides ``p^e``, so every
    determinant is only needed modulo ``p^e``.
    """
    n, d, s = V.shape
    if d == s:
        return np.zeros(n, dtype=np.int64)
    M = p ** e
    if e == 0:
        return np.zeros(n, dtype=np.int64)
    rows, minors = row_minors(V)
    B = [list(map(int, b)) for b in level_basis]  # s vectors
    best = np.full(n, e, dtype=np.int64)
    base_sign = sum(range(d))
    for S in combinations(range(s), s - d):
        acc = np.zeros(n, dtype=np.int64)
        for c, I in enumerate(rows):
            comp = [i for i in range(s) if i not in I]
            sub = [[B[j][i] for j in S] for i in comp]
            m = det(sub) % M
            if m == 0:
                continue
            sign = -1 if (sum(I) + base_sign) % 2 else 1
            term = (minors[:, c] % M) * m % M if M < 2 ** 31 else _mulmod(minors[:, c], m, M)
            acc = (acc + sign * term) % M
        best = np.minimum(best, _vp_capped(acc, p, e))
    return best


def _mulmod(x: np.ndarray, m: int, M: int) -> np.ndarray:
    # x is small (a minor of a [-2,2] matrix); m < M < 2^62 / 64
    return (x.astype(object) * m % M).astype(np.int64) if M > 2 ** 56 else (x * m) % M


def stabilized(exps: list[np.ndarray], start: int):
    """Finite value, or -1 for an infinite one, from the exponent sequence on
    the regular segment ``start..end``.

    On that segment the sequence grows strictly until it stops and is constant
    afterwards; the value is finite when the last two entries agree.
    """
    seq = np.array(exps[start:])
    if len(seq) < 2:
        raise AssertionError("regular segment too short")
    steps = seq[1:] - seq[:-1]
    if np.any(steps < 0):
        raise AssertionError("summand index decreases on the regular segment")
    stopped = np.maximum.accumulate(steps == 0, axis=0)
    if np.any(stopped & (steps != 0)):
        raise AssertionError("summand index grows again after stabilizing")
    return np.where(steps[-1] == 0, seq[-1], -1)


def summand_index_direct(basis, level, s: int) -> int:
    """``[Z^s : Gamma + Sigma]`` via an explicit lattice sum."""
    L = lattice_sum(level, hnf_basis(basis, s))
    return lattice_index(L, standard_lattice(s))


def brute_snf_diagonal(M) -> list[int]:
    """Invariant factors from gcds of k x k minors: d_1...d_k = D_k / D_{k-1}."""
    r, c = len(M), len(M[0])
    out, prev = [], 1
    for k in range(1, min(r, c) + 1):
        g = 0
        for I in combinations(range(r), k):
            for J in combinations(range(c), k):
                g = gcd(g, det([[M[i][j] for j in J] for i in I]))
        if g == 0:
            break
        out.append(g // prev)
        prev = g
    return out


# ------------------------------------------------------- imaginary quadratic

def reduced_forms(D: int) -> list[tuple[int, int, int]]:
    """Reduced positive definite forms ax^2 + bxy + cy^2 of discriminant D < 0."""
    out = []
    a = 1
    while 3 * a * a <= -D:
        for b in range(-a + 1, a + 1):
            if (b * b - D) % (4 * a) == 0:
                c = (b * b - D) // (4 * a)
                if c >= a and not (b < 0 and a == c):
                    out.append((a, b, c))
        a += 1
    return out


def sqrt_minus5_mod(modulus: int, residue: int) -> int:
    """Root of x^2 = -5 modulo a power of 3 or 7, lifted from ``residue``."""
    p = next(q for q in (3, 7) if modulus % q == 0)
    r, m = residue, p
    while m < modulus:
        m *= p
        r = next(y for y in range(r, m, m // p) if (y * y + 5) % m == 0)
    return r


def _v(n: int, p: int) -> int:
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def principal_vectors_qsqrt_m5(bound: int, seven: int):
    """Elements ``u + v sqrt(-5)`` whose ideal is a product of p2, p3 (the prime
    with sqrt(-5) = 1 mod 3) and p5; returns (exponents, residue mod 7^seven)
    pairs, using the prime above 7 with sqrt(-5) = 3."""
    out = []
    t = sqrt_minus5_mod(7 ** seven, 3)
    for u in range(-bound, bound + 1):
        for v in range(-bound, bound + 1):
            N = u * u + 5 * v * v
            if N == 0 or N % 7 == 0:
                continue
            a, b, c = _v(N, 2), _v(N, 3), _v(N, 5)
            if 2 ** a * 3 ** b * 5 ** c != N:
                continue
            if b and (u + v * sqrt_minus5_mod(3 ** b, 1)) % 3 ** b:
                continue  # some of the 3-part sits on the other prime above 3
            out.append(((a, b, c), (u + v * t) % 7 ** seven))
    return out
