"""Exact integer and rational linear algebra.

Everything here works with Python integers and ``fractions.Fraction``.
Lattices are stored in a canonical Hermite form so that equality of
lattices is equality of the dataclass.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

IntMatrix = list[list[int]]


class LatticeError(ValueError):
    pass


class NotSublattice(LatticeError):
    pass


class InfiniteIndex(LatticeError):
    pass


class NotFullRank(LatticeError):
    pass


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(M: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*M)]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def matvec(A: Sequence[Sequence], v: Sequence) -> list:
    return [sum(a * b for a, b in zip(row, v)) for row in A]


def det(M: Sequence[Sequence[int]]) -> int:
    """Bareiss fraction-free determinant of a square integer matrix."""
    n = len(M)
    if n == 0:
        return 1
    A = [list(r) for r in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def inverse(M: Sequence[Sequence]) -> list[list[Fraction]]:
    """Inverse of a square rational matrix by Gauss-Jordan elimination."""
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(M)]
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c] != 0), None)
        if piv is None:
            raise NotFullRank("singular matrix")
        A[c], A[piv] = A[piv], A[c]
        inv = 1 / A[c][c]
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


# ---------------------------------------------------------------- normal forms

def _echelon(rows: Sequence[Sequence[int]], ncols: int, transform: bool = False):
    """Row Hermite form of an integer matrix.

    Returns ``(H, T, rank)`` with ``T`` unimodular and ``T * rows = H``. The first
    ``rank`` rows of ``H`` are the canonical basis: pivots positive and strictly
    moving right, entries above a pivot reduced into ``[0, pivot)``; the
    remaining rows are zero.
    """
    A = [list(r) for r in rows]
    m = len(A)
    T = identity(m) if transform else None
    r = 0
    for c in range(ncols):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if A[i][c] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(A[i][c]))
            if i0 != r:
                A[r], A[i0] = A[i0], A[r]
                if T is not None:
                    T[r], T[i0] = T[i0], T[r]
            clean = True
            pr, pv = A[r], A[r][c]
            for i in range(r + 1, m):
                if A[i][c]:
                    q = A[i][c] // pv
                    A[i] = [x - q * y for x, y in zip(A[i], pr)]
                    if T is not None:
                        T[i] = [x - q * y for x, y in zip(T[i], T[r])]
                    if A[i][c]:
                        clean = False
            if clean:
                break
        if A[r][c] == 0:
            continue
        if A[r][c] < 0:
            A[r] = [-x for x in A[r]]
            if T is not None:
                T[r] = [-x for x in T[r]]
        pv = A[r][c]
        for i in range(r):
            q = A[i][c] // pv
            if q:
                A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                if T is not None:
                    T[i] = [x - q * y for x, y in zip(T[i], T[r])]
        r += 1
    return A, T, r


def hnf_rows(rows: Sequence[Sequence[int]], ncols: int) -> list[tuple[int, ...]]:
    """Canonical basis (as rows) of the integer row lattice of ``rows``."""
    H, _, r = _echelon(rows, ncols)
    return [tuple(row) for row in H[:r]]


def integer_kernel(M: Sequence[Sequence[int]], ncols: int | None = None) -> list[list[int]]:
    """Basis of ``{x in Z^n : M x = 0}``, returned as a list of vectors."""
    if ncols is None:
        ncols = len(M[0]) if M else 0
    if not M:
        return identity(ncols)
    cols = transpose(M)  # each row of cols is a column of M
    _, T, r = _echelon(cols, len(M), transform=True)
    return [list(t) for t in T[r:]]


def snf(M: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """Smith normal form: returns ``(U, D, V)`` with ``U M V = D``.

    Elementary reduction with the smallest nonzero entry as pivot.
    """
    A = [list(r) for r in M]
    m = len(A)
    n = len(A[0]) if m else 0
    U, V = identity(m), identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, q):  # row_dst -= q * row_src
        A[dst] = [x - q * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x - q * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, q):  # col_dst -= q * col_src
        for row in A:
            row[dst] -= q * row[src]
        for row in V:
            row[dst] -= q * row[src]

    for t in range(min(m, n)):
        while True:
            best = None
            for i in range(t, m):
                for j in range(t, n):
                    if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                return U, A, V
            swap_rows(t, best[0])
            swap_cols(t, best[1])
            p = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, A[i][t] // p)
                    dirty = dirty or A[i][t] != 0
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, A[t][j] // p)
                    dirty = dirty or A[t][j] != 0
            if dirty:
                continue
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                        if A[i][j] % p), None)
            if bad is None:
                break
            # bring the offending row into row t; the next pass shrinks the pivot
            add_row(t, bad[0], -1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
    return U, A, V


def invariant_factors(M: Sequence[Sequence[int]]) -> list[int]:
    """Diagonal of the Smith form, zeros included, in divisibility order."""
    _, D, _ = snf(M)
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0))]


# ------------------------------------------------------------------- lattices

def _as_fraction_vector(v: Iterable) -> list[Fraction]:
    return [Fraction(x) for x in v]


@dataclass(frozen=True)
class Lattice:
    """A subgroup of Q^s given by a canonical basis.

    The lattice is ``(1/denominator) * span_Z(columns)`` where ``columns``
    is the row Hermite basis of the integer lattice (each entry of ``columns``
    is one basis vector) and ``denominator`` is as small as possible.
    """

    ambient_rank: int
    denominator: int
    columns: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.columns)

    @property
    def is_full_rank(self) -> bool:
        return self.rank == self.ambient_rank

    def basis(self) -> list[list[Fraction]]:
        d = self.denominator
        return [[Fraction(x, d) for x in col] for col in self.columns]

    def coordinates(self, v: Sequence) -> list[Fraction] | None:
        """Rational coordinates of ``v`` in the stored basis, or None if ``v``
        is outside the rational span."""
        t = [Fraction(x) * self.denominator for x in v]
        coeffs = []
        for col in self.columns:
            piv = next(i for i, x in enumerate(col) if x)
            c = t[piv] / col[piv]
            coeffs.append(c)
            if c:
                t = [a - c * b for a, b in zip(t, col)]
        if any(t):
            return None
        return coeffs

    def contains(self, v: Sequence) -> bool:
        c = self.coordinates(v)
        return c is not None and all(x.denominator == 1 for x in c)

    def issubset(self, other: "Lattice") -> bool:
        return all(other.contains(b) for b in self.basis())

    def scale(self, q) -> "Lattice":
        q = Fraction(q)
        if q == 0:
            return zero_lattice(self.ambient_rank)
        return _canonical(self.ambient_rank, [list(c) for c in self.columns],
                          self.denominator * q.denominator, q.numerator)

    def to_dict(self) -> dict:
        return {"ambient_rank": self.ambient_rank, "denominator": self.denominator,
                "columns": [list(c) for c in self.columns]}

    @classmethod
    def from_dict(cls, data: dict) -> "Lattice":
        s = int(data["ambient_rank"])
        cols = [[int(x) for x in c] for c in data["columns"]]
        if any(len(c) != s for c in cols):
            raise LatticeError("column length does not match ambient_rank")
        return _canonical(s, cols, int(data["denominator"]))


def _canonical(s: int, int_rows: list[list[int]], denominator: int, scale: int = 1) -> Lattice:
    if denominator <= 0:
        raise LatticeError("denominator must be positive")
    if scale != 1:
        int_rows = [[scale * x for x in r] for r in int_rows]
    rows = hnf_rows(int_rows, s) if int_rows else []
    if not rows:
        return Lattice(s, 1, ())
    g = 0
    for r in rows:
        for x in r:
            g = gcd(g, x)
    g = gcd(g, denominator)
    if g > 1:
        rows = [tuple(x // g for x in r) for r in rows]
        denominator //= g
    return Lattice(s, denominator, tuple(rows))


def zero_lattice(s: int) -> Lattice:
    return Lattice(s, 1, ())


def standard_lattice(s: int) -> Lattice:
    return Lattice(s, 1, tuple(tuple(int(i == j) for j in range(s)) for i in range(s)))


def hnf_basis(generators: Iterable[Sequence], ambient_rank: int) -> Lattice:
    """Lattice generated by rational vectors, in canonical form."""
    vecs = [_as_fraction_vector(v) for v in generators]
    for v in vecs:
        if len(v) != ambient_rank:
            raise LatticeError("generator length does not match ambient_rank")
    if not vecs:
        return zero_lattice(ambient_rank)
    D = 1
    for v in vecs:
        for x in v:
            D = lcm(D, x.denominator)
    rows = [[int(x * D) for x in v] for v in vecs]
    return _canonical(ambient_rank, rows, D)


def lattice_from_int_columns(columns: Iterable[Sequence[int]], ambient_rank: int,
                             denominator: int = 1) -> Lattice:
    return _canonical(ambient_rank, [list(c) for c in columns], denominator)


def lattice_sum(L1: Lattice, L2: Lattice) -> Lattice:
    if L1.ambient_rank != L2.ambient_rank:
        raise LatticeError("ambient mismatch")
    D = lcm(L1.denominator, L2.denominator)
    a, b = D // L1.denominator, D // L2.denominator
    rows = [[a * x for x in c] for c in L1.columns] + [[b * x for x in c] for c in L2.columns]
    return _canonical(L1.ambient_rank, rows, D)


def lattice_intersect(L1: Lattice, L2: Lattice) -> Lattice:
    if L1.ambient_rank != L2.ambient_rank:
        raise LatticeError("ambient mismatch")
    s = L1.ambient_rank
    if L1.rank == 0 or L2.rank == 0:
        return zero_lattice(s)
    D = lcm(L1.denominator, L2.denominator)
    A = [[D // L1.denominator * x for x in c] for c in L1.columns]
    B = [[D // L2.denominator * x for x in c] for c in L2.columns]
    # integer combinations c*A = e*B are the kernel of the stacked rows [A; -B]
    stacked = A + [[-x for x in r] for r in B]
    _, T, r = _echelon(stacked, s, transform=True)
    k = len(A)
    gens = []
    for t in T[r:]:
        gens.append([sum(t[i] * A[i][j] for i in range(k)) for j in range(s)])
    return _canonical(s, gens, D) if gens else zero_lattice(s)


def lattice_index(sub: Lattice, sup: Lattice) -> int:
    """The index ``|sup / sub|`` of full-rank lattices."""
    if sub.ambient_rank != sup.ambient_rank:
        raise LatticeError("ambient mismatch")
    if sub.rank != sup.rank or not sub.is_full_rank:
        raise InfiniteIndex("ranks differ or lattices are not full rank")
    if not sub.issubset(sup):
        raise NotSublattice("sub is not contained in sup")
    return abs(Fraction(_covolume_num(sub), sub.denominator ** sub.rank)
               / Fraction(_covolume_num(sup), sup.denominator ** sup.rank)).numerator


def _covolume_num(L: Lattice) -> int:
    # Hermite basis is echelon, so the determinant is the product of pivots
    out = 1
    for col in L.columns:
        out *= next(x for x in col if x)
    return out


def covolume(L: Lattice) -> Fraction:
    """``[Z^s : L]`` as a rational number, for full-rank ``L``."""
    if not L.is_full_rank:
        raise InfiniteIndex("lattice is not full rank")
    return Fraction(_covolume_num(L), L.denominator ** L.rank)


def dual_lattice(L: Lattice) -> Lattice:
    """``{x : <x, l> in Z for all l in L}`` for full-rank ``L``."""
    if not L.is_full_rank:
        raise NotFullRank("dual of a lattice that is not full rank")
    B = [list(c) for c in L.columns]  # rows are basis vectors b_i (times denominator)
    Binv = inverse(B)  # B * Binv = I, so the columns of Binv pair to the identity
    gens = [[Binv[i][j] * L.denominator for i in range(L.ambient_rank)]
            for j in range(L.ambient_rank)]
    return hnf_basis(gens, L.ambient_rank)


def saturate(L: Lattice) -> Lattice:
    """``Q L`` intersected with ``Z^s``."""
    s = L.ambient_rank
    if L.rank == 0:
        return zero_lattice(s)
    if L.is_full_rank:
        return standard_lattice(s)
    perp = integer_kernel([list(c) for c in L.columns], s)
    back = integer_kernel(perp, s)
    return lattice_from_int_columns(back, s)


def is_saturated(L: Lattice) -> bool:
    return L.denominator == 1 and saturate(L) == L


@dataclass(frozen=True)
class AbelianStructure:
    """A finitely generated abelian group ``Z^free_rank + sum Z/d_i``."""

    invariant_factors: tuple[int, ...]
    free_rank: int = 0

    def __post_init__(self):
        fs = self.invariant_factors
        if any(d <= 1 for d in fs):
            raise ValueError("invariant factors must exceed 1")
        if any(fs[i + 1] % fs[i] for i in range(len(fs) - 1)):
            raise ValueError("invariant factors must form a divisibility chain")

    @property
    def order(self) -> int | None:
        if self.free_rank:
            return None
        out = 1
        for d in self.invariant_factors:
            out *= d
        return out

    @classmethod
    def from_diagonal(cls, diagonal: Iterable[int]) -> "AbelianStructure":
        """Structure of ``Z^n / diag(diagonal)``; entries may be zero or one."""
        diag = list(diagonal)
        if not diag:
            return cls(())
        _, D, _ = snf([[d if i == j else 0 for j in range(len(diag))] for i, d in enumerate(diag)])
        ds = [D[i][i] for i in range(len(diag))]
        return cls(tuple(d for d in ds if d > 1), sum(1 for d in ds if d == 0))


def quotient_structure(sub: Lattice, sup: Lattice) -> AbelianStructure:
    """Invariant factors of ``sup / sub``."""
    if sub.ambient_rank != sup.ambient_rank:
        raise LatticeError("ambient mismatch")
    if not sub.issubset(sup):
        raise NotSublattice("sub is not contained in sup")
    if sub.rank == 0:
        return AbelianStructure((), sup.rank)
    # coordinates of sub's basis in sup's basis form an integer matrix
    M = []
    for b in sub.basis():
        c = sup.coordinates(b)
        M.append([int(x) for x in c])
    _, D, _ = snf(M)
    ds = [D[i][i] for i in range(min(len(D), len(D[0])))]
    return AbelianStructure(tuple(d for d in ds if d > 1), sup.rank - sub.rank)


def congruence_kernel(rows: Sequence[Sequence[int]], moduli: Sequence[int], s: int) -> Lattice:
    """``{x in Z^s : rows[i] . x = 0 mod moduli[i]}``.

    Computed as the dual of ``Z^s + span(rows[i] / moduli[i])``.
    """
    gens = [[Fraction(int(i == j)) for j in range(s)] for i in range(s)]
    for r, m in zip(rows, moduli):
        if m <= 0:
            raise ValueError("moduli must be positive")
        gens.append([Fraction(x, m) for x in r])
    return dual_lattice(hnf_basis(gens, s))


def reduce_mod(v: Sequence[int], L: Lattice) -> tuple[int, ...]:
    """Canonical representative of ``v`` modulo a full-rank integral lattice."""
    if L.denominator != 1 or not L.is_full_rank:
        raise ValueError("reduce_mod needs a full-rank integral lattice")
    t = list(v)
    for col in L.columns:
        piv = next(i for i, x in enumerate(col) if x)
        q = t[piv] // col[piv]
        if q:
            t = [a - q * b for a, b in zip(t, col)]
    return tuple(t)
