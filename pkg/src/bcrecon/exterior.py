"""Exact exterior algebra of Q^s.

Basis elements are ``e_I`` for strictly increasing 0-based index tuples ``I``;
``e_()`` is the unit. Coordinates of a degree-n element are listed in
lexicographic order of the n-subsets (``itertools.combinations`` order).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .exactla import Lattice, hnf_basis, is_saturated


class ExteriorError(ValueError):
    pass


class AmbientMismatch(ExteriorError):
    pass


class NotDirectSummand(ExteriorError):
    pass


class WrongDegree(ExteriorError):
    pass


class ElementInSet(ExteriorError):
    pass


@lru_cache(maxsize=None)
def subsets(s: int, n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(combinations(range(s), n))


@lru_cache(maxsize=None)
def subset_position(s: int, n: int) -> dict:
    return {I: i for i, I in enumerate(subsets(s, n))}


def merge_sign(I: Sequence[int], J: Sequence[int]) -> int:
    """Sign of the shuffle putting ``I + J`` in increasing order (0 on repeats)."""
    inv = 0
    j = 0
    for a in I:
        for b in J:
            if a == b:
                return 0
    # count pairs (a in I, b in J) with a > b
    Js = sorted(J)
    for a in I:
        while j < len(Js) and Js[j] < a:
            j += 1
        inv += j
    return -1 if inv % 2 else 1


class ExtElement:
    """Element of the rational exterior algebra on s generators."""

    __slots__ = ("ambient_rank", "_terms")

    def __init__(self, ambient_rank: int, terms: Mapping[Sequence[int], object] | None = None):
        self.ambient_rank = ambient_rank
        clean: dict[tuple[int, ...], Fraction] = {}
        for key, c in (terms or {}).items():
            I = tuple(key)
            if any(I[i] >= I[i + 1] for i in range(len(I) - 1)):
                raise ExteriorError(f"index set {I} is not strictly increasing")
            if I and (I[0] < 0 or I[-1] >= ambient_rank):
                raise ExteriorError(f"index set {I} out of range")
            c = Fraction(c)
            if c:
                clean[I] = clean.get(I, Fraction(0)) + c
        self._terms = {I: clean[I] for I in sorted(clean, key=lambda I: (len(I), I)) if clean[I]}

    # constructors
    @classmethod
    def unit(cls, s: int) -> "ExtElement":
        return cls(s, {(): 1})

    @classmethod
    def basis(cls, s: int, indices: Sequence[int]) -> "ExtElement":
        return cls(s, {tuple(indices): 1})

    @classmethod
    def vector(cls, v: Sequence) -> "ExtElement":
        return cls(len(v), {(i,): x for i, x in enumerate(v)})

    @classmethod
    def from_coordinates(cls, s: int, n: int, coords: Sequence) -> "ExtElement":
        return cls(s, dict(zip(subsets(s, n), coords)))

    # accessors
    @property
    def terms(self) -> dict[tuple[int, ...], Fraction]:
        return dict(self._terms)

    def coefficient(self, indices: Sequence[int]) -> Fraction:
        return self._terms.get(tuple(indices), Fraction(0))

    def degrees(self) -> set[int]:
        return {len(I) for I in self._terms}

    @property
    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) != 1:
            raise WrongDegree("element is zero or not homogeneous")
        return ds.pop()

    def is_zero(self) -> bool:
        return not self._terms

    def homogeneous_part(self, n: int) -> "ExtElement":
        return ExtElement(self.ambient_rank, {I: c for I, c in self._terms.items() if len(I) == n})

    def coordinates(self, n: int) -> list[Fraction]:
        return [self._terms.get(I, Fraction(0)) for I in subsets(self.ambient_rank, n)]

    # arithmetic
    def _check(self, other: "ExtElement"):
        if not isinstance(other, ExtElement):
            raise TypeError("expected an ExtElement")
        if other.ambient_rank != self.ambient_rank:
            raise AmbientMismatch("ambient ranks differ")

    def __add__(self, other: "ExtElement") -> "ExtElement":
        self._check(other)
        t = dict(self._terms)
        for I, c in other._terms.items():
            t[I] = t.get(I, Fraction(0)) + c
        return ExtElement(self.ambient_rank, t)

    def __neg__(self) -> "ExtElement":
        return ExtElement(self.ambient_rank, {I: -c for I, c in self._terms.items()})

    def __sub__(self, other: "ExtElement") -> "ExtElement":
        return self + (-other)

    def __mul__(self, q) -> "ExtElement":
        if isinstance(q, ExtElement):
            return wedge(self, q)
        q = Fraction(q)
        return ExtElement(self.ambient_rank, {I: q * c for I, c in self._terms.items()})

    __rmul__ = __mul__

    def __xor__(self, other: "ExtElement") -> "ExtElement":
        return wedge(self, other)

    def __eq__(self, other):
        return (isinstance(other, ExtElement) and other.ambient_rank == self.ambient_rank
                and other._terms == self._terms)

    def __hash__(self):
        return hash((self.ambient_rank, tuple(self._terms.items())))

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = [f"{c}*e{list(I)}" for I, c in self._terms.items()]
        return " + ".join(parts)

    def to_dict(self) -> dict:
        return {"ambient_rank": self.ambient_rank,
                "terms": [{"indices": list(I), "num": c.numerator, "den": c.denominator}
                          for I, c in self._terms.items()]}

    @classmethod
    def from_dict(cls, data: dict) -> "ExtElement":
        return cls(int(data["ambient_rank"]),
                   {tuple(t["indices"]): Fraction(int(t["num"]), int(t["den"]))
                    for t in data["terms"]})


def wedge(a: ExtElement, b: ExtElement) -> ExtElement:
    a._check(b)
    out: dict[tuple[int, ...], Fraction] = {}
    for I, x in a._terms.items():
        for J, y in b._terms.items():
            sgn = merge_sign(I, J)
            if sgn:
                K = tuple(sorted(I + J))
                out[K] = out.get(K, Fraction(0)) + sgn * x * y
    return ExtElement(a.ambient_rank, out)


def wedge_vectors(vectors: Sequence[Sequence], s: int | None = None) -> ExtElement:
    """``v_1 ^ ... ^ v_k``; the empty wedge is the unit."""
    if s is None:
        if not vectors:
            raise ExteriorError("ambient rank needed for the empty wedge")
        s = len(vectors[0])
    out = ExtElement.unit(s)
    for v in vectors:
        out = wedge(out, ExtElement.vector(v))
    return out


def exterior_power_columns(basis: Sequence[Sequence], n: int) -> list[list]:
    """Coordinates of ``b_J = b_j1 ^ ... ^ b_jn`` for all n-subsets J of a basis."""
    s = len(basis[0]) if basis else 0
    cols = []
    for J in subsets(len(basis), n):
        cols.append(wedge_vectors([basis[j] for j in J], s).coordinates(n))
    return cols


@dataclass(frozen=True)
class OrientedSummand:
    """A direct summand of Z^s with an ordered basis (possibly empty)."""

    ambient_rank: int
    ordered_basis: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.ordered_basis)

    @property
    def lattice(self) -> Lattice:
        return hnf_basis(self.ordered_basis, self.ambient_rank)

    @classmethod
    def from_basis(cls, vectors: Iterable[Sequence[int]], s: int) -> "OrientedSummand":
        vecs = tuple(tuple(int(x) for x in v) for v in vectors)
        out = cls(s, vecs)
        L = out.lattice
        if L.rank != len(vecs) or not is_saturated(L):
            raise NotDirectSummand("basis does not span a direct summand of Z^s")
        return out

    @classmethod
    def empty(cls, s: int) -> "OrientedSummand":
        return cls(s, ())

    @classmethod
    def coordinate(cls, s: int, indices: Sequence[int]) -> "OrientedSummand":
        return cls(s, tuple(tuple(int(i == j) for j in range(s)) for i in indices))

    def to_json(self) -> list[list[int]]:
        return [list(v) for v in self.ordered_basis]


def beta_summand(summand: OrientedSummand) -> ExtElement:
    L = summand.lattice
    if L.rank != summand.rank or not is_saturated(L):
        raise NotDirectSummand("not a direct summand")
    return wedge_vectors(summand.ordered_basis, summand.ambient_rank)


def dual_vector(omega: ExtElement) -> list[Fraction]:
    """The vector x with ``<x, z> = coefficient of z ^ omega`` in the volume form.

    With 0-based indices, ``x_j = (-1)^j c_{complement of j}``.
    """
    s = omega.ambient_rank
    if omega.is_zero():
        return [Fraction(0)] * s
    if omega.degrees() != {s - 1}:
        raise WrongDegree("dual_vector needs a homogeneous element of degree s-1")
    out = []
    for j in range(s):
        comp = tuple(i for i in range(s) if i != j)
        c = omega.coefficient(comp)
        out.append(-c if j % 2 else c)
    return out


def from_dual_vector(x: Sequence) -> ExtElement:
    """Inverse of ``dual_vector``."""
    s = len(x)
    terms = {}
    for j in range(s):
        comp = tuple(i for i in range(s) if i != j)
        c = Fraction(x[j])
        terms[comp] = -c if j % 2 else c
    return ExtElement(s, terms)


def inversion_count(subset: Iterable, p, order: Sequence) -> int:
    """Number of members of ``subset`` strictly after ``p`` in ``order``."""
    pos = {q: i for i, q in enumerate(order)}
    items = list(subset)
    if p in items:
        raise ElementInSet(f"{p!r} already in the set")
    return sum(1 for q in items if pos[q] > pos[p])
