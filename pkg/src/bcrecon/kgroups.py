"""Level lattices of the K-theoretic subgroup of the exterior algebra.

For a chain ``Gamma_k`` the degree-n level is
``L_k = (1/[Z^s:Gamma_k]) * wedge^n Gamma_k`` inside ``wedge^n Q^s``; the levels
increase with k and their union is the degree-n part of the K-subgroup.
Reconstruction code only ever sees a :class:`KSubgroup`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, gcd, lcm
from typing import Sequence

import numpy as np

from .completions import (INF, CompletionChain, NotRegular, PrimeNotInN, SupernaturalNumber,
                          factorize, limit_structure, p_part_chain, prime_limit, valuation)
from .exactla import (Lattice, inverse, lattice_from_int_columns, lattice_intersect,
                      standard_lattice)
from .exterior import ExtElement, exterior_power_columns, subsets


class KGroupError(ValueError):
    pass


class ZeroElement(KGroupError):
    pass


class NotInK(KGroupError):
    pass


@dataclass(frozen=True)
class DeltaResult:
    value: SupernaturalNumber
    certified: bool
    probe_level: int
    content: int = 1  # prime powers of the content outside N

    def exponent(self, p: int):
        return self.value.exponent(p)


@dataclass(frozen=True)
class _LevelSolver:
    """``B^{-1} = W / q`` for the basis matrix B of one full-rank level."""

    W: tuple[tuple[int, ...], ...]
    q: int


class KSubgroup:
    """Level lattices ``L_k^(n)`` for degrees ``0..max_degree``, levels ``0..depth``.

    ``certificates`` maps each prime to the level from which the originating
    chain is regular; it is None for data loaded from a dump.
    """

    def __init__(self, ambient_rank: int, primes: Sequence[int],
                 levels: dict[int, Sequence[Lattice]], provenance: str = "loaded",
                 certificates: dict[int, int] | None = None):
        self.ambient_rank = ambient_rank
        self.primes = tuple(sorted(primes))
        self.levels = {int(n): tuple(ls) for n, ls in sorted(levels.items())}
        self.provenance = provenance
        self.certificates = dict(certificates) if certificates is not None else None
        depths = {len(ls) for ls in self.levels.values()}
        if len(depths) != 1:
            raise KGroupError("all degrees must carry the same number of levels")
        if 0 not in self.levels:
            raise KGroupError("degree 0 is required")
        for n, ls in self.levels.items():
            for L in ls:
                if L.ambient_rank != comb(ambient_rank, n):
                    raise KGroupError(f"degree {n} level has wrong dimension")
        self._solvers: dict = {}

    @property
    def depth(self) -> int:
        """Index of the deepest level (levels run from 0 to depth)."""
        return len(self.levels[0]) - 1

    @property
    def max_degree(self) -> int:
        return max(self.levels)

    def level(self, n: int, k: int) -> Lattice:
        return self.levels[n][k]

    def level_index(self, k: int) -> int:
        """``[Z^s : Gamma_k]``, read off the degree-0 level ``(1/d_k) Z``."""
        return self.levels[0][k].denominator

    def __eq__(self, other):
        return (isinstance(other, KSubgroup) and self.ambient_rank == other.ambient_rank
                and self.primes == other.primes and self.levels == other.levels)

    def solver(self, n: int, k: int) -> _LevelSolver:
        key = (n, k)
        if key not in self._solvers:
            L = self.levels[n][k]
            if not L.is_full_rank:
                raise KGroupError("level lattice is not full rank")
            Binv = inverse([list(c) for c in L.columns])  # rows b_i: x = sum c_i b_i / den
            # coordinates c = den * x * Binv, i.e. c_i = den * sum_j x_j Binv[j][i]
            q = 1
            for row in Binv:
                for v in row:
                    q = lcm(q, v.denominator)
            W = tuple(tuple(int(Binv[j][i] * q) * L.denominator for j in range(len(Binv)))
                      for i in range(len(Binv)))
            self._solvers[key] = _LevelSolver(W, q)
        return self._solvers[key]

    def level_coordinates(self, n: int, k: int, coords: Sequence) -> list[Fraction]:
        sv = self.solver(n, k)
        return [Fraction(sum(w * c for w, c in zip(row, coords)), 1) / sv.q for row in sv.W]

    def to_dict(self, strip_provenance: bool = False) -> dict:
        out = {"schema": "bcrecon.kgroup/1", "ambient_rank": self.ambient_rank,
               "primes": list(self.primes),
               "provenance": "loaded" if strip_provenance else self.provenance,
               "degrees": {str(n): [L.to_dict() for L in ls] for n, ls in self.levels.items()}}
        if self.certificates is not None and not strip_provenance:
            out["certificates"] = {str(p): k for p, k in sorted(self.certificates.items())}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "KSubgroup":
        levels = {int(n): [Lattice.from_dict(L) for L in ls] for n, ls in data["degrees"].items()}
        return cls(int(data["ambient_rank"]), [int(p) for p in data["primes"]], levels,
                   provenance="loaded")


def _chain_certificates(c: CompletionChain) -> dict[int, int] | None:
    try:
        return {p.prime: p.certificate_level for p in limit_structure(c).parts}
    except NotRegular:
        return None


def k_from_chain(c: CompletionChain, max_degree: int | None = None) -> KSubgroup:
    """``L_k^(n) = (1/[Z^s:Gamma_k]) wedge^n Gamma_k`` for levels 0..depth."""
    s = c.ambient_rank
    if max_degree is None:
        max_degree = s
    levels: dict[int, list[Lattice]] = {n: [] for n in range(max_degree + 1)}
    for k in range(c.depth + 1):
        G = c.level(k)
        d = c.index(k)
        basis = [list(col) for col in G.columns]
        for n in range(max_degree + 1):
            cols = [[int(v) for v in col] for col in exterior_power_columns(basis, n)]
            levels[n].append(lattice_from_int_columns(cols, comb(s, n), d))
    return KSubgroup(s, c.primes, levels, provenance="from-chain",
                     certificates=_chain_certificates(c))


def _as_coords(K: KSubgroup, x: ExtElement) -> tuple[int, list[Fraction]]:
    if x.ambient_rank != K.ambient_rank:
        raise KGroupError("ambient mismatch")
    if x.is_zero():
        raise ZeroElement("delta of the zero element")
    n = x.degree
    if n not in K.levels:
        raise KGroupError(f"degree {n} not stored")
    return n, x.coordinates(n)


def contains(K: KSubgroup, x: ExtElement, budget: int | None = None) -> bool:
    """Whether x lies in ``L_k`` for some level k <= budget (levels increase)."""
    budget = K.depth if budget is None else min(budget, K.depth)
    if x.is_zero():
        return True
    n = x.degree
    return K.level(n, budget).contains(x.coordinates(n))


def _vp_fraction(x: Fraction, p: int):
    if x == 0:
        return INF
    return valuation(x.numerator, p) - valuation(x.denominator, p)


def level_valuation(K: KSubgroup, n: int, k: int, coords: Sequence, p: int):
    """``l_p(x, L_k)``: the largest j with x in ``p^j L_k``."""
    c = K.level_coordinates(n, k, coords)
    return min(_vp_fraction(v, p) for v in c)


def _classify(vals: list, start: int, certificate: int | None):
    """Stabilization rule on the sequence ``vals[k] = l_p(x, L_k)``.

    The value is finite when the final step leaves it unchanged and INF when
    it grows at the final step. It is certified when the chain's regularity
    certificate covers the final step and the behaviour is uniform on the
    regular segment.
    """
    last = len(vals) - 1
    if last == 0:
        return vals[0], False
    finite = vals[last] == vals[last - 1]
    value = vals[last] if finite else INF
    if certificate is None or certificate > last - 1:
        return value, False
    seg = vals[certificate:]
    if finite:
        return value, True
    grows = all(seg[i + 1] > seg[i] for i in range(len(seg) - 1))
    return value, grows


def delta(K: KSubgroup, x: ExtElement, budget: int | None = None) -> DeltaResult:
    """Supernatural divisibility order of x in the K-subgroup."""
    budget = K.depth if budget is None else min(budget, K.depth)
    n, coords = _as_coords(K, x)
    if not K.level(n, budget).contains(coords):
        raise NotInK("element is not in the K-subgroup at this budget")
    exps = {}
    certified = True
    for p in K.primes:
        vals = [level_valuation(K, n, k, coords, p) for k in range(budget + 1)]
        cert = None if K.certificates is None else K.certificates.get(p)
        v, ok = _classify(vals, 0, cert)
        exps[p] = v
        certified = certified and ok
    g = 0
    for c in coords:
        g = gcd(g, c.numerator)
    content = 1
    for q, e in factorize(g).items():
        if q not in K.primes:
            content *= q ** e
    return DeltaResult(SupernaturalNumber.from_map(exps), certified, budget, content)


def restrict_to_p(K: KSubgroup, p: int) -> KSubgroup:
    """``M_k = L_k`` intersected with ``p^(-v_p(d_k)) wedge^n Z^s``."""
    if p not in K.primes:
        raise PrimeNotInN(f"{p} is not in N = {K.primes}")
    s = K.ambient_rank
    if K.primes == (p,):
        return K
    levels = {}
    for n, ls in K.levels.items():
        out = []
        for k, L in enumerate(ls):
            a = valuation(K.level_index(k), p)
            out.append(lattice_intersect(L, standard_lattice(comb(s, n)).scale(Fraction(1, p ** a))))
        levels[n] = out
    cert = None
    if K.certificates is not None and p in K.certificates:
        cert = {p: K.certificates[p]}
    return KSubgroup(s, (p,), levels, provenance=K.provenance, certificates=cert)


# ------------------------------------------------------------ batch queries

def _int_matrix(rows, dtype):
    return np.array([[int(v) for v in r] for r in rows], dtype=dtype)


def _fits_int64(W, vectors_bound: int, width: int) -> bool:
    m = max((abs(v) for r in W for v in r), default=0)
    return m * vectors_bound * width < 2 ** 62


def _vp_array(a: np.ndarray, p: int, cap: int) -> np.ndarray:
    """Elementwise p-adic valuation of integer arrays, capped at ``cap`` for zeros."""
    out = np.zeros(a.shape, dtype=np.int64)
    a = a.copy()
    zero = a == 0
    a[zero] = 1
    for _ in range(cap):
        m = (a % p == 0)
        if not m.any():
            break
        out += m
        a = np.where(m, a // p, a)
    out[zero] = cap
    return out


def batch_level_valuations(K: KSubgroup, n: int, vectors: np.ndarray, p: int,
                           levels: Sequence[int]) -> np.ndarray:
    """``l_p`` of many integral degree-n coordinate vectors at the given levels.

    Returns an array of shape ``(len(levels), len(vectors))``. Exact: int64 is
    used only when an overflow bound allows it, object arrays otherwise.
    """
    vectors = np.asarray(vectors)
    bound = int(np.abs(vectors).max()) if vectors.size else 0
    out = []
    for k in levels:
        sv = K.solver(n, k)
        width = len(sv.W)
        if _fits_int64(sv.W, bound, width):
            W = _int_matrix(sv.W, np.int64)
            c = vectors.astype(np.int64) @ W.T
        else:
            W = _int_matrix(sv.W, object)
            c = vectors.astype(object) @ W.T
        vq = valuation(sv.q, p)
        if c.dtype == object:
            cap = max((int(v).bit_length() for v in c.flat), default=0) + 1
        else:
            cap = 64
        if c.dtype == object:
            vals = np.array([[cap if v == 0 else valuation(int(v), p) for v in row] for row in c],
                            dtype=np.int64).reshape(c.shape)
        else:
            vals = _vp_array(c, p, cap)
        out.append(vals.min(axis=1) - vq)
    return np.array(out)


def batch_delta(K: KSubgroup, n: int, vectors: np.ndarray, p: int,
                budget: int | None = None):
    """Vectorized :func:`delta` for integral vectors at one prime.

    Returns ``(values, finite, certified)`` where ``values`` holds the
    finite exponents (entries with ``finite == False`` are INF) and
    ``certified`` is a boolean array.
    """
    budget = K.depth if budget is None else min(budget, K.depth)
    cert = None if K.certificates is None else K.certificates.get(p)
    start = 0 if cert is None else min(cert, budget)
    levels = list(range(start, budget + 1))
    vals = batch_level_valuations(K, n, vectors, p, levels)
    if len(levels) == 1:
        return vals[0], np.zeros(vals.shape[1], bool), np.zeros(vals.shape[1], bool)
    finite = vals[-1] == vals[-2]
    if cert is None or cert > budget - 1:
        certified = np.zeros(vals.shape[1], bool)
    else:
        grows = np.all(vals[1:] > vals[:-1], axis=0)
        certified = finite | grows
    return vals[-1], finite, certified
