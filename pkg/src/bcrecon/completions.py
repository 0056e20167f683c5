"""Pro-N completions of Z^s encoded as decreasing chains of sublattices."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable, Mapping, Sequence

from .exactla import (AbelianStructure, Lattice, hnf_basis, lattice_index, lattice_intersect,
                      lattice_sum, quotient_structure, standard_lattice)


class ChainError(ValueError):
    pass


class EmptyChain(ChainError):
    pass


class NotDecreasing(ChainError):
    pass


class IndexNotSmooth(ChainError):
    def __init__(self, prime: int, level: int | None = None):
        super().__init__(f"index has prime factor {prime} outside N (level {level})")
        self.prime = prime
        self.level = level


class PrimeNotInN(ChainError):
    pass


class NotRegular(ChainError):
    def __init__(self, prime: int):
        super().__init__(f"chain fails the regularity test at p={prime}")
        self.prime = prime


# ------------------------------------------------------------ supernaturals

@total_ordering
class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("INF")

    def __add__(self, other):
        return self

    __radd__ = __add__


INF = _Infinity()


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division (indices here are small-prime smooth)."""
    if n <= 0:
        raise ValueError("factorize needs a positive integer")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def valuation(n: int, p: int):
    """p-adic valuation of a nonzero integer; INF for zero."""
    if n == 0:
        return INF
    n = abs(n)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class SupernaturalNumber:
    """A formal product of prime powers with exponents in N or INF."""

    exponents: tuple[tuple[int, object], ...] = ()

    @classmethod
    def from_map(cls, exps: Mapping[int, object]) -> "SupernaturalNumber":
        return cls(tuple(sorted((p, e) for p, e in exps.items() if e != 0)))

    @classmethod
    def from_int(cls, n: int) -> "SupernaturalNumber":
        return cls.from_map(factorize(n))

    def as_map(self) -> dict[int, object]:
        return dict(self.exponents)

    def exponent(self, p: int):
        return self.as_map().get(p, 0)

    @property
    def is_finite(self) -> bool:
        return all(e is not INF for _, e in self.exponents)

    def value(self) -> int:
        if not self.is_finite:
            raise ValueError("infinite supernatural number has no integer value")
        out = 1
        for p, e in self.exponents:
            out *= p ** e
        return out

    def __mul__(self, other: "SupernaturalNumber") -> "SupernaturalNumber":
        a, b = self.as_map(), other.as_map()
        return SupernaturalNumber.from_map({p: a.get(p, 0) + b.get(p, 0) for p in set(a) | set(b)})

    def divides(self, other: "SupernaturalNumber") -> bool:
        b = other.as_map()
        return all(not (e > b.get(p, 0)) for p, e in self.exponents)

    def __str__(self):
        if not self.exponents:
            return "1"
        return "*".join(f"{p}^{'inf' if e is INF else e}" for p, e in self.exponents)

    def to_json(self) -> dict:
        return {str(p): ("inf" if e is INF else e) for p, e in self.exponents}


# -------------------------------------------------------------------- chains

@dataclass(frozen=True)
class CompletionChain:
    """Levels ``Gamma_1 > Gamma_2 > ...`` of full-rank sublattices of Z^s.

    Level 0 is implicitly Z^s; ``levels[k-1]`` is ``Gamma_k``.
    """

    ambient_rank: int
    primes: tuple[int, ...]
    levels: tuple[Lattice, ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, k: int) -> Lattice:
        if k == 0:
            return standard_lattice(self.ambient_rank)
        return self.levels[k - 1]

    def index(self, k: int) -> int:
        return lattice_index(self.level(k), standard_lattice(self.ambient_rank))

    def truncate(self, depth: int) -> "CompletionChain":
        return CompletionChain(self.ambient_rank, self.primes, self.levels[:depth])

    def to_dict(self) -> dict:
        return {"ambient_rank": self.ambient_rank, "primes": list(self.primes),
                "levels": [L.to_dict() for L in self.levels]}

    @classmethod
    def from_dict(cls, data: dict) -> "CompletionChain":
        levels = [Lattice.from_dict(L) for L in data["levels"]]
        return validate_chain(levels, data["primes"], int(data["ambient_rank"]))


def validate_chain(levels: Sequence[Lattice], primes: Iterable[int],
                   ambient_rank: int | None = None) -> CompletionChain:
    """Check that ``levels`` is decreasing with N-smooth indices."""
    levels = list(levels)
    if not levels:
        raise EmptyChain("a completion chain needs at least one level")
    s = levels[0].ambient_rank if ambient_rank is None else ambient_rank
    N = tuple(sorted(set(int(p) for p in primes)))
    top = standard_lattice(s)
    prev = top
    for k, L in enumerate(levels, start=1):
        if L.ambient_rank != s:
            raise ChainError("ambient rank mismatch")
        if not L.is_full_rank or L.denominator != 1:
            raise ChainError(f"level {k} is not a full-rank sublattice of Z^s")
        if not L.issubset(prev):
            raise NotDecreasing(f"level {k} is not contained in level {k - 1}")
        idx = lattice_index(L, top)
        for q in factorize(idx):
            if q not in N:
                raise IndexNotSmooth(q, k)
        prev = L
    return CompletionChain(s, N, tuple(levels))


def constant_chain(L: Lattice, primes: Iterable[int], depth: int) -> CompletionChain:
    return validate_chain([L] * depth, primes, L.ambient_rank)


def intersect_chains(chains: Sequence[CompletionChain]) -> CompletionChain:
    """Levelwise intersection (the product completion); depth is the minimum."""
    depth = min(c.depth for c in chains)
    s = chains[0].ambient_rank
    levels = []
    for k in range(1, depth + 1):
        L = chains[0].level(k)
        for c in chains[1:]:
            L = lattice_intersect(L, c.level(k))
        levels.append(L)
    primes = sorted(set(p for c in chains for p in c.primes))
    return validate_chain(levels, primes, s)


# -------------------------------------------------------------- equivalence

@dataclass(frozen=True)
class Equivalent:
    witnesses: tuple[tuple[str, int, int], ...]

    def __bool__(self):
        return True

    def to_json(self) -> dict:
        return {"verdict": "Equivalent",
                "witnesses": [list(w) for w in self.witnesses]}


@dataclass(frozen=True)
class NotEquivalent:
    direction: str
    level: int
    counterexample: tuple[int, ...]

    def __bool__(self):
        return False

    def to_json(self) -> dict:
        return {"verdict": "NotEquivalent", "direction": self.direction,
                "level": self.level, "counterexample": list(self.counterexample)}


def _dominate(a: CompletionChain, b: CompletionChain, depth: int, tag: str):
    """For each k <= depth find the least m with b.Gamma_m inside a.Gamma_k."""
    out = []
    for k in range(1, min(depth, a.depth) + 1):
        target = a.level(k)
        hit = next((m for m in range(b.depth + 1) if b.level(m).issubset(target)), None)
        if hit is None:
            deepest = b.level(b.depth)
            bad = next(v for v in deepest.columns if not target.contains(v))
            return NotEquivalent(tag, k, tuple(bad))
        out.append((tag, k, hit))
    return out


def cofinal_equivalent(c1: CompletionChain, c2: CompletionChain, depth: int):
    """Mutual cofinality of two chains, checked for levels up to ``depth``."""
    if c1.ambient_rank != c2.ambient_rank:
        raise ChainError("ambient rank mismatch")
    w1 = _dominate(c1, c2, depth, "c2_in_c1")
    if isinstance(w1, NotEquivalent):
        return w1
    w2 = _dominate(c2, c1, depth, "c1_in_c2")
    if isinstance(w2, NotEquivalent):
        return w2
    return Equivalent(tuple(w1 + w2))


# ------------------------------------------------------------------ p-parts

def p_part_lattice(L: Lattice, p: int) -> Lattice:
    """The intermediate lattice between L and Z^s whose index is the p-part."""
    s = L.ambient_rank
    idx = lattice_index(L, standard_lattice(s))
    pk = p ** valuation(idx, p)
    return lattice_sum(L, standard_lattice(s).scale(pk))


def p_part_chain(c: CompletionChain, p: int) -> CompletionChain:
    if p not in c.primes:
        raise PrimeNotInN(f"{p} is not in N = {c.primes}")
    return CompletionChain(c.ambient_rank, (p,), tuple(p_part_lattice(L, p) for L in c.levels))


# ---------------------------------------------------------- limit structure

@dataclass(frozen=True)
class PrimeLimit:
    prime: int
    free_rank: int
    torsion: AbelianStructure
    certificate_level: int


@dataclass(frozen=True)
class LimitStructure:
    parts: tuple[PrimeLimit, ...]

    def part(self, p: int) -> PrimeLimit:
        return next(x for x in self.parts if x.prime == p)

    def to_json(self) -> dict:
        return {str(x.prime): {"free_rank": x.free_rank,
                               "torsion": list(x.torsion.invariant_factors),
                               "certificate_level": x.certificate_level}
                for x in self.parts}


def _exponent_profile(L: Lattice, p: int) -> list[int]:
    q = quotient_structure(L, standard_lattice(L.ambient_rank))
    return sorted(valuation(d, p) for d in q.invariant_factors)


def _regular_step(prev: list[int], nxt: list[int], d: int) -> bool:
    """``nxt`` is ``prev`` with its d largest exponents raised by one."""
    padded = [0] * max(0, d - len(prev)) + prev
    if d:
        top = padded[-d:]
        if len(set(top)) != 1:
            return False
        grown = padded[:-d] + [top[0] + 1] * d
    else:
        grown = padded
    return sorted(x for x in grown if x) == nxt


def prime_limit(pc: CompletionChain, p: int) -> PrimeLimit:
    """Regularity test and Z_p^d x F_p shape for a p-power chain.

    Beyond ``p Gamma_k <= Gamma_{k+1} <= Gamma_k`` with constant step index
    ``p^d``, each step must raise the d largest elementary-divisor exponents
    by one while the rest stay fixed. The extra condition rules out chains
    such as ``2Z+Z, 2Z+2Z, 4Z+2Z, ...`` whose step index is constant but whose
    limit is not of rank equal to the step exponent.
    """
    s = pc.ambient_rank
    L = len(pc.levels)
    levels = [pc.level(k) for k in range(L + 1)]
    idx = [lattice_index(x, standard_lattice(s)) for x in levels]
    prof = [_exponent_profile(x, p) for x in levels]
    ok = [False] * L  # ok[k]: step k -> k+1 is regular for its own d
    steps = []
    for k in range(L):
        ratio = idx[k + 1] // idx[k]
        d = valuation(ratio, p)
        good = (ratio == p ** d and
                levels[k].scale(p).issubset(levels[k + 1]) and
                _regular_step(prof[k], prof[k + 1], d))
        ok[k] = good
        steps.append(d)
    for k0 in range(L):
        if all(ok[k] for k in range(k0, L)) and len(set(steps[k0:])) == 1:
            d = steps[k0]
            last = prof[L]
            torsion = last[:-d] if d else last
            if d and len(last) < d:
                torsion = []
            return PrimeLimit(p, d, AbelianStructure(tuple(p ** e for e in torsion)), k0)
    raise NotRegular(p)


def limit_structure(c: CompletionChain) -> LimitStructure:
    return LimitStructure(tuple(prime_limit(p_part_chain(c, p), p) for p in c.primes))
