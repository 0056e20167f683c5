"""Reconstruction of a completion chain from K-theoretic level data.

Every routine here takes a :class:`~bcrecon.kgroups.KSubgroup` and nothing
else about the completion. The main entry points are :func:`reconstruct_proN`
(per prime, then intersect) and :func:`reconstruct_appendix` (through the
degree s-1 part and dual lattices).

Membership conditions of the form ``x ^ beta in M`` for a full-rank lattice M
are turned into lattices with duals: if ``c = B^{-1} Phi x`` are the
coordinates of the image, the solutions in Z^s are the dual of
``Z^s + span(rows of B^{-1} Phi)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, gcd
from typing import Iterator, Sequence

from .completions import (INF, CompletionChain, NotRegular, SupernaturalNumber,
                          intersect_chains, limit_structure, validate_chain, valuation)
from .exactla import (Lattice, dual_lattice, hnf_basis, inverse, lattice_from_int_columns,
                      lattice_index, lattice_sum, standard_lattice)
from .exterior import (ExtElement, OrientedSummand, beta_summand, dual_vector,
                       exterior_power_columns, subsets, wedge)
from .kgroups import KSubgroup, delta, restrict_to_p


class ReconstructionError(RuntimeError):
    pass


class BudgetExhausted(ReconstructionError):
    pass


class FamilyInsufficient(ReconstructionError):
    pass


class EmptyFamily(ReconstructionError):
    pass


class NoFiniteDelta(ReconstructionError):
    pass


class NotFullRankLevel(ReconstructionError):
    pass


class PostconditionFailed(ReconstructionError):
    pass


@dataclass(frozen=True)
class FgAnalysis:
    d: int
    Lambda: OrientedSummand
    N: int
    Pi: Lattice
    search_bound: int


@dataclass(frozen=True)
class SummandFamily:
    rank: int
    members: tuple[OrientedSummand, ...]
    witnesses: tuple[tuple[int, ...], ...]
    certified: tuple[bool, ...]
    candidates_tried: int = 0


# ------------------------------------------------------------------ helpers

def _single_prime(K: KSubgroup) -> int:
    if len(K.primes) != 1:
        raise ReconstructionError(f"expected a pro-p K-subgroup, got N = {K.primes}")
    return K.primes[0]


def _budget(K: KSubgroup, budget: int | None) -> int:
    b = K.depth if budget is None else min(budget, K.depth)
    if b < 1:
        raise BudgetExhausted("at least one level beyond level 0 is needed")
    return b


def _wedge_map_columns(s: int, beta: ExtElement, r: int) -> list[list[Fraction]]:
    """Columns ``e_j ^ beta`` of the linear map ``x -> x ^ beta`` (beta of degree r)."""
    return [wedge(ExtElement.basis(s, (j,)), beta).coordinates(r + 1) for j in range(s)]


def _condition_rows(K: KSubgroup, n: int, k: int, columns: Sequence[Sequence]) -> list[list[Fraction]]:
    """Rows r_i with ``Phi x in L_k^(n)`` iff ``<r_i, x>`` integral for all i."""
    sv = K.solver(n, k)
    s = len(columns)
    rows = []
    for w in sv.W:
        rows.append([Fraction(sum(a * b for a, b in zip(w, columns[j])), sv.q) for j in range(s)])
    return rows


def _solutions(s: int, rows: Sequence[Sequence[Fraction]], scale) -> Lattice:
    """``{x in Z^s : <r, x> in scale * Z for every row r}``."""
    gens = [[Fraction(int(i == j)) for j in range(s)] for i in range(s)]
    gens += [[x / scale for x in r] for r in rows]
    return dual_lattice(hnf_basis(gens, s))


def _delta_exponent(K: KSubgroup, x: ExtElement, p: int, budget: int):
    r = delta(K, x, budget)
    return r.exponent(p), r.certified


# ---------------------------------------------------------- enumerations

def box_vectors(s: int, bound: int) -> list[tuple[int, ...]]:
    """Nonzero integer vectors with entries in [-bound, bound], up to sign,
    ordered by max-norm and then lexicographically."""
    out = []
    for v in itertools.product(range(-bound, bound + 1), repeat=s):
        if any(v):
            first = next(x for x in v if x)
            if first > 0:
                out.append(v)
    out.sort(key=lambda v: (max(abs(x) for x in v), sum(abs(x) for x in v), v))
    return out


def enumerate_summands(s: int, r: int, bound: int) -> Iterator[OrientedSummand]:
    """Oriented rank-r direct summands: coordinate summands first, then
    summands with a basis from the box, deduplicated by canonical lattice."""
    seen = set()
    if r == 0:
        yield OrientedSummand.empty(s)
        return
    for I in subsets(s, r):
        S = OrientedSummand.coordinate(s, I)
        seen.add(S.lattice)
        yield S
    for combo in itertools.combinations(box_vectors(s, bound), r):
        L = hnf_basis(combo, s)
        if L.rank != r or L in seen:
            continue
        seen.add(L)
        S = OrientedSummand(s, tuple(combo))
        if _is_primitive(beta_unchecked(S)):
            yield S


def _is_primitive(beta: ExtElement) -> bool:
    """A wedge of integer vectors is primitive iff they span a direct summand."""
    g = 0
    for c in beta.terms.values():
        g = gcd(g, c.numerator)
    return g == 1


def beta_unchecked(S: OrientedSummand) -> ExtElement:
    out = ExtElement.unit(S.ambient_rank)
    for v in S.ordered_basis:
        out = wedge(out, ExtElement.vector(v))
    return out


# ------------------------------------------------------------------ pieces

def _family_level(K: KSubgroup, family_rows: list, p: int, k: int, s: int) -> Lattice:
    return _solutions(s, family_rows, p ** k)


def _member_rows(K: KSubgroup, S: OrientedSummand, budget: int) -> list[list[Fraction]]:
    beta = beta_unchecked(S)
    n = S.rank + 1
    return _condition_rows(K, n, budget, _wedge_map_columns(K.ambient_rank, beta, S.rank))


def find_summand_family(K: KSubgroup, r: int, target=1, coeff_bound: int = 2,
                        budget: int | None = None) -> SummandFamily:
    """Rank-r summands Sigma with a witness x such that ``delta(x ^ beta_Sigma) = target``.

    Stops as soon as the family pins the level-1 lattice, i.e. the level-1
    solution set has index ``p^(r+1)``; this certifies that the quotient maps
    attached to the members separate the rank-(r+1) limit.
    """
    p = _single_prime(K)
    b = _budget(K, budget)
    s = K.ambient_rank
    tv = target.exponent(p) if isinstance(target, SupernaturalNumber) else valuation(int(target), p)
    want = p ** (r + 1)
    members, witnesses, flags, rows = [], [], [], []
    standard = [tuple(int(i == j) for j in range(s)) for i in range(s)]
    tried = 0
    certs_possible = K.certificates is not None
    for S in enumerate_summands(s, r, coeff_bound):
        tried += 1
        beta = beta_unchecked(S)
        found = None
        for x in itertools.chain(standard, box_vectors(s, coeff_bound)):
            y = wedge(ExtElement.vector(x), beta)
            if y.is_zero():
                continue
            e, cert = _delta_exponent(K, y, p, b)
            if e == tv and (cert or not certs_possible):
                found = (x, cert)
                break
        if found is None:
            continue
        members.append(S)
        witnesses.append(found[0])
        flags.append(found[1])
        rows += _member_rows(K, S, b)
        L1 = _family_level(K, rows, p, 1, s)
        if lattice_index(L1, standard_lattice(s)) == want:
            return SummandFamily(r, tuple(members), tuple(witnesses), tuple(flags), tried)
    if not members:
        raise EmptyFamily(f"no rank-{r} summand qualifies within coefficient bound {coeff_bound}")
    raise FamilyInsufficient("enumeration exhausted before the family pinned the reconstruction")


def reconstruct_free(K: KSubgroup, d: int, family: SummandFamily, depth: int | None = None,
                     budget: int | None = None) -> CompletionChain:
    """Levels ``Z^s`` intersected with ``{x : x ^ beta_Sigma in p^k K^d}`` over the family.

    With ``depth=None`` the chain is extended while each level has index
    ``p^(kd)``, up to the budget. Levels are subsets of the true ones, so
    that index certifies equality.
    """
    p = _single_prime(K)
    b = _budget(K, budget)
    s = K.ambient_rank
    if not family.members:
        raise EmptyFamily("empty family")
    if family.rank != d - 1:
        raise ReconstructionError("family rank must be d - 1")
    rows = []
    for S in family.members:
        rows += _member_rows(K, S, b)
    top = standard_lattice(s)
    levels = []
    limit = b if depth is None else depth
    for k in range(1, limit + 1):
        L = _solutions(s, rows, p ** k)
        idx = lattice_index(L, top)
        if idx != p ** (k * d):
            if k == 1 and idx < p ** d:
                raise FamilyInsufficient(f"level-1 index {idx} below p^{d}")
            if depth is None and levels:
                break
            if k == 1:
                raise FamilyInsufficient(f"level-1 index {idx} is not p^{d}")
            raise BudgetExhausted(f"level {k} is not determined at budget {b}")
        levels.append(L)
    return validate_chain(levels, (p,), s)


def reconstruct_rank1(K: KSubgroup, depth: int | None = None, budget: int | None = None) -> CompletionChain:
    """Levels ``Z^s`` intersected with ``p^k K^1``."""
    fam = SummandFamily(0, (OrientedSummand.empty(K.ambient_rank),),
                        (tuple(int(j == 0) for j in range(K.ambient_rank)),), (True,))
    return reconstruct_free(K, 1, fam, depth, budget)


def analyze_fg(K: KSubgroup, coeff_bound: int = 2, budget: int | None = None) -> FgAnalysis:
    """Rank d, minimizing summand Lambda, torsion order N and Pi = f^{-1}(H).

    d is the least degree in which some coordinate wedge ``e_I`` has finite
    delta. A coordinate wedge attains the least finite value, so Lambda is
    chosen among them; ties go to the lexicographically first index set.
    """
    p = _single_prime(K)
    b = _budget(K, budget)
    s = K.ambient_rank
    for n in range(0, s + 1):
        if n not in K.levels:
            raise ReconstructionError(f"degree {n} is not stored")
        best = None
        for I in subsets(s, n):
            e, _ = _delta_exponent(K, ExtElement.basis(s, I), p, b)
            if e is not INF and (best is None or e < best[0]):
                best = (e, I)
        if best is not None:
            break
    else:
        raise NoFiniteDelta("every coordinate wedge has infinite delta")
    d = n
    e, I = best
    N = p ** e
    Lam = OrientedSummand.coordinate(s, I)
    if d == s:
        Pi = standard_lattice(s)
    else:
        if d + 1 not in K.levels:
            raise ReconstructionError(f"degree {d + 1} is not stored")
        rows = _condition_rows(K, d + 1, b, _wedge_map_columns(s, beta_unchecked(Lam), d))
        Pi = _solutions(s, rows, N)
    return FgAnalysis(d, Lam, N, Pi, coeff_bound)


def rebase(K: KSubgroup, Pi: Lattice, N: int, degrees: Sequence[int]) -> KSubgroup:
    """The K-subgroup of the restricted completion of Pi, in Pi's coordinates.

    Levels are ``(wedge^n P)^{-1} (N L_k) + wedge^n Z^s`` where the columns of P
    are the canonical basis of Pi.
    """
    s = K.ambient_rank
    P = [list(c) for c in Pi.columns]
    levels = {}
    for n in sorted(set(degrees) | {0}):
        C = comb(s, n)
        Wn = exterior_power_columns(P, n)  # columns of wedge^n P
        Winv = inverse([[Wn[j][i] for j in range(C)] for i in range(C)])
        std = standard_lattice(C)
        out = []
        for L in K.levels[n]:
            gens = []
            for v in L.basis():
                gens.append([N * sum(Winv[i][j] * v[j] for j in range(C)) for i in range(C)])
            out.append(lattice_sum(hnf_basis(gens, C), std))
        levels[n] = out
    return KSubgroup(s, K.primes, levels, provenance=K.provenance, certificates=K.certificates)


def _map_lattice(P: Sequence[Sequence[int]], L: Lattice) -> Lattice:
    s = len(P)
    gens = [[sum(c[i] * P[i][j] for i in range(s)) for j in range(s)] for c in L.basis()]
    return hnf_basis(gens, s)


def reconstruct_fg(K: KSubgroup, coeff_bound: int = 2, depth: int | None = None,
                   budget: int | None = None) -> CompletionChain:
    """Chain ``Pi_k = f^{-1}(p^k H)`` for a pro-p K-subgroup."""
    p = _single_prime(K)
    b = _budget(K, budget)
    s = K.ambient_rank
    a = analyze_fg(K, coeff_bound, b)
    if a.d == 0:
        chain = validate_chain([a.Pi] * (depth or b), (p,), s)
    else:
        Kp = rebase(K, a.Pi, a.N, [a.d])
        fam = find_summand_family(Kp, a.d - 1, 1, coeff_bound, b)
        local = reconstruct_free(Kp, a.d, fam, depth, b)
        P = [list(c) for c in a.Pi.columns]
        chain = validate_chain([_map_lattice(P, L) for L in local.levels], (p,), s)
    try:
        ls = limit_structure(chain)
    except NotRegular:
        return chain
    if ls.part(p).free_rank != a.d:
        raise PostconditionFailed(f"limit rank {ls.part(p).free_rank} differs from d = {a.d}")
    return chain


def reconstruct_proN(K: KSubgroup, depth: int | None = None, coeff_bound: int = 2,
                     budget: int | None = None) -> CompletionChain:
    """Reconstruct each p-part from ``restrict_to_p`` and intersect levelwise."""
    s = K.ambient_rank
    if not K.primes:
        return validate_chain([standard_lattice(s)] * max(1, depth or K.depth), (), s)
    chains = [reconstruct_fg(restrict_to_p(K, p), coeff_bound, depth, budget) for p in K.primes]
    return intersect_chains(chains)


def reconstruct_appendix(K: KSubgroup, depth: int | None = None) -> CompletionChain:
    """Dual lattices of the degree s-1 levels pushed through ``dual_vector``."""
    s = K.ambient_rank
    n = s - 1
    if n not in K.levels:
        raise ReconstructionError(f"degree {n} is not stored")
    depth = K.depth if depth is None else depth
    if depth < 1 or depth > K.depth:
        raise BudgetExhausted("requested depth is not available")

    def image(k):
        vecs = [dual_vector(ExtElement.from_coordinates(s, n, v)) for v in K.level(n, k).basis()]
        Q = hnf_basis(vecs, s)
        if not Q.is_full_rank:
            raise NotFullRankLevel(f"level {k} image is not full rank")
        return Q

    if image(0) != standard_lattice(s):
        raise NotFullRankLevel("level 0 does not map onto Z^s")
    levels = [dual_lattice(image(k)) for k in range(1, depth + 1)]
    return validate_chain(levels, K.primes, s)
