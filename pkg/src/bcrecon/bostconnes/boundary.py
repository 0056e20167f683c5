"""Boundary maps between neighbouring levels, their composites, trace and Psi.

Level F of a truncation with ordered prime list B lives in the exterior
algebra on ``B \\ F``; basis index sets are positions in that list. Removing
a prime p shifts every later position down by one.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from ..exterior import ExtElement


class BoundaryError(ValueError):
    pass


class PrimeInF(BoundaryError):
    pass


def level_basis(order: Sequence[str], F: Iterable[str]) -> tuple[str, ...]:
    Fs = set(F)
    return tuple(q for q in order if q not in Fs)


def sort_primes(order: Sequence[str], primes: Iterable[str]) -> tuple[str, ...]:
    pos = {q: i for i, q in enumerate(order)}
    return tuple(sorted(set(primes), key=pos.__getitem__))


def beta_set(order: Sequence[str], F: Iterable[str], primes: Iterable[str]) -> ExtElement:
    """``beta_{F'}`` at level F for a set F' of primes outside F."""
    basis = level_basis(order, F)
    pos = {q: i for i, q in enumerate(basis)}
    idx = sorted(pos[q] for q in primes)
    return ExtElement.basis(len(basis), idx)


def boundary(x: ExtElement, order: Sequence[str], F: Iterable[str], p: str) -> ExtElement:
    """Signed deletion of p: ``beta_{F'} -> 0`` and
    ``beta_{F' u {p}} -> (-1)^(N(F',p)+1) beta_{F'}``, with N the number of
    members of F' after p in the prime order."""
    F = set(F)
    if p in F:
        raise PrimeInF(f"{p} already lies in F")
    basis = level_basis(order, F)
    if x.ambient_rank != len(basis):
        raise BoundaryError("element does not live at level F")
    if p not in basis:
        raise BoundaryError(f"{p} is outside the truncation")
    j = basis.index(p)
    out: dict[tuple[int, ...], Fraction] = {}
    for I, c in x.terms.items():
        if j not in I:
            continue
        later = sum(1 for i in I if i > j)
        sign = 1 if later % 2 else -1
        J = tuple(i if i < j else i - 1 for i in I if i != j)
        out[J] = out.get(J, Fraction(0)) + sign * c
    return ExtElement(len(basis) - 1, out)


def compose_D(x: ExtElement, order: Sequence[str], F: Iterable[str]) -> ExtElement:
    """``D^F``: boundaries from the empty level, largest prime of F first."""
    Fs = sort_primes(order, F)
    level: set[str] = set()
    for p in reversed(Fs):
        x = boundary(x, order, level, p)
        level.add(p)
    return x


def boundary_table(order: Sequence[str], F: Iterable[str], p: str) -> list[dict]:
    """Images of every basis element at level F (nonzero ones only)."""
    basis = level_basis(order, F)
    rows = []
    for n in range(len(basis) + 1):
        for I in combinations(range(len(basis)), n):
            img = boundary(ExtElement.basis(len(basis), I), order, F, p)
            for J, c in img.terms.items():
                rows.append({"source": [basis[i] for i in I],
                             "target": [level_basis(order, set(F) | {p})[i] for i in J],
                             "sign": int(c)})
    return rows


def trace_tau(x: ExtElement, normalization) -> Fraction:
    """``tau(x) = c * (degree-0 coefficient of x)``."""
    return Fraction(normalization) * x.coefficient(())


def psi_tilde(x: ExtElement, order: Sequence[str], normalizations: Mapping[tuple, object] | object,
              subsets: Iterable[Iterable[str]] | None = None) -> ExtElement:
    """``sum_F (-1)^|F| tau^F(D^F(x)) beta_F`` over subsets F of the truncation.

    ``normalizations`` is either one constant used for every F or a mapping
    from ordered prime tuples to the constant of that level.
    """
    s = len(order)
    if x.ambient_rank != s:
        raise BoundaryError("psi_tilde takes elements of the empty level")
    if subsets is None:
        subsets = [F for n in range(s + 1) for F in combinations(order, n)]
    out = ExtElement(s)
    for F in subsets:
        F = sort_primes(order, F)
        c = normalizations[F] if isinstance(normalizations, Mapping) else normalizations
        t = trace_tau(compose_D(x, order, F), c)
        if t:
            sign = -1 if len(F) % 2 else 1
            out = out + (sign * t) * beta_set(order, (), F)
    return out
