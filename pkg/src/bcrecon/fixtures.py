"""Seeded random completion chains with known limit structure.

A fixture draws, for each prime p, an integer matrix A_p whose rows are
linearly independent mod p and sets

    Gamma_k = {x : (A_p x)_i = 0 mod p^{e_i(k)} for all p, i}

with ``e_i(k) = k`` on the first d_p rows (free part) and ``min(k, t_j)`` on the
torsion rows. The limit is then the product of ``Z_p^{d_p} x prod Z/p^{t_j}``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .completions import CompletionChain, validate_chain
from .exactla import congruence_kernel, lattice_intersect, standard_lattice


@dataclass(frozen=True)
class PrimeSpec:
    p: int
    free_rank: int
    torsion: tuple[int, ...] = ()

    @property
    def rows(self) -> int:
        return self.free_rank + len(self.torsion)


@dataclass(frozen=True)
class FixtureSpec:
    rank: int
    parts: tuple[PrimeSpec, ...]
    depth: int
    seed: int

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(sorted(x.p for x in self.parts))

    def to_json(self) -> dict:
        return {"rank": self.rank, "depth": self.depth, "seed": self.seed,
                "parts": [{"p": x.p, "free_rank": x.free_rank, "torsion": list(x.torsion)}
                          for x in self.parts]}


def rank_mod_p(rows: list[list[int]], p: int) -> int:
    A = [[x % p for x in r] for r in rows]
    rank, ncols = 0, len(A[0]) if A else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(A)) if A[i][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][c], -1, p)
        A[rank] = [x * inv % p for x in A[rank]]
        for i in range(len(A)):
            if i != rank and A[i][c]:
                f = A[i][c]
                A[i] = [(x - f * y) % p for x, y in zip(A[i], A[rank])]
        rank += 1
    return rank


def draw_matrix(rng: random.Random, r: int, s: int, p: int) -> list[list[int]]:
    """An r x s integer matrix of rank r mod p with small entries."""
    if r == 0:
        return []
    while True:
        A = [[rng.randint(-p, p) for _ in range(s)] for _ in range(r)]
        if rank_mod_p(A, p) == r:
            return A


def random_completion(spec: FixtureSpec) -> tuple[CompletionChain, dict]:
    rng = random.Random(spec.seed)
    s = spec.rank
    matrices = {}
    for part in spec.parts:
        if part.rows > s:
            raise ValueError(f"prime {part.p}: {part.rows} generators exceed rank {s}")
        matrices[part.p] = draw_matrix(rng, part.rows, s, part.p)
    levels = []
    for k in range(1, spec.depth + 1):
        L = standard_lattice(s)
        for part in spec.parts:
            A = matrices[part.p]
            if not A:
                continue
            exps = [k] * part.free_rank + [min(k, t) for t in part.torsion]
            L = lattice_intersect(L, congruence_kernel(A, [part.p ** e for e in exps], s))
        levels.append(L)
    chain = validate_chain(levels, spec.primes, s)
    meta = {"spec": spec.to_json(), "matrices": {str(p): A for p, A in sorted(matrices.items())}}
    return chain, meta


def corpus(size: int = 120, seed: int = 20240611, primes=(2, 3, 5), max_rank: int = 4,
           max_rank_share: int = 10) -> list[FixtureSpec]:
    """Deterministic pro-p fixture list covering ranks 1..max_rank.

    Torsion exponents are at most 3 and the depth is at most 6 and at least
    ``max torsion + 2``. Only ``max_rank_share`` percent of the fixtures use
    the largest rank, which keeps exhaustive summand checks affordable.
    """
    rng = random.Random(seed)
    out = []
    n_top = max(1, size * max_rank_share // 100)
    ranks = [max_rank] * n_top + [1 + i % (max_rank - 1) for i in range(size - n_top)]
    for i, s in enumerate(ranks):
        p = primes[i % len(primes)]
        if i % 20 == 19:
            d, n_tor = 0, 0  # an occasional trivial completion
        else:
            d = rng.randint(0, s)
            n_tor = rng.randint(0 if d else 1, s - d)
        torsion = tuple(sorted(rng.randint(1, 3) for _ in range(n_tor)))
        low = max(torsion, default=0) + 2
        depth = rng.randint(max(low, 3), 6)
        out.append(FixtureSpec(s, (PrimeSpec(p, d, torsion),), depth, rng.randrange(2 ** 31)))
    return out


def split_corpus(size: int = 24, seed: int = 7, max_rank: int = 3) -> list[FixtureSpec]:
    """Pro-{2,3} fixtures with independent 2- and 3-parts."""
    rng = random.Random(seed)
    out = []
    for i in range(size):
        s = 1 + i % max_rank
        parts = []
        for p in (2, 3):
            r = rng.randint(1, s)
            d = rng.randint(0, r)
            parts.append(PrimeSpec(p, d, tuple(sorted(rng.randint(1, 3) for _ in range(r - d)))))
        low = max((max(x.torsion, default=0) for x in parts)) + 2
        depth = rng.randint(max(low, 3), 5)
        out.append(FixtureSpec(s, tuple(parts), depth, rng.randrange(2 ** 31)))
    return out
