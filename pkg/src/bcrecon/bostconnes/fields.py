"""Number field data: ordered primes, narrow class number, ray-class towers.

A tower entry ``(F, m)`` presents the finite quotient ``J^F / P^m`` of the
truncated ideal group by invariant factors and the coordinates of every
truncated prime outside F. The truncated ideal group is free on the primes of
``B \\ F`` where ``B`` is the field's prime list, so each entry determines a
kernel lattice in ``Z^(B \\ F)``; when the truncated primes do not generate
the full ray class group, the entry presents their image subgroup.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from math import prod
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from ..completions import CompletionChain, factorize, validate_chain
from ..exactla import (Lattice, congruence_kernel, hnf_basis, inverse, lattice_index,
                       snf, standard_lattice, transpose)

SCHEMA = "bcrecon.field/1"


class FieldDataError(ValueError):
    pass


class SchemaError(FieldDataError):
    pass


class PrimeOverlap(FieldDataError):
    pass


class DepthUnavailable(FieldDataError):
    pass


class InconsistentTower(FieldDataError):
    def __init__(self, F: Sequence[str], m: Sequence[int], reason: str):
        super().__init__(f"tower entry F={list(F)} m={list(m)}: {reason}")
        self.F = tuple(F)
        self.m = tuple(m)
        self.reason = reason


@dataclass(frozen=True)
class PrimeLabel:
    label: str
    norm: int


@dataclass(frozen=True)
class Transition:
    F: tuple[str, ...]
    m: tuple[int, ...]
    matrix: tuple[tuple[int, ...], ...]  # rows index target coordinates


@dataclass
class TowerEntry:
    F: tuple[str, ...]
    m: tuple[int, ...]
    factors: tuple[int, ...]
    images: dict[str, tuple[int, ...]]
    transitions: list[Transition] = field(default_factory=list)

    @property
    def order(self) -> int:
        return prod(self.factors)

    @property
    def key(self):
        return (self.F, self.m)


@dataclass
class NumberFieldData:
    label: str
    primes: tuple[PrimeLabel, ...]
    h1: int
    tower: dict[tuple, TowerEntry]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.primes)

    def position(self, label: str) -> int:
        return self.labels.index(label)

    def sort_labels(self, labels: Iterable[str]) -> tuple[str, ...]:
        pos = {q: i for i, q in enumerate(self.labels)}
        return tuple(sorted(set(labels), key=pos.__getitem__))

    def basis(self, F: Iterable[str]) -> tuple[str, ...]:
        """Truncated primes outside F, in the field's order."""
        Fs = set(F)
        return tuple(q for q in self.labels if q not in Fs)

    @property
    def f_max(self) -> tuple[str, ...]:
        return self.sort_labels(q for (F, _) in self.tower for q in F)

    def entry(self, F: Iterable[str], m: Sequence[int]) -> TowerEntry:
        key = (self.sort_labels(F), tuple(m))
        if key not in self.tower:
            raise DepthUnavailable(f"no tower entry for F={list(key[0])} m={list(key[1])}")
        return self.tower[key]

    def max_depth(self, F: Iterable[str]) -> int:
        F = self.sort_labels(F)
        k = 0
        while (F, (k + 1,) * len(F)) in self.tower:
            k += 1
        return k

    @property
    def depth(self) -> int:
        """Largest k with diagonal entries for every F inside f_max."""
        fm = self.f_max
        return min(self.max_depth(F) for r in range(1, len(fm) + 1)
                   for F in combinations(fm, r)) if fm else 0

    def kernel(self, F: Iterable[str], m: Sequence[int]) -> Lattice:
        """``{x in Z^(B\\F) : prod q^x_q is trivial in J^F/P^m}``."""
        e = self.entry(F, m)
        basis = self.basis(e.F)
        if not e.factors:
            return standard_lattice(len(basis))
        rows = [[e.images[q][i] for q in basis] for i in range(len(e.factors))]
        return congruence_kernel(rows, list(e.factors), len(basis))

    def to_dict(self) -> dict:
        tower = []
        for key in sorted(self.tower, key=lambda k: (len(k[0]), [self.position(q) for q in k[0]], k[1])):
            e = self.tower[key]
            tower.append({
                "F": list(e.F), "m": list(e.m),
                "structure": {"factors": list(e.factors)},
                "images": {q: list(e.images[q]) for q in self.basis(e.F)},
                "transitions": [{"F": list(t.F), "m": list(t.m),
                                 "matrix": [list(r) for r in t.matrix]} for t in e.transitions],
            })
        return {"schema": SCHEMA, "label": self.label,
                "primes": [{"label": p.label, "norm": p.norm} for p in self.primes],
                "h1": self.h1, "tower": tower}

    @classmethod
    def from_dict(cls, data: Mapping) -> "NumberFieldData":
        try:
            if data.get("schema", SCHEMA) != SCHEMA:
                raise SchemaError(f"unknown schema {data.get('schema')!r}")
            primes = tuple(PrimeLabel(str(p["label"]), int(p["norm"])) for p in data["primes"])
            tower = {}
            for t in data["tower"]:
                F = tuple(str(q) for q in t["F"])
                m = tuple(int(x) for x in t["m"])
                e = TowerEntry(
                    F, m, tuple(int(x) for x in t["structure"]["factors"]),
                    {str(q): tuple(int(x) for x in v) for q, v in t["images"].items()},
                    [Transition(tuple(str(q) for q in tr["F"]), tuple(int(x) for x in tr["m"]),
                                tuple(tuple(int(x) for x in r) for r in tr["matrix"]))
                     for tr in t.get("transitions", [])])
                if (F, m) in tower:
                    raise SchemaError(f"duplicate tower entry F={list(F)} m={list(m)}")
                tower[(F, m)] = e
            return cls(str(data["label"]), primes, int(data["h1"]), tower)
        except (KeyError, TypeError, AttributeError) as exc:
            raise SchemaError(f"malformed field data: {exc!r}") from exc


# --------------------------------------------------------------- validation

def _spans_everything(vectors: list[Sequence[int]], factors: Sequence[int]) -> bool:
    r = len(factors)
    if r == 0:
        return True
    gens = [list(v) for v in vectors] + [[d * int(i == j) for j in range(r)]
                                         for i, d in enumerate(factors)]
    L = hnf_basis(gens, r)
    return L.is_full_rank and lattice_index(L, standard_lattice(r)) == 1


def validate_field(data: NumberFieldData) -> NumberFieldData:
    """Check schema, generation, transition squares and the class number."""
    labels = data.labels
    if len(set(labels)) != len(labels):
        raise SchemaError("duplicate prime labels")
    if any(p.norm < 2 for p in data.primes):
        raise SchemaError("prime norms must be at least 2")
    if data.h1 < 1:
        raise SchemaError("h1 must be positive")
    for (F, m), e in data.tower.items():
        if len(F) != len(m) or any(x < 1 for x in m):
            raise SchemaError(f"bad modulus {list(m)} for F={list(F)}")
        if any(q not in labels for q in F) or data.sort_labels(F) != F:
            raise SchemaError(f"F={list(F)} is not an ordered subset of the primes")
        fs = e.factors
        if any(d < 2 for d in fs) or any(fs[i + 1] % fs[i] for i in range(len(fs) - 1)):
            raise SchemaError(f"F={list(F)} m={list(m)}: factors {list(fs)} are not a divisibility chain")
        basis = data.basis(F)
        if set(e.images) != set(basis):
            raise SchemaError(f"F={list(F)} m={list(m)}: images must cover exactly {list(basis)}")
        if any(len(v) != len(fs) for v in e.images.values()):
            raise SchemaError(f"F={list(F)} m={list(m)}: image length mismatch")
        e.images = {q: tuple(x % d for x, d in zip(v, fs)) for q, v in e.images.items()}
        if not _spans_everything([e.images[q] for q in basis], fs):
            raise InconsistentTower(F, m, "prime images do not generate the quotient")
    if ((), ()) not in data.tower:
        raise InconsistentTower((), (), "missing the class group entry")
    if data.tower[((), ())].order != data.h1:
        raise InconsistentTower((), (), f"order {data.tower[((), ())].order} differs from h1 = {data.h1}")
    for (F, m), e in data.tower.items():
        for t in e.transitions:
            _check_transition(data, e, t)
    for F, m in list(data.tower):
        # consecutive diagonal levels must be linked
        if F and m[0] > 1 and m == (m[0],) * len(F):
            prev = (F, (m[0] - 1,) * len(F))
            if prev in data.tower and not any((t.F, t.m) == prev for t in data.tower[(F, m)].transitions):
                raise InconsistentTower(F, m, f"no transition to m={list(prev[1])}")
    return data


def _check_transition(data: NumberFieldData, e: TowerEntry, t: Transition):
    if not set(t.F) <= set(e.F):
        raise InconsistentTower(e.F, e.m, f"transition target F={list(t.F)} is not a subset")
    if (t.F, t.m) not in data.tower:
        raise InconsistentTower(e.F, e.m, f"transition target F={list(t.F)} m={list(t.m)} missing")
    pos = {q: i for i, q in enumerate(e.F)}
    if any(t.m[i] > e.m[pos[q]] for i, q in enumerate(t.F)):
        raise InconsistentTower(e.F, e.m, "transition modulus does not divide")
    tgt = data.tower[(t.F, t.m)]
    T = t.matrix
    r, r2 = len(e.factors), len(tgt.factors)
    if len(T) != r2 or any(len(row) != r for row in T):
        raise InconsistentTower(e.F, e.m, f"transition to F={list(t.F)} m={list(t.m)} has wrong shape")

    def apply(v):
        return tuple(sum(a * b for a, b in zip(row, v)) % d for row, d in zip(T, tgt.factors))

    for i, d in enumerate(e.factors):
        if any(apply([d * int(i == j) for j in range(r)])):
            raise InconsistentTower(e.F, e.m, f"transition to F={list(t.F)} m={list(t.m)} is not well defined")
    for q in data.basis(e.F):
        if apply(e.images[q]) != tgt.images[q]:
            raise InconsistentTower(e.F, e.m, f"square with F={list(t.F)} m={list(t.m)} fails at {q}")
    if not _spans_everything([[row[j] for row in T] for j in range(r)], tgt.factors):
        raise InconsistentTower(e.F, e.m, f"transition to F={list(t.F)} m={list(t.m)} is not surjective")


# ------------------------------------------------------------- presentations

def presentation(kernel: Lattice) -> tuple[tuple[int, ...], list[list[int]], list[list[int]]]:
    """Invariant factors of ``Z^n / kernel`` with coordinate rows and a section.

    Returns ``(factors, rows, section)`` where ``x -> (rows[i] . x mod
    factors[i])`` is an isomorphism onto the product of cyclic groups and
    ``section[i]`` is a vector mapping to the i-th unit coordinate.
    """
    n = kernel.ambient_rank
    if n == 0:
        return (), [], []
    H = transpose([list(v) for v in kernel.columns])  # basis vectors as columns
    U, D, _ = snf(H)
    Uinv = inverse(U)
    factors, rows, section = [], [], []
    for i in range(n):
        d = D[i][i]
        if d > 1:
            factors.append(d)
            rows.append([int(x) for x in U[i]])
            section.append([int(Uinv[j][i]) for j in range(n)])
    return tuple(factors), rows, section


def tower_from_kernels(label: str, primes: Sequence[PrimeLabel], h1: int,
                       kernels: Mapping[tuple, Lattice]) -> NumberFieldData:
    """Assemble validated tower data from kernel lattices keyed by ``(F, m)``.

    Transitions are added from each diagonal entry to the previous depth and
    to every ``F \\ {p}`` at the same depth.
    """
    data = NumberFieldData(label, tuple(primes), h1, {})
    pres = {}
    for (F, m), L in kernels.items():
        F = data.sort_labels(F)
        basis = data.basis(F)
        fs, rows, section = presentation(L)
        images = {q: tuple(r[j] % d for r, d in zip(rows, fs))
                  for j, q in enumerate(basis)}
        data.tower[(F, tuple(m))] = TowerEntry(F, tuple(m), fs, images)
        pres[(F, tuple(m))] = (rows, section)
    for (F, m), e in data.tower.items():
        targets = []
        if F and m[0] > 1:
            targets.append((F, tuple(x - 1 for x in m)))
        for p in F:
            E = tuple(q for q in F if q != p)
            targets.append((E, tuple(x for q, x in zip(F, m) if q != p)))
        for key in targets:
            if key not in data.tower:
                continue
            tgt = data.tower[key]
            rows_t = pres[key][0]
            src_basis, tgt_basis = data.basis(F), data.basis(key[0])
            cols = []
            for sec in pres[(F, m)][1]:
                x = dict(zip(src_basis, sec))
                v = [x.get(q, 0) for q in tgt_basis]
                cols.append([sum(a * b for a, b in zip(r, v)) % d for r, d in zip(rows_t, tgt.factors)])
            matrix = tuple(tuple(c[i] for c in cols) for i in range(len(tgt.factors)))
            e.transitions.append(Transition(key[0], key[1], matrix))
    return validate_field(data)


def relation_lattice(n: int, identity: Hashable, step: Callable[[Hashable, int], Hashable]) -> Lattice:
    """Kernel of ``Z^n -> H`` for a finite group H generated by n elements.

    ``step(h, i)`` multiplies h by the i-th generator. The subgroup is explored
    breadth first; every edge leaving the spanning tree gives a relation.
    """
    word = {identity: [0] * n}
    queue = deque([identity])
    relations = []
    while queue:
        h = queue.popleft()
        for i in range(n):
            g = step(h, i)
            w = list(word[h])
            w[i] += 1
            if g in word:
                rel = [a - b for a, b in zip(w, word[g])]
                if any(rel):
                    relations.append(rel)
            else:
                word[g] = w
                queue.append(g)
    return hnf_basis(relations, n) if relations else standard_lattice(n)


# ----------------------------------------------------------------- rationals

def _unit_group_logs(M: int) -> tuple[list[int], Callable[[int], list[int]]]:
    """Cyclic decomposition of ``(Z/M)^*`` with a discrete log map."""
    comps: list[tuple[int, dict[int, int], int]] = []  # (modulus, log table, order)
    moduli: list[int] = []
    logs: list[Callable[[int], int]] = []
    for p, k in sorted(factorize(M).items()):
        q = p ** k
        if p == 2:
            if k >= 2:
                moduli.append(2)
                logs.append(lambda a, q=q: 0 if a % 4 == 1 else 1)
            if k >= 3:
                table = {}
                x = 1
                for j in range(q // 4):
                    table[x] = j
                    x = x * 5 % q
                moduli.append(q // 4)
                logs.append(lambda a, q=q, t=table: t[a % q if a % 4 == 1 else (-a) % q])
        else:
            phi = q - q // p
            g = next(g for g in range(2, q) if g % p and all(pow(g, phi // r, q) != 1 for r in factorize(phi)))
            table = {}
            x = 1
            for j in range(phi):
                table[x] = j
                x = x * g % q
            moduli.append(phi)
            logs.append(lambda a, q=q, t=table: t[a % q])
    return moduli, lambda a: [f(a) for f in logs]


def builtin_rationals(S: Iterable[int], F: Iterable[int] = (), depth: int = 3) -> NumberFieldData:
    """Ray-class tower of Q: ``J^E / P^m`` is ``(Z/M)^*`` with M = prod p^m_p.

    Tower entries cover every E inside F at moduli ``(k, ..., k)``, ``1 <= k
    <= depth``, plus the class group entry. The truncated ideal group is free
    on ``B = S u F``; primes map to their residues.
    """
    S, F = sorted(set(int(p) for p in S)), sorted(set(int(p) for p in F))
    if set(S) & set(F):
        raise PrimeOverlap(f"primes {sorted(set(S) & set(F))} are in both S and F")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    B = sorted(S + F)
    primes = [PrimeLabel(str(p), p) for p in B]
    kernels = {((), ()): standard_lattice(len(B))}
    for r in range(1, len(F) + 1):
        for E in combinations(F, r):
            gens = [q for q in B if q not in E]
            for k in range(1, depth + 1):
                M = prod(p ** k for p in E)
                moduli, log = _unit_group_logs(M)
                cols = [log(q) for q in gens]
                rows = [[c[i] for c in cols] for i in range(len(moduli))]
                kernels[(tuple(str(p) for p in E), (k,) * r)] = congruence_kernel(rows, moduli, len(gens))
    return tower_from_kernels("Q", primes, 1, kernels)


def save_field_data(data: NumberFieldData, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_field(data))


def dumps_field(data: NumberFieldData) -> str:
    return json.dumps(data.to_dict(), sort_keys=True, indent=1) + "\n"


def load_field_data(path_or_dict) -> NumberFieldData:
    """Parse and validate a tower fixture file (or an already parsed dict)."""
    if isinstance(path_or_dict, Mapping):
        raw = path_or_dict
    else:
        try:
            with open(path_or_dict, encoding="utf-8") as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not JSON: {exc}") from exc
    return validate_field(NumberFieldData.from_dict(raw))


def galois_chain(data: NumberFieldData, F: Iterable[str], depth: int | None = None) -> CompletionChain:
    """Chain of kernels of ``Z^(B\\F) -> J^F / P^(k,...,k)``, k = 1..depth."""
    F = data.sort_labels(F)
    if not F:
        depth = depth or max(1, data.depth)
        L = data.kernel((), ())
        levels = [L] * depth
        orders = [data.tower[((), ())].order]
    else:
        avail = data.max_depth(F)
        depth = avail if depth is None else depth
        if depth < 1 or depth > avail:
            raise DepthUnavailable(f"F={list(F)}: depth {depth} requested, {avail} available")
        levels = [data.kernel(F, (k,) * len(F)) for k in range(1, depth + 1)]
        orders = [data.entry(F, (k,) * len(F)).order for k in range(1, depth + 1)]
    N = sorted({p for o in orders for p in factorize(o)})
    return validate_chain(levels, N, len(data.basis(F)))
