"""Invariant families and the decision pipeline.

An invariant family stores, for each F inside ``F_max``, the K-group of level
F as a :class:`KSubgroup` over ``Z^(B \\ F)`` together with the unit class and
boundary tables. Nothing else about the field is kept: the class number, the
principal ideals and the Galois chains are recovered from the family.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import Mapping, Sequence

from ..completions import (CompletionChain, Equivalent, cofinal_equivalent,
                           validate_chain)
from ..exactla import (Lattice, hnf_basis, lattice_index, lattice_intersect,
                       standard_lattice)
from ..exterior import ExtElement, subsets
from ..kgroups import KSubgroup, k_from_chain
from ..recon import reconstruct_proN
from .boundary import boundary_table, level_basis, psi_tilde, sort_primes
from .fields import NumberFieldData, galois_chain

SCHEMA = "bcrecon.family/1"


class FamilyError(ValueError):
    pass


class InconsistentFamily(FamilyError):
    pass


def _fkey(F) -> str:
    return ",".join(F)


@dataclass
class InvariantFamily:
    label: str
    order: tuple[str, ...]
    f_max: tuple[str, ...]
    depth: int
    groups: dict[tuple[str, ...], KSubgroup]
    boundaries: dict[tuple[tuple[str, ...], str], list[dict]] = field(default_factory=dict)

    def levels(self) -> list[tuple[str, ...]]:
        return [F for n in range(len(self.f_max) + 1) for F in combinations(self.f_max, n)]

    def basis(self, F) -> tuple[str, ...]:
        return level_basis(self.order, F)

    def unit(self, F) -> ExtElement:
        return ExtElement.unit(len(self.basis(F)))

    def level_lattice(self, F, n: int) -> Lattice:
        """Union of the stored levels of degree n (the top level)."""
        K = self.groups[sort_primes(self.order, F)]
        return K.level(n, K.depth)

    def to_dict(self, strip_provenance: bool = True) -> dict:
        return {
            "schema": SCHEMA, "label": self.label, "order": list(self.order),
            "f_max": list(self.f_max), "depth": self.depth,
            "levels": [{"F": list(F), "basis": list(self.basis(F)),
                        "unit": self.unit(F).to_dict(),
                        "k": self.groups[F].to_dict(strip_provenance=strip_provenance)}
                       for F in self.levels()],
            "boundaries": [{"F": list(F), "p": p, "table": self.boundaries[(F, p)]}
                           for (F, p) in sorted(self.boundaries,
                                                key=lambda k: (len(k[0]), [self.order.index(q) for q in k[0]],
                                                               self.order.index(k[1])))],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "InvariantFamily":
        if data.get("schema") != SCHEMA:
            raise FamilyError(f"unknown schema {data.get('schema')!r}")
        order = tuple(data["order"])
        groups = {tuple(lv["F"]): KSubgroup.from_dict(lv["k"]) for lv in data["levels"]}
        bds = {(tuple(b["F"]), b["p"]): b["table"] for b in data["boundaries"]}
        fam = cls(data["label"], order, tuple(data["f_max"]), int(data["depth"]), groups, bds)
        for F in fam.levels():
            if F not in groups:
                raise FamilyError(f"missing level F={list(F)}")
            if groups[F].ambient_rank != len(fam.basis(F)):
                raise FamilyError(f"level F={list(F)} has the wrong ambient rank")
        return fam


def build_family(field_data: NumberFieldData, depth: int | None = None,
                 f_max: Sequence[str] | None = None) -> InvariantFamily:
    """K-groups of every level F inside ``f_max`` from the field's Galois chains."""
    fm = field_data.f_max if f_max is None else field_data.sort_labels(f_max)
    depth = field_data.depth if depth is None else depth
    if depth < 1:
        raise FamilyError("depth must be at least 1")
    order = field_data.labels
    groups = {}
    bds = {}
    for n in range(len(fm) + 1):
        for F in combinations(fm, n):
            groups[F] = k_from_chain(galois_chain(field_data, F, depth))
            for p in fm:
                if p not in F:
                    bds[(F, p)] = boundary_table(order, F, p)
    return InvariantFamily(field_data.label, order, fm, depth, groups, bds)


def dumps_family(fam: InvariantFamily) -> str:
    return json.dumps(fam.to_dict(), sort_keys=True, indent=1) + "\n"


def load_family(path_or_dict) -> InvariantFamily:
    if isinstance(path_or_dict, Mapping):
        return InvariantFamily.from_dict(path_or_dict)
    with open(path_or_dict, encoding="utf-8") as fh:
        return InvariantFamily.from_dict(json.load(fh))


# ------------------------------------------------------------ trace and Psi

def _fraction_gcd(values) -> Fraction:
    num, den = 0, 1
    for v in values:
        v = Fraction(v)
        if v:
            den = den * v.denominator // gcd(den, v.denominator)
    for v in values:
        num = gcd(num, int(Fraction(v) * den))
    return Fraction(num, den)


def tau_normalization(fam: InvariantFamily, F) -> Fraction:
    """The constant c with ``c * (tau o D^F)(K_l(empty level)) = Z``.

    ``D^F`` sends a degree-l element x of the empty level to
    ``(-1)^l x_F [1]``, so the image is the projection of ``K^(0,l)`` to the
    ``beta_F`` coordinate, ``gZ``, and c = 1/g.
    """
    F = sort_primes(fam.order, F)
    l = len(F)
    pos = {q: i for i, q in enumerate(fam.order)}
    I = tuple(pos[q] for q in F)
    j = subsets(len(fam.order), l).index(I)
    L = fam.level_lattice((), l)
    g = _fraction_gcd([v[j] for v in L.basis()])
    if g == 0:
        raise InconsistentFamily(f"beta_F coordinate vanishes on K for F={list(F)}")
    return 1 / g


@dataclass(frozen=True)
class Recovery:
    h: int
    P1: Lattice
    normalizations: dict

    def to_json(self) -> dict:
        return {"h": self.h, "P1": self.P1.to_dict(),
                "normalizations": {_fkey(F): str(c) for F, c in sorted(self.normalizations.items())}}


def recover_P1_and_h(fam: InvariantFamily) -> Recovery:
    """Recover h from the trace normalization and ``P^1`` from the image of Psi.

    ``h`` is the normalization of the empty level (the trace of the unit).
    Every level inside ``F_max`` must produce the same constant; ``P^1`` is the
    degree-1 part of ``Psi(K)`` intersected with ``Z^B`` and must have index h.
    """
    norms = {F: tau_normalization(fam, F) for F in fam.levels()}
    h_tau = norms[()]
    if h_tau.denominator != 1:
        raise InconsistentFamily(f"trace of the unit {h_tau} is not an integer")
    h = int(h_tau)
    bad = {F: c for F, c in norms.items() if c != h_tau}
    if bad:
        F, c = next(iter(sorted(bad.items())))
        raise InconsistentFamily(f"normalization {c} at F={list(F)} differs from tau([1]) = {h}")
    s = len(fam.order)
    L1 = fam.level_lattice((), 1)
    images = [psi_tilde(ExtElement.vector(v), fam.order, h_tau).coordinates(1) for v in L1.basis()]
    P1 = lattice_intersect(hnf_basis(images, s), standard_lattice(s))
    if not P1.is_full_rank or lattice_index(P1, standard_lattice(s)) != h:
        raise InconsistentFamily(f"index of the recovered P^1 differs from h = {h}")
    return Recovery(h, P1, norms)


# ----------------------------------------------------------------- matching

@dataclass(frozen=True)
class Mismatch:
    stage: str
    detail: str
    F: tuple[str, ...] | None = None

    def __bool__(self):
        return False

    def to_json(self) -> dict:
        out = {"verdict": "Mismatch", "stage": self.stage, "detail": self.detail}
        if self.F is not None:
            out["F"] = list(self.F)
        return out


@dataclass
class ConjugacyData:
    chi: dict[str, str]
    h: int
    P1: tuple[Lattice, Lattice]
    chains: dict[tuple[str, ...], tuple[CompletionChain, CompletionChain]]
    witnesses: dict[tuple[str, ...], Equivalent]
    identical: dict[tuple[str, ...], bool]
    phi: dict[tuple[str, ...], dict[str, tuple[int, ...]]]

    def __bool__(self):
        return True

    def to_json(self) -> dict:
        return {
            "verdict": "ConjugacyData", "chi": dict(sorted(self.chi.items())), "h": self.h,
            "P1": [self.P1[0].to_dict(), self.P1[1].to_dict()],
            "levels": [{"F": list(F), "chain_K": self.chains[F][0].to_dict(),
                        "chain_L": self.chains[F][1].to_dict(),
                        "witnesses": self.witnesses[F].to_json(), "identical": self.identical[F],
                        "phi": {q: list(v) for q, v in sorted(self.phi[F].items())}}
                       for F in self.chains],
        }


def permute_lattice(L: Lattice, src: Sequence[str], dst: Sequence[str], chi: Mapping[str, str]) -> Lattice:
    """Transport a lattice in ``Z^src`` to ``Z^dst`` along the bijection chi."""
    pos = {q: i for i, q in enumerate(dst)}
    perm = [pos[chi[q]] for q in src]
    vecs = []
    for v in L.basis():
        w = [Fraction(0)] * len(dst)
        for i, x in enumerate(v):
            w[perm[i]] = x
        vecs.append(w)
    return hnf_basis(vecs, len(dst))


def transport_chain(c: CompletionChain, src, dst, chi) -> CompletionChain:
    return validate_chain([permute_lattice(L, src, dst, chi) for L in c.levels], c.primes, len(dst))


def match_families(famK: InvariantFamily, famL: InvariantFamily, chi: Mapping[str, str],
                   coeff_bound: int = 2, budget: int | None = None):
    """Run the decision pipeline; returns ConjugacyData or the first Mismatch.

    ConjugacyData only says that no obstruction was found at this truncation;
    a Mismatch is conclusive.
    """
    chi = dict(chi)
    if sorted(chi) != sorted(famK.order) or sorted(chi.values()) != sorted(famL.order):
        raise FamilyError("chi must be a bijection between the truncated prime lists")
    if sort_primes(famL.order, (chi[q] for q in famK.f_max)) != famL.f_max:
        raise FamilyError("chi does not map F_max onto F_max")
    if famK.depth != famL.depth:
        raise FamilyError("families have different depths")
    rK, rL = recover_P1_and_h(famK), recover_P1_and_h(famL)
    if rK.h != rL.h:
        return Mismatch("h", f"h = {rK.h} versus h = {rL.h}")
    if permute_lattice(rK.P1, famK.order, famL.order, chi) != rL.P1:
        return Mismatch("P1", "chi does not carry P^1 onto P^1")
    chains, wits, same, phi = {}, {}, {}, {}
    for F in famK.levels():
        G = sort_primes(famL.order, (chi[q] for q in F))
        src, dst = famK.basis(F), famL.basis(G)
        cK = reconstruct_proN(famK.groups[F], None, coeff_bound, budget)
        cL = reconstruct_proN(famL.groups[G], None, coeff_bound, budget)
        moved = transport_chain(cK, src, dst, chi)
        depth = min(moved.depth, cL.depth)
        verdict = cofinal_equivalent(moved, cL, depth)
        if not verdict:
            return Mismatch("chain", f"transported chains differ: {verdict.to_json()}", F)
        chains[F] = (cK, cL)
        wits[F] = verdict
        same[F] = moved.levels[:depth] == cL.levels[:depth]
        phi[F] = {q: tuple(int(r == chi[q]) for r in dst) for q in src}
    return ConjugacyData(chi, rK.h, (rK.P1, rL.P1), chains, wits, same, phi)
