"""Finite truncations of the semigroup action and their conjugacy check.

A state of level E (E inside F) is a pair ``(a, g)``: an exponent vector a
over E with entries at most e, and a class g of ``Z^(B \\ E)`` modulo the
depth-m kernel ``Gamma^E_m``. A prime q in E raises ``a_q`` (undefined past e);
a prime outside E translates g by ``-e_q``. The transition to a smaller level
E is ``(a, g) -> (a|E, lift(g) - a|(E' \\ E))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Mapping, Sequence

from ..exactla import Lattice, reduce_mod
from .boundary import level_basis, sort_primes
from .family import ConjugacyData
from .fields import NumberFieldData, presentation


class EquivarianceFailure(RuntimeError):
    def __init__(self, state, generator, reason: str):
        super().__init__(f"{reason} (state {state}, generator {generator})")
        self.state = state
        self.generator = generator
        self.reason = reason


State = tuple  # (E, a, g)


@dataclass
class TruncatedAction:
    order: tuple[str, ...]
    F: tuple[str, ...]
    depth: int
    bound: int
    kernels: dict[tuple[str, ...], Lattice]
    states: list[State]

    def levels(self):
        return [E for n in range(len(self.F) + 1) for E in combinations(self.F, n)]

    def act(self, state: State, q: str) -> State | None:
        E, a, g = state
        if q in E:
            i = E.index(q)
            if a[i] >= self.bound:
                return None
            return (E, a[:i] + (a[i] + 1,) + a[i + 1:], g)
        basis = level_basis(self.order, E)
        j = basis.index(q)
        g2 = g[:j] + (g[j] - 1,) + g[j + 1:]
        return (E, a, reduce_mod(g2, self.kernels[E]))

    def theta(self, state: State, E: tuple[str, ...]) -> State:
        E1, a, g = state
        src, dst = level_basis(self.order, E1), level_basis(self.order, E)
        val = dict(zip(src, g))
        for q, x in zip(E1, a):
            if q not in E:
                val[q] = -x
        g2 = tuple(val.get(q, 0) for q in dst)
        return (E, tuple(x for q, x in zip(E1, a) if q in E), reduce_mod(g2, self.kernels[E]))


def truncated_action(field: NumberFieldData, F: Sequence[str], depth: int, bound: int) -> TruncatedAction:
    F = field.sort_labels(F)
    kernels, states = {}, []
    for n in range(len(F) + 1):
        for E in combinations(F, n):
            L = field.kernel(E, (depth,) * len(E)) if E else field.kernel((), ())
            kernels[E] = L
            factors, _, section = presentation(L)
            reps = set()
            for y in product(*[range(d) for d in factors]):
                v = [sum(c * sec[j] for c, sec in zip(y, section)) for j in range(L.ambient_rank)]
                reps.add(reduce_mod(v, L))
            for a in product(range(bound + 1), repeat=len(E)):
                for g in sorted(reps):
                    states.append((E, a, g))
    return TruncatedAction(field.labels, F, depth, bound, kernels, states)


@dataclass(frozen=True)
class EquivarianceCertificate:
    states: int
    generators: int
    action_checks: int
    transition_checks: int

    def to_json(self) -> dict:
        return {"states": self.states, "generators": self.generators,
                "action_checks": self.action_checks, "transition_checks": self.transition_checks}


def build_truncated_conjugacy(fieldK: NumberFieldData, fieldL: NumberFieldData, data: ConjugacyData,
                              F: Sequence[str], depth: int, bound: int,
                              phi: Mapping[tuple, Mapping[str, Sequence[int]]] | None = None):
    """The state bijection ``(a, g) -> (chi(a), Phi^E(g))`` with an exhaustive check.

    Returns ``(mapping, actionK, actionL, certificate)``. ``phi`` overrides the
    generator images recorded in ``data``. Raises EquivarianceFailure when Phi is
    not well defined, not bijective, or fails to commute with a generator or a
    transition.
    """
    chi = data.chi
    F = fieldK.sort_labels(F)
    phi = data.phi if phi is None else phi
    for E in (E for n in range(len(F) + 1) for E in combinations(F, n)):
        if E not in phi:
            raise EquivarianceFailure(None, None, f"no conjugacy data for E={list(E)}")
    G = fieldL.sort_labels(chi[q] for q in F)
    AK = truncated_action(fieldK, F, depth, bound)
    AL = truncated_action(fieldL, G, depth, bound)

    def image_level(E):
        return sort_primes(fieldL.labels, (chi[q] for q in E))

    def phi_vec(E, g):
        dst = level_basis(fieldL.labels, image_level(E))
        out = [0] * len(dst)
        for q, x in zip(level_basis(fieldK.labels, E), g):
            for i, y in enumerate(phi[E][q]):
                out[i] += x * y
        return out

    for E, L in AK.kernels.items():
        E2 = image_level(E)
        for v in L.columns:
            if any(reduce_mod(phi_vec(E, v), AL.kernels[E2])):
                raise EquivarianceFailure(None, None, f"Phi^E is not well defined for E={list(E)}")

    def Phi(state):
        E, a, g = state
        E2 = image_level(E)
        a2 = dict(zip((chi[q] for q in E), a))
        return (E2, tuple(a2[q] for q in E2), reduce_mod(phi_vec(E, g), AL.kernels[E2]))

    mapping = {x: Phi(x) for x in AK.states}
    if len(set(mapping.values())) != len(mapping) or len(AL.states) != len(AK.states):
        raise EquivarianceFailure(None, None, "Phi is not a bijection of states")
    checks = 0
    for x in AK.states:
        for q in fieldK.labels:
            y = AK.act(x, q)
            lhs = None if y is None else mapping[y]
            rhs = AL.act(mapping[x], chi[q])
            if lhs != rhs:
                raise EquivarianceFailure(x, q, "action does not commute")
            checks += 1
    tchecks = 0
    for x in AK.states:
        E1 = x[0]
        for n in range(len(E1)):
            for E in combinations(E1, n):
                if AL.theta(mapping[x], image_level(E)) != mapping[AK.theta(x, E)]:
                    raise EquivarianceFailure(x, None, f"transition to E={list(E)} does not commute")
                tchecks += 1
    cert = EquivarianceCertificate(len(AK.states), len(fieldK.labels), checks, tchecks)
    return mapping, AK, AL, cert
