import copy
import json
from importlib.resources import files
from itertools import product

import pytest

from bcrecon.bostconnes import (DepthUnavailable, InconsistentTower, PrimeOverlap, SchemaError,
                                builtin_rationals, dumps_field, galois_chain, load_field_data,
                                relation_lattice)
from bcrecon.exactla import hnf_basis, lattice_index, standard_lattice
from oracles import principal_vectors_qsqrt_m5, reduced_forms

FIXTURE = files("bcrecon.data") / "q_sqrt_m5.json"


def qsqrt():
    return load_field_data(str(FIXTURE))


def residue_order(gens, M):
    """Order of the subgroup of (Z/M)^* generated by ``gens``, by closure."""
    seen, frontier = {1}, [1]
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = x * g % M
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    return len(seen)


def test_rationals_examples():
    Q = builtin_rationals([2, 5], [3], depth=2)
    e = Q.entry(["3"], [1])
    assert e.factors == (2,) and e.images["2"] == e.images["5"] == (1,)
    e = Q.entry(["3"], [2])
    assert e.factors == (6,)
    assert e.images["2"][0] % 6 in (1, 5)  # 2 is a primitive root mod 9
    assert Q.tower[((), ())].order == 1 and Q.h1 == 1
    with pytest.raises(PrimeOverlap):
        builtin_rationals([2, 3], [3])


@pytest.mark.parametrize("S, F, k", [((2, 5, 7), (3,), 3), ((2, 5, 7), (11,), 2), ((2, 5), (3, 7), 2)])
def test_rational_kernels_match_residues(S, F, k):
    Q = builtin_rationals(S, F, depth=k)
    M = 1
    for p in F:
        M *= p ** k
    Fs = tuple(str(p) for p in F)
    basis = Q.basis(Fs)
    K = Q.kernel(Fs, (k,) * len(F))
    gens = [int(q) for q in basis]
    assert lattice_index(K, standard_lattice(len(basis))) == residue_order(gens, M)
    for x in product(range(-2, 5), repeat=len(basis)):
        val = 1
        for g, e in zip(gens, x):
            val = val * pow(g, e, M) % M
        assert K.contains(x) == (val == 1)


def test_galois_chain_examples():
    Q = builtin_rationals([2, 5], [3], depth=3)
    c = galois_chain(Q, ["3"])
    assert c.level(1) == hnf_basis([(1, 1), (0, 2)], 2)
    assert c.primes == (2, 3)
    c = galois_chain(Q, [])
    assert all(L == standard_lattice(3) for L in c.levels)
    c = galois_chain(qsqrt(), [])
    assert all(lattice_index(L, standard_lattice(4)) == 2 for L in c.levels)
    with pytest.raises(DepthUnavailable):
        galois_chain(Q, ["3"], depth=4)


def test_fixture_class_group_independently():
    data = qsqrt()
    assert data.h1 == 2 == len(reduced_forms(-20))
    K = data.kernel((), ())
    # p5 = (sqrt(-5)) is principal; p2, p3, p7 are not since x^2 + 5y^2 misses 2, 3, 7
    assert not any(x * x + 5 * y * y in (2, 3, 7) for x in range(3) for y in range(2))
    assert K.contains((0, 0, 1, 0))
    for v in [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1)]:
        assert not K.contains(v)
    assert lattice_index(K, standard_lattice(4)) == 2
    for v, _ in principal_vectors_qsqrt_m5(15, 1):
        assert K.contains(v + (0,))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_fixture_ray_classes_independently(k):
    data = qsqrt()
    K = data.kernel(("p7",), (k,))
    M = 7 ** k
    assert lattice_index(K, standard_lattice(3)) == 2 * (6 * 7 ** (k - 1)) // 2
    pairs = principal_vectors_qsqrt_m5(15, k)
    assert len(pairs) > 40
    for (va, ra), (vb, rb) in product(pairs[:40], repeat=2):
        diff = tuple(a - b for a, b in zip(va, vb))
        assert K.contains(diff) == ((ra - rb) % M == 0 or (ra + rb) % M == 0)


def test_round_trip_is_bit_exact():
    text = FIXTURE.read_text(encoding="utf-8")
    assert dumps_field(qsqrt()) == text
    Q = builtin_rationals([2, 5, 7], [3, 11], depth=2)
    assert dumps_field(load_field_data(json.loads(dumps_field(Q)))) == dumps_field(Q)


def test_validation_rejects_bad_towers():
    raw = json.loads(FIXTURE.read_text(encoding="utf-8"))
    bad = copy.deepcopy(raw)
    # the transition from level 2 to level 1 multiplied by 2 is no longer surjective
    entry = next(e for e in bad["tower"] if e["m"] == [2])
    tr = next(t for t in entry["transitions"] if t["m"] == [1])
    tr["matrix"] = [[2]]
    with pytest.raises(InconsistentTower) as err:
        load_field_data(bad)
    assert err.value.F == ("p7",) and err.value.m == (2,)
    bad = copy.deepcopy(raw)
    bad["h1"] = 1
    with pytest.raises(InconsistentTower):
        load_field_data(bad)
    bad = copy.deepcopy(raw)
    del bad["tower"][0]["structure"]
    with pytest.raises(SchemaError):
        load_field_data(bad)
    bad = copy.deepcopy(raw)
    bad["tower"][1]["images"]["p2"] = [0]
    bad["tower"][1]["images"]["p3"] = [0]
    bad["tower"][1]["images"]["p5"] = [2]
    with pytest.raises(InconsistentTower):
        load_field_data(bad)


def test_relation_lattice_cyclic():
    # Z^2 -> Z/6 sending e1 -> 2, e2 -> 3
    L = relation_lattice(2, 0, lambda h, i: (h + (2, 3)[i]) % 6)
    assert lattice_index(L, standard_lattice(2)) == 6
    assert all(L.contains(v) == ((2 * v[0] + 3 * v[1]) % 6 == 0) for v in product(range(-3, 4), repeat=2))
