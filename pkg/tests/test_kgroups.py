import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bcrecon.completions import INF, constant_chain, validate_chain
from bcrecon.exactla import congruence_kernel, hnf_basis, standard_lattice
from bcrecon.exterior import ExtElement
from bcrecon.fixtures import FixtureSpec, PrimeSpec, random_completion
from bcrecon.kgroups import (KSubgroup, ZeroElement, batch_delta, contains, delta,
                             k_from_chain, restrict_to_p)
from bcrecon.completions import PrimeNotInN, valuation
from bcrecon.summands import summand_wedges
from oracles import stabilized, summand_index_direct, summand_index_exponents


def diag(*ds):
    return hnf_basis([[d if i == j else 0 for j in range(len(ds))] for i, d in enumerate(ds)], len(ds))


def pchain(fn, primes, depth=5):
    return validate_chain([fn(k) for k in range(1, depth + 1)], primes)


X2Y = pchain(lambda k: congruence_kernel([[1, 2]], [2 ** k], 2), [2])  # f(x, y) = x + 2y
A = pchain(lambda k: diag(2 ** k, 1), [2])


def test_k_from_chain_examples():
    K = k_from_chain(A)
    for k in range(A.depth + 1):
        assert K.level(1, k) == hnf_basis([(1, 0), (0, Fraction(1, 2 ** k))], 2)
    K = k_from_chain(pchain(lambda k: diag(3 ** k), [3]))
    assert all(K.level(1, k) == standard_lattice(1) for k in range(K.depth + 1))
    K = k_from_chain(constant_chain(diag(2, 3), [2, 3], 2), max_degree=0)
    assert K.level(0, 1) == hnf_basis([(Fraction(1, 6),)], 1)


def test_delta_examples():
    K = k_from_chain(A)
    r = delta(K, ExtElement.vector((0, 1)))
    assert r.certified and r.exponent(2) is INF
    r = delta(K, ExtElement.vector((1, 0)))
    assert r.certified and r.exponent(2) == 0
    r = delta(k_from_chain(X2Y), ExtElement.vector((0, 1)))
    assert r.certified and r.exponent(2) == 1
    with pytest.raises(ZeroElement):
        delta(K, ExtElement(2))


def test_contains_examples():
    assert contains(k_from_chain(pchain(lambda k: diag(2 ** k), [2])), ExtElement.vector((1,)))
    K = k_from_chain(A)
    assert contains(K, ExtElement.vector((0, Fraction(1, 2))))
    assert not contains(K, ExtElement.vector((Fraction(1, 2), 0)))


def test_restrict_examples():
    K = k_from_chain(pchain(lambda k: diag(6 ** k, 1), [2, 3]))
    assert restrict_to_p(K, 2).levels == k_from_chain(A).levels
    KA = k_from_chain(A)
    assert restrict_to_p(KA, 2).levels == KA.levels
    K = k_from_chain(constant_chain(diag(2, 3), [2, 3], 3))
    assert restrict_to_p(K, 3).levels == k_from_chain(constant_chain(diag(1, 3), [3], 3)).levels
    with pytest.raises(PrimeNotInN):
        restrict_to_p(KA, 5)


def test_loaded_dump_is_uncertified():
    K = KSubgroup.from_dict(k_from_chain(A).to_dict(strip_provenance=True))
    assert K.provenance == "loaded" and K.certificates is None
    assert K.levels == k_from_chain(A).levels
    r = delta(K, ExtElement.vector((1, 0)), budget=3)
    assert not r.certified and r.exponent(2) == 0


def _spec(seed):
    rng = random.Random(seed)
    s = rng.randint(1, 3)
    p = rng.choice([2, 3, 5])
    d = rng.randint(0, s)
    tor = tuple(sorted(rng.randint(1, 2) for _ in range(rng.randint(0 if d else 1, s - d))))
    return FixtureSpec(s, (PrimeSpec(p, d, tor),), max(tor, default=0) + 3, seed)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_sandwich(seed):
    c, _ = random_completion(_spec(seed))
    K = k_from_chain(c)
    p = c.primes[0]
    for n, levels in K.levels.items():
        for k, L in enumerate(levels):
            assert all(L.contains(v) for v in standard_lattice(L.ambient_rank).basis())
            assert p ** valuation(c.index(k), p) % L.denominator == 0
            if k:
                assert levels[k - 1].issubset(L)


@given(st.integers(0, 10 ** 6), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_delta_homogeneity(seed, j):
    c, _ = random_completion(_spec(seed))
    K = k_from_chain(c)
    p = c.primes[0]
    rng = random.Random(seed)
    v = [rng.randint(-2, 2) for _ in range(c.ambient_rank)]
    if not any(v):
        return
    a = delta(K, ExtElement.vector(v)).exponent(p)
    b = delta(K, ExtElement.vector([p ** j * x for x in v])).exponent(p)
    assert b is INF if a is INF else b == a + j


@given(st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_summand_delta_matches_lattice_index(seed):
    c, _ = random_completion(_spec(seed))
    K = k_from_chain(c)
    p, s = c.primes[0], c.ambient_rank
    for d in range(1, s + 1):
        W, V = summand_wedges(s, d)
        vals, fin, cert = batch_delta(K, d, W, p)
        assert cert.all()
        exps = [summand_index_exponents(V, [list(b) for b in c.level(k).columns], p,
                                        valuation(c.index(k), p)) for k in range(c.depth + 1)]
        assert np.array_equal(np.where(fin, vals, -1), stabilized(exps, K.certificates[p]))
        for i in range(0, len(V), max(1, len(V) // 6)):
            direct = summand_index_direct([list(map(int, r)) for r in V[i]], c.level(c.depth), s)
            assert direct == p ** exps[-1][i]
        x = ExtElement.from_coordinates(s, d, [int(t) for t in W[0]])
        r = delta(K, x)
        assert (r.exponent(p) is INF) == (not fin[0])
        if fin[0]:
            assert r.exponent(p) == vals[0]
