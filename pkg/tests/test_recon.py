import random

import pytest
from hypothesis import given, settings, strategies as st

from bcrecon.completions import (cofinal_equivalent, constant_chain, limit_structure,
                                 validate_chain)
from bcrecon.exactla import congruence_kernel, hnf_basis, lattice_intersect, standard_lattice
from bcrecon.exterior import OrientedSummand
from bcrecon.fixtures import FixtureSpec, PrimeSpec, random_completion
from bcrecon.kgroups import KSubgroup, k_from_chain
from bcrecon.recon import (BudgetExhausted, EmptyFamily, ReconstructionError, analyze_fg,
                           find_summand_family, reconstruct_appendix, reconstruct_fg,
                           reconstruct_free, reconstruct_proN, reconstruct_rank1)


def diag(*ds):
    return hnf_basis([[d if i == j else 0 for j in range(len(ds))] for i, d in enumerate(ds)], len(ds))


def pchain(fn, primes, depth=5):
    return validate_chain([fn(k) for k in range(1, depth + 1)], primes)


def kernel(rows, mods, s=2):
    return congruence_kernel(rows, mods, s)


A = pchain(lambda k: diag(2 ** k, 1), [2])
FREE2 = pchain(lambda k: diag(2 ** k, 2 ** k), [2])
X2Y = pchain(lambda k: kernel([[1, 2]], [2 ** k]), [2])
SKEW = pchain(lambda k: kernel([[1, 0], [1, 2]], [2 ** k, 2 ** k]), [2])
TORS = pchain(lambda k: kernel([[1, 0], [0, 1]], [2 ** k, 2]), [2])   # Z_2 x Z/2
TORS4 = pchain(lambda k: kernel([[1, 0], [0, 1]], [2 ** k, 2 ** min(k, 2)]), [2])
MIXED = pchain(lambda k: lattice_intersect(kernel([[1, 0]], [2 ** k]), kernel([[0, 1]], [3])), [2, 3])


def same(c, truth, depth=None):
    return bool(cofinal_equivalent(c, truth, depth or min(c.depth, truth.depth) - 1))


def test_rank1_examples():
    for p in (2, 3):
        c = pchain(lambda k: diag(p ** k), [p])
        assert reconstruct_rank1(k_from_chain(c), depth=4).levels == c.levels[:4]
    assert reconstruct_rank1(k_from_chain(A), depth=4).levels == A.levels[:4]
    assert same(reconstruct_rank1(k_from_chain(X2Y)), X2Y)


def test_family_examples():
    fam = find_summand_family(k_from_chain(FREE2), 1, 1)
    lats = {m.lattice for m in fam.members}
    assert hnf_basis([(1, 0)], 2) in lats or hnf_basis([(0, 1)], 2) in lats
    fam = find_summand_family(k_from_chain(A), 0, 1)
    assert fam.members[0] == OrientedSummand.empty(2)
    fam = find_summand_family(k_from_chain(X2Y), 0, 1)
    assert fam.members[0].rank == 0 and fam.witnesses[0][0] % 2 == 1


def test_free_examples():
    K = k_from_chain(FREE2)
    fam = find_summand_family(K, 1, 1)
    assert reconstruct_free(K, 2, fam, depth=4).levels == FREE2.levels[:4]
    K = k_from_chain(A)
    fam = find_summand_family(K, 0, 1)
    assert reconstruct_free(K, 1, fam, depth=4).levels == reconstruct_rank1(K, depth=4).levels
    K = k_from_chain(SKEW)
    assert same(reconstruct_free(K, 2, find_summand_family(K, 1, 1)), SKEW)


def test_analyze_examples():
    a = analyze_fg(k_from_chain(X2Y))
    assert (a.d, a.N, a.Pi) == (1, 1, standard_lattice(2))
    a = analyze_fg(k_from_chain(TORS))
    assert (a.d, a.N) == (1, 2)
    assert a.Lambda.lattice == hnf_basis([(1, 0)], 2)
    assert a.Pi == diag(1, 2)
    a = analyze_fg(k_from_chain(constant_chain(diag(2), [2], 4)))
    assert (a.d, a.N, a.Pi, a.Lambda.rank) == (0, 2, diag(2), 0)


@pytest.mark.parametrize("truth", [X2Y, TORS, constant_chain(diag(2), [2], 5), TORS4, SKEW])
def test_fg_round_trip(truth):
    assert same(reconstruct_fg(k_from_chain(truth)), truth)


def test_trivial_completion():
    c = constant_chain(standard_lattice(3), [], 3)
    assert reconstruct_proN(k_from_chain(c)).levels[0] == standard_lattice(3)
    assert reconstruct_appendix(k_from_chain(c)).levels == c.levels


def test_proN_examples():
    six = pchain(lambda k: diag(6 ** k), [2, 3])
    assert same(reconstruct_proN(k_from_chain(six)), six)
    K = k_from_chain(X2Y)
    assert reconstruct_proN(K).levels == reconstruct_fg(K).levels
    assert same(reconstruct_proN(k_from_chain(MIXED)), MIXED)


def test_appendix_examples():
    assert reconstruct_appendix(k_from_chain(A)).levels == A.levels
    c = reconstruct_appendix(k_from_chain(X2Y))
    assert same(c, reconstruct_proN(k_from_chain(X2Y)))


def test_reconstruction_reads_only_loaded_data():
    K = KSubgroup.from_dict(k_from_chain(TORS).to_dict(strip_provenance=True))
    assert K.provenance == "loaded"
    assert same(reconstruct_proN(K, budget=K.depth), TORS)


def test_degenerate_inputs_raise():
    K = k_from_chain(A)
    with pytest.raises(BudgetExhausted):
        reconstruct_appendix(K, depth=K.depth + 1)
    with pytest.raises(EmptyFamily):
        find_summand_family(k_from_chain(FREE2), 1, 2 ** 5)
    # every stored coordinate wedge is 2-divisible without bound
    with pytest.raises(ReconstructionError):
        analyze_fg(k_from_chain(FREE2, max_degree=1))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_round_trip_property(seed):
    rng = random.Random(seed)
    s = rng.randint(1, 3)
    parts = []
    for p in rng.sample([2, 3, 5], rng.randint(1, 2)):
        d = rng.randint(0, s)
        tor = tuple(sorted(rng.randint(1, 3) for _ in range(rng.randint(0, s - d))))
        parts.append(PrimeSpec(p, d, tor))
    depth = max([t for x in parts for t in x.torsion], default=0) + 3
    truth, _ = random_completion(FixtureSpec(s, tuple(parts), min(depth, 6), seed))
    limit_structure(truth)
    out = reconstruct_proN(k_from_chain(truth))
    assert same(out, truth)
