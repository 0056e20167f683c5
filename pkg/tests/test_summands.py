from itertools import combinations, product
from math import gcd

import numpy as np
import pytest

from bcrecon.exactla import hnf_basis, is_saturated
from bcrecon.exterior import wedge_vectors
from bcrecon.summands import box_array, summand_wedges


def brute(s, r, bound):
    box = [v for v in product(range(-bound, bound + 1), repeat=s) if any(v)]
    out = set()
    for combo in combinations(box, r):
        w = wedge_vectors(combo, s).coordinates(r)
        w = [int(x) for x in w]
        if not any(w):
            continue
        g = 0
        for x in w:
            g = gcd(g, x)
        if g != 1:
            continue
        first = next(x for x in w if x)
        out.add(tuple(w) if first > 0 else tuple(-x for x in w))
    return out


def test_box_is_up_to_sign():
    B = box_array(3, 2)
    assert len(B) == (5 ** 3 - 1) // 2
    assert len({tuple(v) for v in B} | {tuple(-v) for v in B}) == 5 ** 3 - 1


@pytest.mark.parametrize("s, r, bound", [(2, 1, 2), (3, 1, 2), (3, 2, 2), (3, 2, 1), (4, 2, 1), (4, 3, 1)])
def test_matches_brute_force(s, r, bound):
    W, V = summand_wedges(s, r, bound)
    assert {tuple(w) for w in W.tolist()} == brute(s, r, bound)
    for w, basis in zip(W.tolist(), V.tolist()):
        got = [int(x) for x in wedge_vectors(basis, s).coordinates(r)]
        assert got == w or got == [-x for x in w]
        assert is_saturated(hnf_basis(basis, s))


def test_full_rank_summand():
    W, V = summand_wedges(3, 3)
    assert W.tolist() == [[1]] and np.array_equal(V[0], np.eye(3))
