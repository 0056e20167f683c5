from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from bcrecon.exterior import (AmbientMismatch, ElementInSet, ExtElement, NotDirectSummand,
                              OrientedSummand, WrongDegree, beta_summand, dual_vector,
                              from_dual_vector, inversion_count, subsets, wedge, wedge_vectors)

e = lambda s, *I: ExtElement.basis(s, I)


def test_wedge_examples():
    e1, e2 = ExtElement.vector((1, 0)), ExtElement.vector((0, 1))
    assert wedge(e1, e2) == e(2, 0, 1)
    assert wedge(e2, e1) == e(2, 0, 1) * -1
    assert wedge(ExtElement.vector((1, 1)), ExtElement.vector((1, -1))) == e(2, 0, 1) * -2
    with pytest.raises(AmbientMismatch):
        wedge(e1, ExtElement.vector((1, 0, 0)))


def test_beta_examples():
    assert beta_summand(OrientedSummand.from_basis([(1, 0)], 2)) == e(2, 0)
    a = beta_summand(OrientedSummand.from_basis([(1, 0), (0, 1)], 2))
    b = beta_summand(OrientedSummand.from_basis([(1, 1), (0, 1)], 2))
    assert a == b == e(2, 0, 1)
    with pytest.raises(NotDirectSummand):
        OrientedSummand.from_basis([(2, 0)], 2)
    assert beta_summand(OrientedSummand.empty(3)) == ExtElement.unit(3)


def test_dual_vector_examples():
    assert dual_vector(e(2, 1)) == [1, 0]
    assert dual_vector(e(2, 0)) == [0, -1]
    assert dual_vector(e(3, 1, 2)) == [1, 0, 0]
    with pytest.raises(WrongDegree):
        dual_vector(e(3, 0))


def test_inversion_count_examples():
    order = ["a", "p", "b", "q"]
    assert inversion_count({"q"}, "p", order) == 1
    assert inversion_count(set(), "p", order) == 0
    assert inversion_count({"a", "b"}, "p", order) == 1
    with pytest.raises(ElementInSet):
        inversion_count({"p"}, "p", order)


def test_serialization_round_trip():
    x = e(3, 0, 2) * Fraction(3, 4) + e(3, 1) + ExtElement.unit(3) * -2
    assert ExtElement.from_dict(x.to_dict()) == x


vectors = st.lists(st.integers(-3, 3), min_size=4, max_size=4)


@st.composite
def elements(draw, s=4):
    terms = {}
    for _ in range(draw(st.integers(0, 4))):
        n = draw(st.integers(0, s))
        I = draw(st.sampled_from(subsets(s, n)))
        terms[I] = Fraction(draw(st.integers(-4, 4)), draw(st.integers(1, 3)))
    return ExtElement(s, terms)


@st.composite
def homogeneous(draw, s=4):
    n = draw(st.integers(0, s))
    coords = [draw(st.integers(-3, 3)) for _ in subsets(s, n)]
    return n, ExtElement.from_coordinates(s, n, coords)


@given(homogeneous(), homogeneous(), elements())
@settings(max_examples=200, deadline=None)
def test_wedge_graded_commutative_and_associative(a, b, c):
    (m, x), (n, y) = a, b
    assert wedge(x, y) == wedge(y, x) * (-1) ** (m * n)
    assert wedge(wedge(x, y), c) == wedge(x, wedge(y, c))


@given(vectors)
@settings(max_examples=100, deadline=None)
def test_vector_squares_to_zero(v):
    x = ExtElement.vector(v)
    assert wedge(x, x).is_zero()


@given(st.lists(vectors, min_size=2, max_size=3), st.integers(-3, 3))
@settings(max_examples=100, deadline=None)
def test_beta_orientation(basis, c):
    w = wedge_vectors(basis, 4)
    swapped = [basis[1], basis[0]] + basis[2:]
    assert wedge_vectors(swapped, 4) == w * -1
    sheared = [basis[0], [y + c * x for x, y in zip(basis[0], basis[1])]] + basis[2:]
    assert wedge_vectors(sheared, 4) == w


@given(st.lists(st.integers(-5, 5), min_size=4, max_size=4), st.lists(st.integers(-5, 5), min_size=4, max_size=4))
@settings(max_examples=100, deadline=None)
def test_dual_vector_round_trip_and_pairing(x, z):
    omega = from_dual_vector(x)
    assert dual_vector(omega) == x
    vol = wedge(ExtElement.vector(z), omega).coefficient((0, 1, 2, 3))
    assert vol == sum(a * b for a, b in zip(x, z))
