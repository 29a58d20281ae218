from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from matprophet import gf

from conftest import gf2_rank


def test_prime_check():
    assert [p for p in range(20) if gf.is_prime(p)] == [2, 3, 5, 7, 11, 13, 17, 19]
    with pytest.raises(ValueError):
        gf.check_prime(9)


def test_rank_over_f3():
    vecs = [(1, 2, 0), (2, 1, 0), (0, 0, 1)]
    # (2,1,0) = 2 * (1,2,0) mod 3
    assert gf.rank(vecs, 3) == 2


def test_nullspace_annihilates():
    rows = [(1, 1, 0, 1), (0, 1, 1, 1)]
    ns = gf.nullspace(rows, 2, 4)
    assert len(ns) == 2
    for v in ns:
        assert all(gf.dot(r, v, 2) == 0 for r in rows)


def test_coordinates_roundtrip():
    basis = [(1, 0, 2), (0, 1, 1)]
    v = gf.combine((2, 1), basis, 3, 3)
    assert gf.coordinates(basis, v, 3) == (2, 1)


def test_intersect_spans_dimension():
    a = [(1, 0, 0), (0, 1, 0)]
    b = [(0, 1, 0), (0, 0, 1)]
    inter = gf.intersect_spans(a, b, 2, 3)
    assert len(inter) == 1 and gf.normalize(inter[0], 2) == (0, 1, 0)


vectors = st.lists(st.tuples(*[st.integers(0, 1)] * 5), max_size=7)


@settings(max_examples=60, deadline=None)
@given(vectors)
def test_rank_matches_bitwise_elimination(vs):
    assert gf.rank(vs, 2, 5) == gf2_rank(vs)


@settings(max_examples=60, deadline=None)
@given(vectors, vectors)
def test_intersection_dimension_formula(a, b):
    inter = gf.intersect_spans(a, b, 2, 5)
    assert len(inter) == gf.rank(a, 2, 5) + gf.rank(b, 2, 5) - gf.rank(a + b, 2, 5)
    for v in inter:
        assert gf.rank(a + [v], 2, 5) == gf.rank(a, 2, 5)
        assert gf.rank(b + [v], 2, 5) == gf.rank(b, 2, 5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(*[st.integers(0, 2)] * 4), min_size=1, max_size=4))
def test_annihilator_over_f3(vs):
    ann = gf.annihilator(vs, 3, 4)
    assert len(ann) == 4 - gf.rank(vs, 3, 4)
    for a in ann:
        assert all(gf.dot(a, v, 3) == 0 for v in vs)


def test_all_vectors_count():
    assert len(list(gf.all_vectors(3, 3))) == 27
    assert len(set(gf.all_vectors(4, 2))) == 16


def test_echelon_basis_insert():
    eb = gf.EchelonBasis(3, 2)
    assert eb.insert((1, 1, 0))
    assert eb.insert((0, 1, 1))
    assert not eb.insert((1, 0, 1))
    assert eb.contains((1, 0, 1)) and len(eb) == 2
    for v in itertools.product(range(2), repeat=3):
        assert eb.contains(v) == (gf.rank([(1, 1, 0), (0, 1, 1), v], 2) == 2)
