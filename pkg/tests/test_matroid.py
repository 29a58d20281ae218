from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from matprophet import gf
from matprophet.graph import Graph, complete_graph, cycle_graph, path_graph
from matprophet.matroid import (CographicMatroid, ExplicitMatroid, GraphicMatroid, InputError, UniformMatroid,
                                VectorMatroid, basis_exchange_violations, greedy_max_weight, rank_axiom_violations,
                                same_ranks, subsets)

from conftest import brute_max_weight, forest_size, gf2_rank, random_binary_matroid, random_simple_graph

TRIANGLE = Graph(3, ((0, 1), (1, 2), (0, 2)))


def test_rank_examples():
    assert GraphicMatroid(TRIANGLE).rank([0, 1, 2]) == 2
    assert UniformMatroid(4, 2).rank([]) == 0
    assert VectorMatroid(2, [(1, 0), (0, 1), (1, 1)]).rank([0, 1, 2]) == 2


def test_rank_rejects_unknown_element():
    with pytest.raises(InputError):
        GraphicMatroid(TRIANGLE).rank([3])


def test_vector_rank_matches_independent_elimination(rng):
    for _ in range(30):
        m = random_binary_matroid(rng, 7, 4)
        for s in subsets(7):
            assert m.rank(s) == gf2_rank([m.columns[i] for i in sorted(s)])


def test_graphic_rank_matches_forest_count(rng):
    g = random_simple_graph(rng, 6, 9)
    m = GraphicMatroid(g)
    for s in subsets(g.m):
        assert m.rank(s) == forest_size(g.vertices, [g.edges[i] for i in sorted(s)])


def test_cographic_is_dual_of_graphic():
    g = complete_graph(4)
    cg = CographicMatroid(g)
    dual = GraphicMatroid(g).dual()
    comps = g.components()
    for s in subsets(g.m):
        rest = [i for i in range(g.m) if i not in s]
        assert cg.rank(s) == len(s) - (g.components(rest) - comps)
        assert dual.rank(s) == cg.rank(s)


@pytest.mark.parametrize("make", [
    lambda: GraphicMatroid(complete_graph(4)),
    lambda: CographicMatroid(Graph(4, ((0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (0, 2)))),
    lambda: UniformMatroid(6, 3),
    lambda: VectorMatroid(3, [(1, 0, 2), (0, 1, 1), (1, 1, 0), (2, 2, 2), (0, 0, 0), (1, 2, 1)]),
    lambda: ExplicitMatroid(4, [[0, 1], [0, 2], [1, 2], [0, 3], [1, 3]]),
])
def test_double_dual_and_minor_identities(make):
    m = make()
    assert same_ranks(m.dual().dual(), m)
    assert same_ranks(m.contract([]), m)
    full = frozenset(range(m.n))
    for a in [frozenset(), frozenset([0]), frozenset([0, 2]), frozenset([1, 3])]:
        rest = sorted(full - a)
        con = m.contract(a)
        res = m.restrict(rest)
        for s in subsets(len(rest)):
            orig = {rest[j] for j in s}
            assert con.rank(s) == m.rank(orig | a) - m.rank(a)
            assert res.rank(s) == m.rank(orig)
    # dual rank formula r*(A) = |A| + r(E - A) - r(E)
    d = m.dual()
    for s in subsets(m.n):
        assert d.rank(s) == len(s) + m.rank(full - s) - m.full_rank()


def test_restrict_uniform():
    r = UniformMatroid(4, 2).restrict([0, 1, 3])
    assert isinstance(r, UniformMatroid) and (r.n, r.k) == (3, 2)


def test_vector_contraction_uses_quotient_coordinates(rng):
    for _ in range(10):
        m = random_binary_matroid(rng, 7, 4)
        con = m.contract([0, 1])
        assert con.dim == 4 - m.rank([0, 1])
        for s in subsets(5):
            assert con.rank(s) == m.rank({j + 2 for j in s} | {0, 1}) - m.rank([0, 1])


def test_greedy_examples():
    assert greedy_max_weight(UniformMatroid(3, 1), [5, 2, 7]) == (2,)
    assert greedy_max_weight(GraphicMatroid(TRIANGLE), [3, 2, 1]) == (0, 1)


def test_greedy_ties_by_identifier():
    assert greedy_max_weight(UniformMatroid(3, 1), [4, 4, 4]) == (0,)


def test_greedy_rejects_negative_weight():
    with pytest.raises(InputError):
        greedy_max_weight(UniformMatroid(2, 1), [1, -1])


def test_greedy_matches_enumeration(rng):
    for _ in range(40):
        m = random_binary_matroid(rng, 8, 4)
        w = rng.integers(0, 6, 8).astype(float)
        chosen = greedy_max_weight(m, w)
        assert m.is_independent(chosen)
        assert sum(w[i] for i in chosen) == pytest.approx(brute_max_weight(m, w))


def test_connectivity_examples():
    m = GraphicMatroid(path_graph(3))
    assert m.connectivity([]) == 0
    assert m.connectivity([0]) == 0
    # two edges in series inside a cycle are connected
    c = GraphicMatroid(cycle_graph(3))
    assert c.connectivity([0]) == 1


def test_connectivity_equals_subspace_intersection(rng):
    for _ in range(20):
        m = random_binary_matroid(rng, 7, 4)
        for s in subsets(7):
            rest = [i for i in range(7) if i not in s]
            inter = gf.intersect_spans([m.columns[i] for i in s], [m.columns[i] for i in rest], 2, 4)
            assert m.connectivity(s) == len(inter)
            assert m.connectivity(s) == m.connectivity(rest)


def test_local_connectivity():
    m = UniformMatroid(4, 2)
    assert m.local_connectivity([0, 1], [2, 3]) == 2


def test_closure_loops_parallel():
    m = GraphicMatroid(complete_graph(4))
    assert m.closure(range(6)) == frozenset(range(6))
    assert m.closure([0, 1]) == frozenset([0, 1, 3])
    par = GraphicMatroid(Graph(2, ((0, 1), (0, 1))))
    assert par.parallel_classes == ((0, 1),)
    loopy = GraphicMatroid(Graph(2, ((0, 0), (0, 1))))
    assert loopy.loops == frozenset([0])


def test_cographic_four_cycle_single_parallel_class():
    m = CographicMatroid(cycle_graph(4))
    assert m.parallel_classes == ((0, 1, 2, 3),)
    for a, b in combinations(range(4), 2):
        assert m.rank([a]) == m.rank([b]) == m.rank([a, b]) == 1


def test_simplify_keeps_lowest_representative():
    g = Graph(3, ((0, 1), (0, 1), (1, 2), (2, 2), (1, 2)))
    s, keep = GraphicMatroid(g).simplify()
    assert keep == [0, 2]
    assert s.n == 2 and s.full_rank() == 2


def test_explicit_limit_and_validation():
    with pytest.raises(InputError):
        ExplicitMatroid(13, [[0]])
    with pytest.raises(InputError):
        ExplicitMatroid(3, [[0], [0, 1]])


def test_axiom_checks_flag_non_matroid():
    bad = ExplicitMatroid(4, [[0, 1], [2, 3]])
    assert basis_exchange_violations(bad)
    good = ExplicitMatroid(4, [[0, 1], [0, 2], [1, 2], [0, 3], [1, 3], [2, 3]])
    assert basis_exchange_violations(good) == []


def test_vector_entries_validated():
    with pytest.raises(InputError):
        VectorMatroid(4, [(1, 0)])
    with pytest.raises(InputError):
        VectorMatroid(3, [(1, 3)])


@st.composite
def binary_matrices(draw):
    n = draw(st.integers(1, 8))
    d = draw(st.integers(1, 4))
    cols = draw(st.lists(st.tuples(*[st.integers(0, 1)] * d), min_size=n, max_size=n))
    return VectorMatroid(2, cols)


@settings(max_examples=40, deadline=None)
@given(binary_matrices())
def test_rank_axioms_hold_for_vector_matroids(m):
    assert rank_axiom_violations(m) == []
    assert same_ranks(m.dual().dual(), m)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=9))
def test_rank_axioms_hold_for_graphs(v, edges):
    edges = [(a % v, b % v) for a, b in edges]
    g = Graph(v, tuple(edges))
    for m in (GraphicMatroid(g), CographicMatroid(g)):
        assert rank_axiom_violations(m) == []
    assert same_ranks(GraphicMatroid(g).dual(), CographicMatroid(g))


@settings(max_examples=30, deadline=None)
@given(binary_matrices(), st.data())
def test_connectivity_symmetric(m, data):
    s = data.draw(st.sets(st.integers(0, m.n - 1)))
    rest = [i for i in range(m.n) if i not in s]
    assert m.connectivity(s) == m.connectivity(rest)


@settings(max_examples=30, deadline=None)
@given(binary_matrices(), st.data())
def test_greedy_optimal_property(m, data):
    w = data.draw(st.lists(st.integers(0, 9), min_size=m.n, max_size=m.n))
    chosen = greedy_max_weight(m, w)
    assert m.is_independent(chosen)
    assert sum(w[i] for i in chosen) == brute_max_weight(m, w)


def test_independence_table_matches_rank(rng):
    m = random_binary_matroid(rng, 9, 5)
    table = m.independence_table
    for mask in range(1 << 9):
        s = [i for i in range(9) if mask >> i & 1]
        assert bool(table[mask]) == m.is_independent(s)


def test_builders_agree_above_table_limit(rng):
    g = random_simple_graph(rng, 8, 20)
    m = GraphicMatroid(g)
    w = rng.random(20)
    chosen = greedy_max_weight(m, w)
    assert len(chosen) == m.full_rank()
    v = m.to_vector(2)
    assert greedy_max_weight(v, w) == chosen
    np.testing.assert_allclose(sum(w[i] for i in chosen), sum(w[i] for i in greedy_max_weight(m.restrict(range(20)), w)))
