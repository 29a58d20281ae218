"""Shared oracles and instance generators for the test-suite.

The helpers here deliberately avoid the package's fast paths: independence is
decided from scratch by Gaussian elimination or union-find written inline, and
maxima are taken over explicit subset enumerations.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np
import pytest

from matprophet import gf
from matprophet.composition import GuaranteedMechanism, gamma_guarantee
from matprophet.deltasum import delta_sum
from matprophet.distributions import Discrete
from matprophet.graph import Graph, complete_graph
from matprophet.matroid import CographicMatroid, VectorMatroid, max_density, subsets


def gf2_rank(vectors) -> int:
    rows = [int("".join(str(x % 2) for x in v) or "0", 2) for v in vectors]
    rank = 0
    while rows:
        pivot = max(rows)
        if pivot == 0:
            break
        rows.remove(pivot)
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if r >> top & 1 else r for r in rows]
        rank += 1
    return rank


def forest_size(vertices: int, edges) -> int:
    parent = list(range(vertices))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    r = 0
    for u, v in edges:
        a, b = find(u), find(v)
        if a != b:
            parent[a] = b
            r += 1
    return r


def independent_sets(m) -> list[frozenset]:
    out = []
    for size in range(m.n + 1):
        for s in combinations(range(m.n), size):
            if m.rank(s) == size:
                out.append(frozenset(s))
    return out


def brute_max_weight(m, w) -> float:
    return max(sum(w[i] for i in s) for s in independent_sets(m))


def reference_gambler(m, thresholds, order, values):
    """Step-by-step scan that decides independence from the full list of independent sets."""
    indep = set(independent_sets(m))
    chosen = frozenset()
    for i in order:
        if values[i] >= thresholds[i] and chosen | {i} in indep:
            chosen = chosen | {i}
    return chosen, sum(values[i] for i in chosen)


def random_binary_matroid(rng, n: int, d: int) -> VectorMatroid:
    cols = [tuple(int(x) for x in rng.integers(0, 2, d)) for _ in range(n)]
    return VectorMatroid(2, cols)


def random_simple_graph(rng, vertices: int, edges: int) -> Graph:
    pairs = [(u, v) for u in range(vertices) for v in range(u + 1, vertices)]
    pick = rng.choice(len(pairs), size=edges, replace=False)
    return Graph(vertices, tuple(pairs[i] for i in sorted(pick)))


def random_discrete(rng, points: int = 3, high: int = 10) -> Discrete:
    vals = rng.choice(np.arange(high + 1), size=points, replace=False)
    probs = rng.dirichlet(np.ones(points))
    probs = probs / probs.sum()
    probs[-1] = 1.0 - probs[:-1].sum()
    return Discrete(vals.tolist(), probs.tolist())


def brute_prophet(m, dists) -> float:
    """E[max weight] by explicit product enumeration and subset maximization."""
    from itertools import product
    sets = independent_sets(m)
    total = 0.0
    for combo in product(*[d.support() for d in dists]):
        vals = [v for v, _ in combo]
        prob = float(np.prod([q for _, q in combo]))
        total += prob * max(sum(vals[i] for i in s) for s in sets)
    return total


def density_guarantee(m) -> GuaranteedMechanism:
    """gamma-sparse mechanism with the smallest integer gamma that fits (at least 2)."""
    return gamma_guarantee(max(2, math.ceil(max_density(m) - 1e-12)))


def graphic_cographic_two_sum():
    """2-sum of M(K4) and M*(K4) along one edge: 10 elements, bags of five."""
    k4 = complete_graph(4)
    g_cols = k4.incidence_columns(2)
    m1 = VectorMatroid(2, g_cols, [f"g{i}" if i else "z" for i in range(6)])
    co = CographicMatroid(k4)
    # binary representation of the bond matroid: the cycle space spans its dual
    rows = gf.nullspace([[c[r] for c in g_cols] for r in range(4)], 2, 6)
    m2 = VectorMatroid(2, [tuple(r[j] for r in rows) for j in range(6)], [f"c{i}" if i else "z" for i in range(6)])
    for s in subsets(6):
        assert m2.rank(s) == co.rank(s)
    m = delta_sum(m1, m2)
    g_bag = Graph(4, k4.edges[1:])
    c_bag, _ = k4.contract([0])
    return m, g_bag, c_bag


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
