"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are printed with output capture disabled so they also show up in ``-v`` runs.
"""

from __future__ import annotations

import math
import time
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from matprophet.composition import (ProphetEvaluator, cographic_guarantee, contraction_subset,
                                    graphic_guarantee, lift_transfer, projection_transfer, regular_mechanism,
                                    tree_compose)
from matprophet.config import load_json, parse_config
from matprophet.decomposition import DecompositionTree, SeymourTree
from matprophet.distributions import Discrete, Exponential, Uniform
from matprophet.graph import Graph, complete_graph, cycle_graph
from matprophet.harness import OrderStrategy, exact_evaluate, exact_gambler, prophet_exact, run_gambler, simulate
from matprophet.matroid import (CographicMatroid, GraphicMatroid, UniformMatroid, VectorMatroid, max_density,
                                partition_into_independent_sets)
from matprophet.mechanisms import (INF, Cographic3ECMechanism, CographicMechanism, GammaSparseMechanism,
                                   GraphicMechanism, KSparseMechanism, SingleItemMechanism, ThresholdVector)
from matprophet.relaxation import ex_ante

from conftest import (brute_prophet, density_guarantee, forest_size, gf2_rank, graphic_cographic_two_sum,
                      random_binary_matroid, random_discrete, random_simple_graph)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ADV = OrderStrategy("adversarial")
EXH = OrderStrategy("exhaustive")
TOL = 1e-12


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})")
        assert ok, f"criterion {number} failed: {detail}"
    return emit


def vector_rank_oracle(m: VectorMatroid):
    return lambda items: gf2_rank([m.columns[i] for i in items])


# 1 -------------------------------------------------------------------------

def test_single_item_half(verdict):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst, ok = math.inf, True
    for _ in range(20):
        n = int(rng.integers(2, 6))
        dists = [random_discrete(rng, int(rng.integers(1, 5)), 12) for _ in range(n)]
        m = UniformMatroid(n, 1)
        res = exact_evaluate(m, dists, SingleItemMechanism(dists), EXH)
        # prophet from an explicit max over the product support
        prophet = brute_prophet(m, dists)
        ok &= abs(res.prophet - prophet) < 1e-9 and res.gambler >= prophet / 2 - TOL
        worst = min(worst, res.gambler / prophet if prophet > 0 else 1.0)
    elapsed = time.perf_counter() - start
    verdict(1, "single-item gambler >= prophet/2 under exhaustive orders", ok and elapsed < 10,
            f"20 instances, worst ratio {worst:.4f}, {elapsed:.1f}s")


# 2 -------------------------------------------------------------------------

def graphic_instances():
    tri = Graph(3, ((0, 1), (1, 2), (0, 2)))
    eight = Graph(5, ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (0, 4)))
    return [
        ("triangle/uniform", tri, [Uniform(0, 1)] * 3),
        ("K4/exponential", complete_graph(4), [Exponential(0.5 + 0.25 * i) for i in range(6)]),
        ("8-edge/mixed", eight, [Uniform(0, 1 + i) if i % 2 else Exponential(1.0 + 0.1 * i) for i in range(8)]),
    ]


def test_graphic_sixteen(verdict):
    lines, ok = [], True
    for name, g, dists in graphic_instances():
        start = time.perf_counter()
        m = GraphicMatroid(g)
        relax = ex_ante(m, dists, 20000, 1)
        mech = GraphicMechanism(g, relax)
        rep = simulate(m, dists, mech, ADV, 100_000, 2024, relax=relax, instance=name)
        elapsed = time.perf_counter() - start
        good = (rep.checks.get("survival") is True and rep.checks.get("acceptance_floor") is True
                and rep.verdict == "pass" and rep.claimed_alpha == 16 and elapsed < 60)
        ok &= good
        lines.append(f"{name}: ratio {rep.ratio:.3f}, survival {min(rep.survival_frequency):.4f}.."
                     f"{max(rep.survival_frequency):.4f}, {elapsed:.1f}s")
    verdict(2, "graphic survival 1/8, acceptance >= p/16, gambler >= prophet/16", ok, "; ".join(lines))


# 3 -------------------------------------------------------------------------

def sparse_binary(rng, n: int, d: int, k: int) -> VectorMatroid:
    cols = []
    while len(cols) < n:
        s = set(rng.choice(d, size=int(rng.integers(1, k + 1)), replace=False).tolist())
        cols.append(tuple(1 if i in s else 0 for i in range(d)))
    return VectorMatroid(2, cols)


def test_ksparse_bound(verdict):
    rng = np.random.default_rng(303)
    start = time.perf_counter()
    lines, ok = [], True
    for k, n, d in ((2, 12, 6), (3, 12, 8)):
        m = sparse_binary(rng, n, d, k)
        assert all(len(m.support(e)) <= k for e in range(n))
        dists = [Exponential(1.0 + 0.2 * i) if i % 2 else Uniform(0, 1 + i) for i in range(n)]
        relax = ex_ante(m, dists, 20000, 3)
        mech = KSparseMechanism(m, k, relax)
        rep = simulate(m, dists, mech, ADV, 100_000, 77, relax=relax, instance=f"{k}-sparse")
        ok &= (rep.checks.get("acceptance_floor") is True and rep.verdict == "pass"
               and rep.claimed_alpha == 2 ** (k + 2) * k)
        lines.append(f"k={k}: ratio {rep.ratio:.3f} vs 1/{rep.claimed_alpha:g}")
    elapsed = time.perf_counter() - start
    verdict(3, "k-sparse acceptance >= p/(2^(k+2) k) and ratio verdict", ok and elapsed < 120,
            "; ".join(lines) + f", {elapsed:.1f}s")


# 4 -------------------------------------------------------------------------

def random_multigraph(rng, vertices: int, edges: int) -> Graph:
    out = [(int(rng.integers(0, v)), v) for v in range(1, vertices)]  # spanning tree keeps it connected
    while len(out) < edges:
        u, v = (int(x) for x in rng.choice(vertices, size=2, replace=False))
        out.append((min(u, v), max(u, v)))
    return Graph(vertices, tuple(out))


def test_cographic(verdict):
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    ok = True
    # three-edge-connected graphs: the average over the complements is exact for every order
    three_ec = [complete_graph(4), Graph(4, complete_graph(4).edges + ((0, 1),))]
    gaps = []
    for g in three_ec:
        dists = [Discrete([0.0, 1.0 + e, 2.5 + e], [0.3, 0.4, 0.3]) for e in range(g.m)]
        mech = Cographic3ECMechanism(g)
        m = CographicMatroid(g)
        total = sum(d.mean for d in dists)
        expect = sum(sum(dists[e].mean for e in c) for c in mech.complements) / 3
        for order in (OrderStrategy("fixed", tuple(range(g.m))), ADV):
            res = exact_evaluate(m, dists, mech, order)
            ok &= abs(res.gambler - expect) < 1e-9 and res.gambler >= total / 3 - TOL
            ok &= res.gambler >= res.prophet / 3 - TOL
        gaps.append(expect - total / 3)
    ratios = []
    for i in range(10):
        v = int(rng.integers(3, 6))
        g = random_multigraph(rng, v, int(rng.integers(v, 9)))
        dists = [Uniform(0, 1 + e % 3) if e % 2 else Discrete([0.0, 2.0 + e], [0.6, 0.4]) for e in range(g.m)]
        mech = CographicMechanism(g, dists)
        rep = simulate(CographicMatroid(g), dists, mech, ADV, 20000, 500 + i, instance=f"multigraph{i}")
        ok &= rep.verdict == "pass" and rep.claimed_alpha == 6
        ratios.append(rep.ratio)
    elapsed = time.perf_counter() - start
    verdict(4, "cographic complement identity and 1/6 verdict", ok and elapsed < 60,
            f"identity slack >= {min(gaps):.3f}, 10 multigraphs min ratio {min(ratios):.3f}, {elapsed:.1f}s")


# 5 -------------------------------------------------------------------------

def corpus():
    """Every experiment under configs/ with a finite sparsity, plus small fixed matroids."""
    out = []
    for path in sorted(CONFIGS.glob("*.json")):
        try:
            exps = parse_config(load_json(path))
        except Exception:
            continue  # deliberately broken configs
        out.extend((f"{path.stem}:{e.name}", e.matroid, e.dists) for e in exps)
    laws = [Discrete([0.0, 1.0, 4.0], [0.2, 0.5, 0.3]), Exponential(1.5), Uniform(1, 3)]
    for name, m in (("U25", UniformMatroid(5, 2)), ("K5", GraphicMatroid(complete_graph(5))),
                    ("C5*", CographicMatroid(cycle_graph(5)))):
        out.append((name, m, [laws[i % 3] for i in range(m.n)]))
    return out


def test_gamma_identity(verdict):
    start = time.perf_counter()
    ok, names = True, []
    for name, m, dists in corpus():
        if len(m.loops) == m.n:
            continue
        gamma = max(1, math.ceil(max_density(m) - 1e-12))
        mech = GammaSparseMechanism(m, gamma)
        expect = sum(dists[e].mean for e in range(m.n) if e not in m.loops) / gamma
        order = EXH if m.n <= 6 else ADV
        g, _, _ = exact_gambler(m, dists, mech, order)
        ok &= abs(g - expect) <= 1e-9 * max(1.0, expect)
        names.append(name)
    elapsed = time.perf_counter() - start
    verdict(5, "gamma-sparse gambler = E[sum X]/gamma", ok and elapsed < 10 and len(names) >= 8,
            f"{len(names)} instances, {elapsed:.1f}s")


# 6 -------------------------------------------------------------------------

def test_partition(verdict):
    rng = np.random.default_rng(606)
    start = time.perf_counter()
    ok, count = True, 0
    cases = []
    for n in range(4, 13):
        for d in (2, 3, 4):
            cases.append(("vector", random_binary_matroid(rng, n, d)))
    for vertices, edges in ((4, 6), (5, 9), (6, 12), (6, 10)):
        cases.append(("graphic", GraphicMatroid(random_simple_graph(rng, vertices, edges))))
    for kind, m in cases:
        if kind == "vector":
            rank = vector_rank_oracle(m)
        else:
            g = m.graph
            rank = lambda items, g=g: forest_size(g.vertices, [g.edges[i] for i in items])  # noqa: E731
        nonloops = [e for e in range(m.n) if rank([e]) == 1]
        for k in (1, 2, 3):
            res = partition_into_independent_sets(m, k)
            brute = all(len(s) <= k * rank(s) for size in range(1, len(nonloops) + 1)
                        for s in combinations(nonloops, size))
            ok &= res.feasible == brute
            if res.feasible:
                flat = [e for part in res.parts for e in part]
                ok &= len(flat) == len(set(flat)) and sorted(flat) == nonloops and len(res.parts) <= k
                ok &= all(rank(part) == len(part) for part in res.parts)
            else:
                s = list(res.violating_set)
                ok &= len(s) > k * rank(s)
            count += 1
    elapsed = time.perf_counter() - start
    verdict(6, "partition verdict matches |S| <= k r(S) enumeration", ok and elapsed < 30,
            f"{count} (matroid, k) pairs, {elapsed:.1f}s")


# 7 -------------------------------------------------------------------------

def transfer_by_enumeration(m: VectorMatroid, S, rest) -> bool:
    rank = vector_rank_oracle(m)
    r_rest = rank(rest)
    for size in range(1, len(S) + 1):
        for items in combinations(S, size):
            if rank(items) == size and rank(list(items) + list(rest)) != size + r_rest:
                return False
    return True


def test_contraction_subset_bound(verdict):
    rng = np.random.default_rng(707)
    start = time.perf_counter()
    ok, done, slack = True, 0, math.inf
    while done < 20:
        n = int(rng.integers(7, 11))
        m = random_binary_matroid(rng, n, int(rng.integers(3, 6)))
        T = sorted(int(x) for x in rng.choice(n, size=int(rng.integers(3, 6)), replace=False))
        if m.connectivity(T) > 2:
            continue
        dists = [random_discrete(rng, 2, 8) for _ in range(n)]
        Tbar = [e for e in range(n) if e not in T]
        target = prophet_exact(m.contract(Tbar), [dists[t] for t in T]) / 2 ** 3
        if target == 0:
            continue  # T is all loops after contraction; the bound says nothing
        res = contraction_subset(m, T, 2, ProphetEvaluator(), dists)
        S = list(res.subset)
        value = brute_prophet(m.restrict(S), [dists[i] for i in S]) if S else 0.0
        ok &= abs(value - res.value_subset) < 1e-9 and value >= target - TOL
        ok &= res.transfer_verified is True and transfer_by_enumeration(m, S, Tbar)
        slack = min(slack, value - target)
        done += 1
    elapsed = time.perf_counter() - start
    verdict(7, "contraction subset value >= eproph(M/complement)/8 and independence transfers",
            ok and elapsed < 60, f"20 instances, min slack {slack:.3f}, {elapsed:.1f}s")


# 8 -------------------------------------------------------------------------

def direct_sum_columns(blocks):
    dim = sum(len(b[0]) for b in blocks)
    cols, offset = [], 0
    for b in blocks:
        for c in b:
            col = [0] * dim
            col[offset: offset + len(c)] = c
            cols.append(tuple(col))
        offset += len(b[0])
    return VectorMatroid(2, cols)


def audited_thickness(m: VectorMatroid, td: DecompositionTree) -> dict:
    """lambda across each tree edge, from the component bags and an independent rank routine."""
    rank = vector_rank_oracle(m)
    full = rank(range(m.n))
    out = {}
    for a, b in td.edges:
        side, stack = {a}, [a]
        while stack:
            v = stack.pop()
            for x, y in td.edges:
                for s, t in ((x, y), (y, x)):
                    if s == v and t not in side and (s, t) != (a, b):
                        side.add(t)
                        stack.append(t)
        X = sorted(e for v in side for e in td.bags[v])
        rest = [e for e in range(m.n) if e not in set(X)]
        out[f"{a}-{b}"] = rank(X) + rank(rest) - full
    return out


def three_node_instance():
    tri = Graph(3, ((0, 1), (1, 2), (0, 2)))
    tri_cols = tri.incidence_columns(2)
    # bond matroid of the 4-cycle: four parallel elements
    m = direct_sum_columns([tri_cols, [(1,)] * 4, tri_cols])
    td = DecompositionTree({0: (0, 1, 2), 1: (3, 4, 5, 6), 2: (7, 8, 9)}, [(0, 1), (1, 2)],
                           {0: "graphic", 1: "cographic", 2: "graphic"}, {(0, 1): 1, (1, 2): 1})
    return m, td, {0: tri, 1: cycle_graph(4), 2: tri}


def test_tree_composition(verdict):
    start = time.perf_counter()
    bags = {"graphic": graphic_guarantee(), "cographic": cographic_guarantee()}
    m2, g_bag, c_bag = graphic_cographic_two_sum()
    td2 = DecompositionTree({0: (0, 1, 2, 3, 4), 1: (5, 6, 7, 8, 9)}, [(0, 1)],
                            {0: "graphic", 1: "cographic"}, {(0, 1): 2})
    m3, td3, certs3 = three_node_instance()
    cases = [("2-node", m2, td2, {0: g_bag, 1: c_bag}), ("3-node", m3, td3, certs3)]
    ok, lines = True, []
    for name, m, td, certs in cases:
        dists = [Discrete([0.0, 1.0 + 0.5 * i], [0.5, 0.5]) for i in range(m.n)]
        comp = tree_compose(m, td, bags, 1, dists, seed=9, certificates=certs)
        res = exact_evaluate(m, dists, comp.mechanism, ADV)
        audit = audited_thickness(m, td)
        ok &= comp.ratio == 64 and comp.thickness == audit and max(audit.values()) <= 1
        ok &= res.gambler >= res.prophet / comp.ratio - TOL
        lines.append(f"{name}: ratio {res.ratio:.4f} vs 1/{comp.ratio:g}, thickness {audit}")
    elapsed = time.perf_counter() - start
    verdict(8, "tree composition exact ratio and thickness audit", ok and elapsed < 120,
            "; ".join(lines) + f", {elapsed:.1f}s")


# 9 -------------------------------------------------------------------------

def free_element(m):
    return next((x for x in range(m.n) if x not in m.loops and not m.is_coloop(x)), None)


def test_lift_projection(verdict):
    rng = np.random.default_rng(909)
    start = time.perf_counter()
    ok, lifts, projs = True, 0, 0
    while lifts < 6 or projs < 6:
        parent = random_binary_matroid(rng, 6, 3)
        x = free_element(parent)
        if x is None:
            continue
        dists = [random_discrete(rng, 2, 6) for _ in range(5)]
        if lifts < 6:
            inner = density_guarantee(parent.contract([x]))
            mech = lift_transfer(parent, x, inner, dists)
            res = exact_evaluate(parent.delete([x]), dists, mech, EXH)
            ok &= mech.ratio == 2 * inner.ratio + 2 and res.gambler >= res.prophet / mech.ratio - TOL
            lifts += 1
        else:
            inner = density_guarantee(parent.delete([x]))
            mech = projection_transfer(parent, x, inner, dists)
            res = exact_evaluate(parent.contract([x]), dists, mech, EXH)
            ok &= mech.ratio == 3 * inner.ratio and res.gambler >= res.prophet / mech.ratio - TOL
            projs += 1
    pairs = 0
    while pairs < 300:
        L = random_binary_matroid(rng, 7, 4)
        x = free_element(L)
        if x is None:
            continue
        N, M = L.delete([x]), L.contract([x])
        vals = rng.integers(0, 6, 6).astype(float)
        tv = ThresholdVector(tuple(float(t) for t in rng.choice([0.0, 1.0, 2.0, INF], size=6)))
        order = list(rng.permutation(6))
        acc_n, _ = run_gambler(N, tv, order, vals)
        acc_m, _ = run_gambler(M, tv, order, vals)
        ok &= set(acc_m) <= set(acc_n)
        pairs += 1
    elapsed = time.perf_counter() - start
    verdict(9, "lift 2a+2 and projection 3a exact, paired-run subset property", ok and elapsed < 60,
            f"6 lifts, 6 projections, {pairs} paired runs, {elapsed:.1f}s")


# 10 ------------------------------------------------------------------------

def test_regular_two_sum(verdict):
    start = time.perf_counter()
    m, g_bag, c_bag = graphic_cographic_two_sum()
    td = DecompositionTree({0: (0, 1, 2, 3, 4), 1: (5, 6, 7, 8, 9)}, [(0, 1)],
                           {0: "graphic", 1: "cographic"}, {(0, 1): 2})
    st = SeymourTree(m, td, {0: g_bag, 1: c_bag})
    problems = st.validate(2)
    dists = [Discrete([0.0, 1.0 + 0.5 * i, 3.0 + i], [0.4, 0.4, 0.2]) for i in range(m.n)]
    comp = regular_mechanism(st, dists, seed=4)
    res = exact_evaluate(m, dists, comp.mechanism, ADV)
    elapsed = time.perf_counter() - start
    ok = problems == [] and comp.ratio == 256 and res.gambler >= res.prophet / 256 - TOL and elapsed < 60
    verdict(10, "regular 2-sum validates and clears 1/256 exactly", ok,
            f"n={m.n}, ratio {res.ratio:.4f}, {elapsed:.1f}s")


# 11 ------------------------------------------------------------------------

def test_determinism(verdict):
    start = time.perf_counter()
    ok = True
    for name, g, dists in graphic_instances()[:2]:
        m = GraphicMatroid(g)
        relax = ex_ante(m, dists, 5000, 1)
        again = ex_ante(m, dists, 5000, 1)
        ok &= relax.to_dict() == again.to_dict()
        mech = GraphicMechanism(g, relax)
        runs = [simulate(m, dists, mech, ADV, 10_000, 31, relax=relax, instance=name, workers=w).to_json()
                for w in (1, 1, 3)]
        ok &= len(set(runs)) == 1
    m, g_bag, c_bag = graphic_cographic_two_sum()
    td = DecompositionTree({0: (0, 1, 2, 3, 4), 1: (5, 6, 7, 8, 9)}, [(0, 1)],
                           {0: "graphic", 1: "cographic"}, {(0, 1): 2})
    dists = [Discrete([0.0, 1.0 + i], [0.5, 0.5]) for i in range(10)]
    exact = []
    for _ in range(2):
        comp = regular_mechanism(SeymourTree(m, td, {0: g_bag, 1: c_bag}), dists, seed=4)
        exact.append(exact_evaluate(m, dists, comp.mechanism, ADV))
    ok &= exact[0] == exact[1]
    elapsed = time.perf_counter() - start
    verdict(11, "same seed gives byte-identical reports", ok,
            f"simulate across 1 and 3 workers, exact composed rerun, {elapsed:.1f}s")

