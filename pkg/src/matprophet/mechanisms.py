"""
Non-adaptive threshold mechanisms.

A mechanism is a distribution over threshold vectors.  ``draw`` materializes
one vector from a seed and records the random choices that produced it;
``support`` enumerates the whole distribution when it is small, which is what
the exact evaluator consumes.

An item is accepted when its value beats the threshold, or ties it and an
independent uniform falls below the item's tie probability (1 by default, so
ties are accepted), and it keeps the accepted set independent in the original
matroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .distributions import ValueDistribution
from .graph import Graph
from .matroid import (CographicMatroid, InputError, Matroid, VectorMatroid, partition_into_independent_sets)
from .relaxation import ExAnteRelaxation

INF = math.inf
SUPPORT_LIMIT = 1 << 16


class MechanismError(InputError):
    pass


@dataclass(frozen=True)
class ThresholdVector:
    values: tuple[float, ...]
    tie: tuple[float, ...] = None
    provenance: str = ""

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(not (v >= 0) for v in vals):
            raise MechanismError("thresholds must be nonnegative or +inf")
        object.__setattr__(self, "values", vals)
        tie = (1.0,) * len(vals) if self.tie is None else tuple(float(x) for x in self.tie)
        if len(tie) != len(vals):
            raise MechanismError("tie probabilities must match the thresholds")
        object.__setattr__(self, "tie", tie)

    @property
    def n(self) -> int:
        return len(self.values)

    @classmethod
    def never(cls, n: int, provenance: str = "never") -> "ThresholdVector":
        return cls((INF,) * n, None, provenance)

    def finite(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values) if v < INF)

    def key(self) -> tuple:
        return self.values, self.tie

    def accepts(self, i: int, x: float, u: float = 0.0) -> bool:
        t = self.values[i]
        return x > t or (x == t and u < self.tie[i])

    def to_dict(self) -> dict:
        return {
            "thresholds": ["inf" if math.isinf(v) else v for v in self.values],
            "tie": list(self.tie),
            "provenance": self.provenance,
        }


def restrict_thresholds(tv: ThresholdVector, kept) -> ThresholdVector:
    """Pin every item outside ``kept`` to +inf; kept items are unchanged."""
    keep = set(kept)
    vals = tuple(v if i in keep else INF for i, v in enumerate(tv.values))
    return ThresholdVector(vals, tv.tie, tv.provenance + "|restricted")


def embed_thresholds(tv: ThresholdVector, items: Sequence[int], n: int, provenance: str | None = None) -> ThresholdVector:
    """Lift a vector on the sub-ground set ``items`` to n items, +inf elsewhere."""
    vals = [INF] * n
    tie = [1.0] * n
    for j, e in enumerate(items):
        vals[e] = tv.values[j]
        tie[e] = tv.tie[j]
    return ThresholdVector(tuple(vals), tuple(tie), tv.provenance if provenance is None else provenance)


@dataclass
class MechanismDraw:
    seed: int
    choices: dict
    thresholds: ThresholdVector


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


class Mechanism:
    """Base class; ``ratio`` is the claimed competitive ratio (None if no claim)."""

    name = "mechanism"
    ratio: float | None = None

    def __init__(self, n: int):
        self.n = n

    def draw(self, seed: int) -> MechanismDraw:
        choices: dict = {}
        tv = self.draw_with(_rng(seed), choices)
        return MechanismDraw(int(seed), choices, tv)

    def draw_with(self, rng: np.random.Generator, choices: dict) -> ThresholdVector:
        raise NotImplementedError

    def support(self) -> list[tuple[float, ThresholdVector]]:
        raise NotImplementedError

    def survival_probability(self) -> np.ndarray | None:
        return None

    def acceptance_floor(self) -> np.ndarray | None:
        return None

    def describe(self) -> dict:
        return {"name": self.name, "ratio": self.ratio}


def merge_support(entries) -> list[tuple[float, ThresholdVector]]:
    """Combine entries with equal threshold vectors, keeping first-seen order."""
    acc: dict = {}
    first: dict = {}
    for w, tv in entries:
        k = tv.key()
        if k not in acc:
            acc[k] = 0.0
            first[k] = tv
        acc[k] += w
    return [(acc[k], first[k]) for k in acc]


class FixedMechanism(Mechanism):
    name = "fixed"

    def __init__(self, tv: ThresholdVector, ratio: float | None = None):
        super().__init__(tv.n)
        self.tv = tv
        self.ratio = ratio

    def draw_with(self, rng, choices):
        return self.tv

    def support(self):
        return [(1.0, self.tv)]


# ---------------------------------------------------------------------------
# single item


def _max_cdf(dists: Sequence[ValueDistribution], x: float, left: bool = False) -> float:
    out = 1.0
    for d in dists:
        out *= d.cdf_left(x) if left else d.cdf(x)
    return out


def median_of_max(dists: Sequence[ValueDistribution]) -> float:
    """inf{x : P[max_i X_i <= x] >= 1/2}."""
    if not dists:
        return 0.0
    if _max_cdf(dists, 0.0) >= 0.5:
        return 0.0
    atoms = sorted({v for d in dists for v, _ in (d.support() or [])})
    if all(d.support() is not None for d in dists):
        for v in atoms:
            if _max_cdf(dists, v) >= 0.5:
                return v
    n = len(dists)
    lo, hi = 0.0, max(d.quantile(1.0 - 1.0 / (4 * n)) for d in dists)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _max_cdf(dists, mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    # a discrete atom inside the final bracket is the exact answer
    for v in atoms:
        if lo <= v <= hi and _max_cdf(dists, v) >= 0.5:
            return v
    return hi


def single_item_rule(dists: Sequence[ValueDistribution]) -> tuple[float, float]:
    """Common threshold T (median of the maximum) and tie probability.

    Ties at T are accepted outright when T is at least the expected total
    excess sum E[(X_i - T)^+]; otherwise the tie probability is tuned so the
    scan stops with probability exactly 1/2.  Either way the gambler gets at
    least half of T + sum E[(X_i - T)^+] >= E[max].
    """
    t = median_of_max(dists)
    if not any(d.atom(t) > 0 for d in dists):
        return t, 1.0
    excess = sum(d.upper_partial(t) for d in dists)
    if t >= excess:
        return t, 1.0

    def miss(theta):
        out = 1.0
        for d in dists:
            out *= d.cdf_left(t) + (1.0 - theta) * d.atom(t)
        return out

    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if miss(mid) > 0.5:
            lo = mid
        else:
            hi = mid
    return t, hi


def single_item_thresholds(dists: Sequence[ValueDistribution], items: Sequence[int] | None = None,
                           n: int | None = None) -> ThresholdVector:
    """Shared median-of-max threshold on ``items`` (default: all), +inf elsewhere."""
    if items is None:
        items = list(range(len(dists)))
        pool = list(dists)
    else:
        pool = [dists[i] for i in items]
    n = len(dists) if n is None else n
    if not pool:
        return ThresholdVector.never(n, "single-item:empty")
    t, theta = single_item_rule(pool)
    vals = [INF] * n
    tie = [1.0] * n
    for i in items:
        vals[i] = t
        tie[i] = theta
    return ThresholdVector(tuple(vals), tuple(tie), "single-item")


class SingleItemMechanism(FixedMechanism):
    name = "single"

    def __init__(self, dists: Sequence[ValueDistribution], items: Sequence[int] | None = None):
        super().__init__(single_item_thresholds(dists, items), ratio=2.0)
        self.items = tuple(range(len(dists))) if items is None else tuple(items)


# ---------------------------------------------------------------------------
# orientations


@dataclass
class Orientation:
    """head[e] is the vertex edge e points into; loads are incoming fractional degrees."""

    heads: tuple[int, ...]
    loads: tuple[float, ...]
    bound: float

    @property
    def max_load(self) -> float:
        return max(self.loads, default=0.0)


def orient_hypergraph(hyperedges: Sequence[Sequence[int]], p: Sequence[float], k: float,
                      vertices: int | None = None, tol: float = 1e-9) -> Orientation:
    """Give each hyperedge a head so every vertex has incoming p-load at most k.

    Peels a vertex of minimum remaining fractional degree, points every
    remaining hyperedge at it into it, and deletes it.  If p lies in the
    matroid polytope some vertex always has degree <= k; failure to find one
    certifies p is outside.
    """
    edges = [tuple(sorted(set(e))) for e in hyperedges]
    p = [float(x) for x in p]
    if len(p) != len(edges):
        raise InputError(f"expected {len(edges)} weights, got {len(p)}")
    if any(not e for e in edges):
        raise InputError("empty hyperedges (loops) must be removed before orienting")
    if vertices is None:
        vertices = 1 + max((v for e in edges for v in e), default=-1)
    incident: list[list[int]] = [[] for _ in range(vertices)]
    for t, e in enumerate(edges):
        for v in e:
            incident[v].append(t)
    degree = [sum(p[t] for t in incident[v]) for v in range(vertices)]
    alive_v = set(range(vertices))
    heads = [-1] * len(edges)
    loads = [0.0] * vertices
    left = len(edges)
    while left:
        v = min((u for u in alive_v), key=lambda u: (degree[u], u))
        if degree[v] > k + tol:
            raise MechanismError(
                f"no vertex with fractional degree <= {k} (minimum {degree[v]:.6g} at vertex {v}); "
                "the weights are outside the matroid polytope")
        alive_v.discard(v)
        for t in incident[v]:
            if heads[t] == -1:
                heads[t] = v
                loads[v] += p[t]
                left -= 1
                for u in edges[t]:
                    degree[u] -= p[t]
    return Orientation(tuple(heads), tuple(loads), float(k))


def orient_graph(g: Graph, p: Sequence[float], tol: float = 1e-9) -> Orientation:
    """Orientation of a loopless graph with incoming p-load at most 2 per vertex."""
    for i, (u, v) in enumerate(g.edges):
        if u == v:
            raise InputError(f"edge {i} is a self-loop; loops cannot be oriented")
    return orient_hypergraph([(u, v) for u, v in g.edges], p, 2, g.vertices, tol)


def build_hypergraph(m: VectorMatroid) -> list[tuple[int, ...]]:
    """Nonzero coordinate set of every column."""
    return [m.support(e) for e in range(m.n)]


# ---------------------------------------------------------------------------
# graphic and k-column sparse


def _tau_thresholds(relax: ExAnteRelaxation, survivors, n, provenance) -> ThresholdVector:
    vals = [INF] * n
    tie = [1.0] * n
    for i in survivors:
        if relax.p[i] > 0:
            vals[i] = float(relax.tau[i])
            tie[i] = float(relax.theta[i])
    return ThresholdVector(tuple(vals), tuple(tie), provenance)


class _CutMechanism(Mechanism):
    """Keep each item with probability ``keep``, pick a uniform vertex cut S;
    an item survives iff kept, all its tails lie in S and its head does not."""

    keep = 0.5

    def __init__(self, n: int, vertices: int, heads, tails, relax: ExAnteRelaxation, active_items):
        super().__init__(n)
        self.vertices = vertices
        self.heads = heads
        self.tails = tails
        self.relax = relax
        self.active_items = tuple(active_items)

    def survivors(self, keep_mask, side) -> list[int]:
        out = []
        for i in self.active_items:
            if keep_mask[i] and not side[self.heads[i]] and all(side[v] for v in self.tails[i]):
                out.append(i)
        return out

    def draw_with(self, rng, choices):
        keep_mask = rng.random(self.n) < self.keep
        side = rng.random(self.vertices) < 0.5
        surv = self.survivors(keep_mask, side)
        choices["kept"] = [int(i) for i in np.flatnonzero(keep_mask)]
        choices["cut"] = [int(v) for v in np.flatnonzero(side)]
        choices["survivors"] = surv
        return _tau_thresholds(self.relax, surv, self.n, self.name)

    def survivor_distribution(self) -> dict[tuple[int, ...], float]:
        if self.vertices > 20:
            raise MechanismError("too many vertices to enumerate cuts")
        dist: dict[tuple[int, ...], float] = {}
        q = self.keep
        for bits in range(1 << self.vertices):
            side = [bool(bits >> v & 1) for v in range(self.vertices)]
            cut_ok = [i for i in self.active_items
                      if not side[self.heads[i]] and all(side[v] for v in self.tails[i])]
            w_cut = 0.5 ** self.vertices
            for sub in range(1 << len(cut_ok)):
                chosen = tuple(cut_ok[j] for j in range(len(cut_ok)) if sub >> j & 1)
                w = w_cut * q ** len(chosen) * (1 - q) ** (len(cut_ok) - len(chosen))
                dist[chosen] = dist.get(chosen, 0.0) + w
        return dist

    def support(self):
        if len(self.active_items) + self.vertices > 24:
            raise MechanismError("mechanism draw space too large to enumerate")
        return merge_support((w, _tau_thresholds(self.relax, s, self.n, self.name))
                             for s, w in self.survivor_distribution().items())

    def survival_probability(self):
        out = np.zeros(self.n)
        for i in self.active_items:
            out[i] = self.keep * 0.5 ** (1 + len(self.tails[i]))
        return out


class GraphicMechanism(_CutMechanism):
    """Orient so each vertex has incoming p-load <= 2, keep each edge with
    probability 1/2, cut uniformly; survivors get their tail threshold tau_i."""

    name = "graphic"
    ratio = 16.0
    keep = 0.5

    def __init__(self, g: Graph, relax: ExAnteRelaxation):
        if not g.is_simple():
            raise MechanismError("graphic mechanism needs a simple graph; use the k-sparse mechanism with k = 2 "
                                 "for multigraphs")
        if relax.n != g.m:
            raise InputError(f"relaxation has {relax.n} items, graph has {g.m} edges")
        self.graph = g
        self.orientation = orient_graph(g, relax.p)
        heads = self.orientation.heads
        tails = [tuple(v for v in e if v != h) for e, h in zip(g.edges, heads)]
        super().__init__(g.m, g.vertices, heads, tails, relax, range(g.m))

    def acceptance_floor(self):
        return self.relax.p / 16.0


class KSparseMechanism(_CutMechanism):
    """Hyperedge version: keep with probability 1/(2k), head outside the cut,
    every other support coordinate inside it."""

    name = "ksparse"

    def __init__(self, m: VectorMatroid, k: int, relax: ExAnteRelaxation):
        if k < 1:
            raise InputError("k must be a positive integer")
        if relax.n != m.n:
            raise InputError(f"relaxation has {relax.n} items, matroid has {m.n}")
        hyper = build_hypergraph(m)
        for t, e in enumerate(hyper):
            if len(e) > k:
                raise InputError(f"column {t} has {len(e)} nonzero entries, more than k = {k}")
        items = [t for t, e in enumerate(hyper) if e]
        self.k = k
        self.ratio = float(2 ** (k + 2) * k)
        self.keep = 1.0 / (2 * k)
        self.orientation = orient_hypergraph([hyper[t] for t in items], [relax.p[t] for t in items], k, m.dim)
        heads = [-1] * m.n
        tails: list[tuple[int, ...]] = [()] * m.n
        for j, t in enumerate(items):
            heads[t] = self.orientation.heads[j]
            tails[t] = tuple(v for v in hyper[t] if v != heads[t])
        self.hyperedges = hyper
        super().__init__(m.n, m.dim, heads, tails, relax, items)

    def acceptance_floor(self):
        return self.relax.p / (2 ** (self.k + 2) * self.k)

    def describe(self):
        return {"name": self.name, "ratio": self.ratio, "k": self.k}


# ---------------------------------------------------------------------------
# cographic and gamma-sparse


class PartPickMechanism(Mechanism):
    """Pick one of several item groups uniformly; each group has fixed thresholds."""

    def __init__(self, n: int, options: list[ThresholdVector], labels: list):
        super().__init__(n)
        self.options = options
        self.labels = labels

    def draw_with(self, rng, choices):
        j = int(rng.integers(len(self.options)))
        choices["part"] = j
        choices["label"] = self.labels[j]
        return self.options[j]

    def support(self):
        w = 1.0 / len(self.options)
        return merge_support((w, tv) for tv in self.options)


def is_three_edge_connected(g: Graph) -> bool:
    """No bridges and no 2-edge cuts, i.e. the bond matroid is simple."""
    m = CographicMatroid(g)
    return not m.loops and all(len(c) == 1 for c in m.parallel_classes)


def cographic_forest_complements(g: Graph) -> list[tuple[int, ...]]:
    """Three cographic bases (complements of spanning forests) that together cover E."""
    m = CographicMatroid(g)
    if m.loops or any(len(c) > 1 for c in m.parallel_classes):
        bridges = sorted(m.loops)
        cut = next((c for c in m.parallel_classes if len(c) > 1), None)
        detail = f"bridges {bridges}" if bridges else f"2-edge cut {list(cut)}"
        raise MechanismError(f"graph is not 3-edge-connected ({detail})")
    res = partition_into_independent_sets(m, 3)
    if not res.feasible:
        raise MechanismError(f"no cover by 3 forest complements; violating set {list(res.violating_set)}")
    out = []
    for part in res.parts:
        builder = m.new_builder()
        chosen = set()
        for e in part:
            builder.add(e)
            chosen.add(e)
        for e in range(m.n):
            if e not in chosen and builder.add(e):
                chosen.add(e)
        out.append(tuple(sorted(chosen)))
    return out


class Cographic3ECMechanism(PartPickMechanism):
    """Threshold 0 off a uniformly chosen spanning forest H*, +inf on it."""

    name = "cographic3ec"
    ratio = 3.0

    def __init__(self, g: Graph):
        self.graph = g
        self.complements = cographic_forest_complements(g)
        options = []
        for j, comp in enumerate(self.complements):
            vals = [INF] * g.m
            for e in comp:
                vals[e] = 0.0
            options.append(ThresholdVector(tuple(vals), None, f"cographic3ec:H{j}"))
        super().__init__(g.m, options, [list(c) for c in self.complements])


class CographicMechanism(PartPickMechanism):
    """General graphs: bridges get +inf, each parallel class of the bond matroid
    is collapsed to its lowest edge, the 3-edge-connected quotient is handled
    as above, and every selected class runs a single-item threshold."""

    name = "cographic"
    ratio = 6.0

    def __init__(self, g: Graph, dists: Sequence[ValueDistribution]):
        if len(dists) != g.m:
            raise InputError(f"graph has {g.m} edges but {len(dists)} distributions were given")
        self.graph = g
        m = CographicMatroid(g)
        self.bridges = tuple(sorted(m.loops))
        self.classes = m.parallel_classes
        reps = [c[0] for c in self.classes]
        rep_class = {c[0]: c for c in self.classes}
        # restricting the bond matroid to the representatives contracts everything else in the graph
        quotient, kept = g.contract(e for e in range(g.m) if e not in set(reps))
        self.quotient = quotient
        self.quotient_edges = kept
        options, labels = [], []
        if quotient.m == 0:
            options.append(ThresholdVector.never(g.m, "cographic:empty"))
            labels.append([])
        else:
            for j, comp in enumerate(cographic_forest_complements(quotient)):
                vals = [INF] * g.m
                tie = [1.0] * g.m
                for q in comp:
                    cls = rep_class[kept[q]]
                    single = single_item_thresholds(dists, cls, g.m)
                    for e in cls:
                        vals[e] = single.values[e]
                        tie[e] = single.tie[e]
                options.append(ThresholdVector(tuple(vals), tuple(tie), f"cographic:H{j}"))
                labels.append([list(rep_class[kept[q]]) for q in comp])
        super().__init__(g.m, options, labels)


class GammaSparseMechanism(PartPickMechanism):
    """Split the non-loops into ceil(gamma) independent sets, threshold 0 on a uniform one."""

    name = "gamma"

    def __init__(self, m: Matroid, gamma: float):
        if not gamma > 0:
            raise InputError("gamma must be positive")
        self.gamma = int(math.ceil(gamma - 1e-12))
        self.requested_gamma = gamma
        self.ratio = float(self.gamma)
        res = partition_into_independent_sets(m, self.gamma)
        if not res.feasible:
            raise MechanismError(
                f"matroid is not {self.gamma}-sparse: set {list(res.violating_set)} has "
                f"{len(res.violating_set)} elements but rank {m.rank(res.violating_set)}")
        self.parts = res.parts
        options = []
        for j, part in enumerate(res.parts):
            vals = [INF] * m.n
            for e in part:
                vals[e] = 0.0
            options.append(ThresholdVector(tuple(vals), None, f"gamma:part{j}"))
        super().__init__(m.n, options, [list(p) for p in res.parts])

    def describe(self):
        return {"name": self.name, "ratio": self.ratio, "gamma": self.gamma, "requested_gamma": self.requested_gamma}


class ClassPickMechanism(PartPickMechanism):
    """Pick one parallel class uniformly and run a single-item threshold on it."""

    name = "class-pick"

    def __init__(self, m: Matroid, dists: Sequence[ValueDistribution]):
        classes = m.parallel_classes
        options = [single_item_thresholds(dists, c, m.n) for c in classes] or [ThresholdVector.never(m.n)]
        self.ratio = 2.0 * max(len(classes), 1)
        super().__init__(m.n, options, [list(c) for c in classes] or [[]])


# ---------------------------------------------------------------------------
# combinators


class MixtureMechanism(Mechanism):
    name = "mixture"

    def __init__(self, components: list[tuple[float, Mechanism]], ratio: float | None = None, name: str = "mixture"):
        total = sum(w for w, _ in components)
        if abs(total - 1.0) > 1e-9 or any(w < 0 for w, _ in components):
            raise InputError("mixture weights must be nonnegative and sum to 1")
        n = components[0][1].n
        if any(c.n != n for _, c in components):
            raise InputError("mixture components must share the ground set")
        super().__init__(n)
        self.components = components
        self.ratio = ratio
        self.name = name
        self._cum = np.cumsum([w for w, _ in components])

    def draw_with(self, rng, choices):
        u = rng.random()
        j = min(int(np.searchsorted(self._cum, u, side="right")), len(self.components) - 1)
        choices["branch"] = j
        sub: dict = {}
        tv = self.components[j][1].draw_with(rng, sub)
        choices["inner"] = sub
        return tv

    def support(self):
        entries = []
        for w, c in self.components:
            if w > 0:
                entries.extend((w * q, tv) for q, tv in c.support())
        return merge_support(entries)


class EmbeddedMechanism(Mechanism):
    """A mechanism on a sub-ground set ``items`` of an n-element matroid."""

    def __init__(self, inner: Mechanism, items: Sequence[int], n: int):
        super().__init__(n)
        self.inner = inner
        self.items = tuple(items)
        self.ratio = inner.ratio
        self.name = inner.name

    def draw_with(self, rng, choices):
        return embed_thresholds(self.inner.draw_with(rng, choices), self.items, self.n)

    def support(self):
        return [(w, embed_thresholds(tv, self.items, self.n)) for w, tv in self.inner.support()]


class ProductMechanism(Mechanism):
    """Independent mechanisms on disjoint item sets, combined coordinatewise
    (each item takes the one finite threshold, if any, among the parts)."""

    name = "product"

    def __init__(self, parts: list[Mechanism], n: int, ratio: float | None = None, name: str = "product"):
        super().__init__(n)
        self.parts = parts
        self.ratio = ratio
        self.name = name

    @staticmethod
    def _combine(tvs, n, provenance):
        vals = [INF] * n
        tie = [1.0] * n
        for tv in tvs:
            for i in tv.finite():
                vals[i] = tv.values[i]
                tie[i] = tv.tie[i]
        return ThresholdVector(tuple(vals), tuple(tie), provenance)

    def draw_with(self, rng, choices):
        tvs = []
        choices["stages"] = []
        for part in self.parts:
            sub: dict = {}
            tvs.append(part.draw_with(rng, sub))
            choices["stages"].append(sub)
        return self._combine(tvs, self.n, self.name)

    def support(self):
        supports = [p.support() for p in self.parts]
        size = 1
        for s in supports:
            size *= len(s)
        if size > SUPPORT_LIMIT:
            raise MechanismError(f"product support has {size} entries (limit {SUPPORT_LIMIT})")
        entries = []
        for combo in product(*supports):
            w = 1.0
            for q, _ in combo:
                w *= q
            entries.append((w, self._combine([tv for _, tv in combo], self.n, self.name)))
        return merge_support(entries)
