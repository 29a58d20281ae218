"""
Transferring guarantees between matroids.

A ``GuaranteedMechanism`` is a factory: given a concrete matroid (plus the
structural certificate its class needs) it builds a threshold mechanism with
a claimed competitive ratio.  The constructions here wrap factories:
restriction, the F_p contraction subset, composition along a tree
decomposition, lifts and projections, and the regular-matroid mechanism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from . import gf
from .decomposition import DecompositionError, DecompositionTree, SeymourTree
from .distributions import PointMass, ValueDistribution
from .graph import Graph
from .harness import EXACT_OUTCOME_LIMIT, prophet_layer_cake, prophet_values
from .matroid import CographicMatroid, GraphicMatroid, InputError, Matroid, TABLE_LIMIT, VectorMatroid
from .mechanisms import (ClassPickMechanism, CographicMechanism, EmbeddedMechanism, FixedMechanism,
                         GammaSparseMechanism, GraphicMechanism, KSparseMechanism, Mechanism, MixtureMechanism,
                         ProductMechanism, ThresholdVector, single_item_thresholds)
from .relaxation import ex_ante, outcome_count
from .rng import derive_seed, substream

C_ENUM_LIMIT = 4096


@dataclass
class BagContext:
    """Everything a factory may use to build a mechanism on one matroid."""

    matroid: Matroid
    dists: list[ValueDistribution]
    seed: int = 0
    certificate: object = None
    positions: tuple[int, ...] | None = None
    relax_trials: int = 20000


@dataclass
class GuaranteedMechanism:
    name: str
    ratio: float
    build: Callable[[BagContext], Mechanism]


def _relax(ctx: BagContext):
    return ex_ante(ctx.matroid, ctx.dists, ctx.relax_trials, derive_seed(ctx.seed, "relax"))


def _graph_of(ctx: BagContext, cographic: bool = False) -> Graph:
    cert = ctx.certificate
    if cert is None:
        wanted = CographicMatroid if cographic else GraphicMatroid
        if isinstance(ctx.matroid, wanted):
            return ctx.matroid.graph
    if not isinstance(cert, Graph):
        raise InputError(f"{'cographic' if cographic else 'graphic'} bag needs a graph certificate")
    pos = ctx.positions if ctx.positions is not None else tuple(range(cert.m))
    if cographic:
        return CographicMatroid(cert).restrict(pos).graph
    return cert.subgraph(pos)


def graphic_guarantee() -> GuaranteedMechanism:
    """Algorithm on simple graphs (16); multigraphs fall back to 2-sparse columns (32)."""

    def build(ctx):
        g = _graph_of(ctx)
        relax = _relax(ctx)
        if g.is_simple():
            return GraphicMechanism(g, relax)
        return KSparseMechanism(VectorMatroid(2, g.incidence_columns(2), dim=g.vertices), 2, relax)

    return GuaranteedMechanism("graphic", 16.0, build)


def graphic_sparse_guarantee() -> GuaranteedMechanism:
    """Graphic matroids through their 2-sparse incidence representation (32)."""

    def build(ctx):
        g = _graph_of(ctx)
        return KSparseMechanism(VectorMatroid(2, g.incidence_columns(2), dim=g.vertices), 2, _relax(ctx))

    return GuaranteedMechanism("graphic-2sparse", 32.0, build)


def ksparse_guarantee(k: int) -> GuaranteedMechanism:
    def build(ctx):
        if not isinstance(ctx.matroid, VectorMatroid):
            raise InputError("k-sparse mechanism needs a vector matroid")
        return KSparseMechanism(ctx.matroid, k, _relax(ctx))

    return GuaranteedMechanism(f"ksparse{k}", float(2 ** (k + 2) * k), build)


def cographic_guarantee() -> GuaranteedMechanism:
    def build(ctx):
        return CographicMechanism(_graph_of(ctx, cographic=True), ctx.dists)

    return GuaranteedMechanism("cographic", 6.0, build)


def r10x_guarantee() -> GuaranteedMechanism:
    """Uniform parallel class, then single-item: 2 x (number of classes <= 10)."""

    def build(ctx):
        return ClassPickMechanism(ctx.matroid, ctx.dists)

    return GuaranteedMechanism("r10x", 20.0, build)


def gamma_guarantee(gamma: int) -> GuaranteedMechanism:
    def build(ctx):
        return GammaSparseMechanism(ctx.matroid, gamma)

    return GuaranteedMechanism(f"gamma{gamma}", float(gamma), build)


def single_item_guarantee() -> GuaranteedMechanism:
    def build(ctx):
        if ctx.matroid.full_rank() > 1:
            raise InputError("single-item mechanism needs a matroid of rank at most 1")
        items = [e for e in range(ctx.matroid.n) if e not in ctx.matroid.loops]
        return FixedMechanism(single_item_thresholds(ctx.dists, items), ratio=2.0)

    return GuaranteedMechanism("single", 2.0, build)


# ---------------------------------------------------------------------------
# prophet evaluator


class ProphetEvaluator:
    """E[max-weight independent set] of a matroid under given item laws.

    Exact (layer-cake over finite supports) when the instance is small,
    Monte Carlo otherwise; ``last_stderr`` holds the noise of the latest call.
    """

    def __init__(self, trials: int = 20000, seed: int = 0):
        self.trials = trials
        self.seed = seed
        self.last_stderr = 0.0
        self.calls = 0

    def __call__(self, m: Matroid, dists: Sequence[ValueDistribution]) -> float:
        self.calls += 1
        if m.n == 0:
            self.last_stderr = 0.0
            return 0.0
        count = outcome_count(dists)
        if count is not None and m.n <= TABLE_LIMIT and count <= EXACT_OUTCOME_LIMIT:
            self.last_stderr = 0.0
            return prophet_layer_cake(m, dists)
        rng = substream(self.seed, "evaluator", self.calls)
        values = np.column_stack([d.sample(rng, self.trials) for d in dists])
        pv = prophet_values(m, values)
        self.last_stderr = float(pv.std(ddof=1) / math.sqrt(self.trials)) if self.trials > 1 else 0.0
        return float(pv.mean())


# ---------------------------------------------------------------------------
# contraction subset


@dataclass
class ContractionResult:
    subset: tuple[int, ...]
    intersection_basis: list
    complement_basis: list
    a_star: tuple[int, ...]
    c_star: tuple[int, ...]
    value_subset: float
    value_a_star: float
    candidates_a: int
    candidates_c: int
    transfer_verified: bool | None


def independence_transfers(m: Matroid, subset: Sequence[int], rest: Sequence[int]) -> bool:
    """Every independent set of M|S stays independent after contracting ``rest``.

    Equivalent to r(I + rest) = |I| + r(rest) for all independent I within S;
    checked on all subsets of S.
    """
    r_rest = m.rank(rest)
    s = list(subset)
    for mask in range(1, 1 << len(s)):
        items = [s[j] for j in range(len(s)) if mask >> j & 1]
        if m.rank(items) == len(items) and m.rank(items + list(rest)) != len(items) + r_rest:
            return False
    return True


def contraction_subset(m: VectorMatroid, T: Sequence[int], k: int, evaluator: Callable,
                       dists: Sequence[ValueDistribution], seed: int = 0, verify_limit: int = 10) -> ContractionResult:
    """Pick S inside T whose independent sets stay independent after contracting E - T.

    Writes every column of T as (component in L) + (component in C), where
    L = span(T) n span(E - T) and C is a complement of L inside span(T) built
    by basis extension.  Groups T by the L component a (dropping columns equal
    to a), keeps the best group, then splits it by the functional
    beta -> beta . c on C coordinates and keeps the best class {beta . c = 1}.
    """
    T = sorted(set(T))
    Tbar = [e for e in range(m.n) if e not in set(T)]
    lam = m.connectivity(T)
    if lam > k:
        raise DecompositionError(f"connectivity of T is {lam}, above the bound k = {k}")
    p, dim = m.p, m.dim
    phi = m.columns
    L = gf.intersect_spans([phi[t] for t in T], [phi[e] for e in Tbar], p, dim)
    eb = gf.EchelonBasis(dim, p)
    for v in L:
        eb.insert(v)
    C = []
    for t in T:
        if eb.insert(phi[t]):
            C.append(gf.normalize(phi[t], p))
    full = list(L) + C
    alpha, beta = {}, {}
    for t in T:
        coords = gf.coordinates(full, phi[t], p) if full else ()
        alpha[t] = tuple(coords[: len(L)])
        beta[t] = tuple(coords[len(L):])

    def value(items):
        if not items:
            return 0.0
        return evaluator(m.restrict(items), [dists[i] for i in items])

    best_a, best_val, best_items = None, -1.0, []
    count_a = 0
    for a in product(range(p), repeat=len(L)):
        count_a += 1
        items = [t for t in T if alpha[t] == a and any(beta[t])]
        val = value(items)
        if val > best_val:
            best_a, best_val, best_items = a, val, items
    dc = len(C)
    if p ** dc - 1 <= C_ENUM_LIMIT:
        cands = [c for c in product(range(p), repeat=dc) if any(c)]
    else:
        rng = substream(seed, "contraction-c")
        cands = []
        while len(cands) < C_ENUM_LIMIT:
            c = tuple(int(x) for x in rng.integers(0, p, dc))
            if any(c):
                cands.append(c)
    best_c, best_cval, best_s = (), -1.0, []
    for c in cands:
        items = [t for t in best_items if gf.dot(beta[t], c, p) == 1]
        val = value(items)
        if val > best_cval:
            best_c, best_cval, best_s = c, val, items
    if not cands:
        best_cval = 0.0
    verified = None
    if m.n <= verify_limit:
        verified = independence_transfers(m, best_s, Tbar)
    return ContractionResult(tuple(best_s), L, C, tuple(best_a) if best_a is not None else (), best_c,
                             best_cval, best_val, count_a, len(cands), verified)


# ---------------------------------------------------------------------------
# tree composition


@dataclass
class CompositionStage:
    node: int
    tag: str
    bag: tuple[int, ...]
    subset: tuple[int, ...]
    contraction: ContractionResult | None
    mechanism: str
    ratio: float | None


@dataclass
class TreeComposition:
    mechanism: Mechanism
    ratio: float
    stages: list[CompositionStage] = field(default_factory=list)
    thickness: dict = field(default_factory=dict)


def tree_compose(m: VectorMatroid, td: DecompositionTree, bag_mechanisms: dict[str, GuaranteedMechanism], k: int,
                 dists: Sequence[ValueDistribution], seed: int = 0, evaluator: Callable | None = None,
                 certificates: dict | None = None, alpha: float | None = None) -> TreeComposition:
    """Leaf by leaf: find S in the leaf bag with the contraction subset, run the
    bag's mechanism on M|S, pin the rest of the bag to +inf, delete the bag and
    continue on the pruned tree.  Leaves are taken in increasing node id."""
    td.validate(m.n)
    thickness = td.edge_thickness(m)
    td.check_thickness(m, k)
    for v in td.nodes:
        tag = td.tags.get(v)
        if tag not in bag_mechanisms:
            raise DecompositionError(f"node {v}: no mechanism for bag class {tag!r}")
    declared = max(bag_mechanisms[td.tags[v]].ratio for v in td.nodes)
    evaluator = evaluator or ProphetEvaluator(seed=derive_seed(seed, "evaluator"))
    certificates = certificates or {}
    ids = list(range(m.n))
    cur, tree = m, td
    parts: list[Mechanism] = []
    stages: list[CompositionStage] = []
    while tree.bags:
        leaf = min(tree.leaves())
        bag = list(tree.bags[leaf])
        tag = tree.tags[leaf]
        cur_dists = [dists[ids[e]] for e in range(cur.n)]
        if len(tree.bags) == 1:
            subset, res = bag, None
        else:
            res = contraction_subset(cur, bag, k, evaluator, cur_dists, derive_seed(seed, "contract", leaf))
            subset = list(res.subset)
        positions = tuple(bag.index(e) for e in subset)
        if subset:
            ctx = BagContext(cur.restrict(subset), [cur_dists[e] for e in subset], derive_seed(seed, "bag", leaf),
                             certificates.get(leaf), positions)
            inner = bag_mechanisms[tag].build(ctx)
            parts.append(EmbeddedMechanism(inner, [ids[e] for e in subset], m.n))
            name, ratio = inner.name, inner.ratio
        else:
            name, ratio = "empty", None
        stages.append(CompositionStage(leaf, tag, tuple(ids[e] for e in bag), tuple(ids[e] for e in subset), res,
                                       name, ratio))
        if len(tree.bags) == 1:
            break
        tree, kept = tree.prune(leaf, cur)
        cur = cur.delete(bag)
        ids = [ids[e] for e in kept]
    if alpha is None:
        # a factory may fall back to a weaker mechanism, so use what was actually built
        built = [st.ratio for st in stages if st.ratio is not None]
        alpha = max(built + [declared])
    ratio = alpha * m.p ** (k + 1) if len(td.bags) > 1 else alpha
    mech = ProductMechanism(parts, m.n, ratio, "tree") if parts else FixedMechanism(ThresholdVector.never(m.n), ratio)
    return TreeComposition(mech, ratio, stages, {f"{a}-{b}": lam for (a, b), lam in thickness.items()})


# ---------------------------------------------------------------------------
# lifts and projections


def _check_element(m: Matroid, x: int) -> None:
    if not 0 <= x < m.n:
        raise InputError(f"element {x} outside 0..{m.n - 1}")
    if x in m.loops or m.is_coloop(x):
        raise InputError("x is not a loop and not a free element: precondition violated "
                         f"(element {x} is a {'loop' if x in m.loops else 'free element'})")


def _without(n: int, x: int) -> list[int]:
    return [e for e in range(n) if e != x]


def lift_transfer(parent: Matroid, x: int, inner: GuaranteedMechanism, dists: Sequence[ValueDistribution],
                  seed: int = 0, certificate=None) -> MixtureMechanism:
    """Mechanism for N = parent - x from one for M = parent / x.

    With probability alpha/(alpha+1) use M's thresholds; otherwise run a
    single-item threshold on the other members of x's parallel class.
    ``dists`` are indexed by the common ground set E = parent minus x.
    """
    _check_element(parent, x)
    n = parent.n - 1
    if len(dists) != n:
        raise InputError(f"expected {n} distributions, got {len(dists)}")
    alpha = inner.ratio
    contracted = parent.contract([x])
    inner_mech = inner.build(BagContext(contracted, list(dists), derive_seed(seed, "lift-inner"), certificate))
    rest = _without(parent.n, x)
    index = {e: j for j, e in enumerate(rest)}
    cls = next(c for c in parent.parallel_classes if x in c)
    others = [index[e] for e in cls if e != x]
    single = single_item_thresholds(list(dists), others, n) if others else ThresholdVector.never(n, "lift:empty-class")
    return MixtureMechanism([(alpha / (alpha + 1), inner_mech), (1 / (alpha + 1), FixedMechanism(single, 2.0))],
                            ratio=2 * alpha + 2, name="lift")


def projection_transfer(parent: Matroid, x: int, inner: GuaranteedMechanism, dists: Sequence[ValueDistribution],
                        seed: int = 0, certificate=None) -> MixtureMechanism:
    """Mechanism for N = parent / x from one for M = parent - x.

    Loops of N never accept.  With probability 1/3 use M's thresholds (built
    with the loops' values zeroed); otherwise a single-item threshold over the
    non-loops of N.
    """
    _check_element(parent, x)
    n = parent.n - 1
    if len(dists) != n:
        raise InputError(f"expected {n} distributions, got {len(dists)}")
    alpha = inner.ratio
    N = parent.contract([x])
    loops = sorted(N.loops)
    zeroed = [PointMass(0.0) if e in N.loops else d for e, d in enumerate(dists)]
    deleted = parent.delete([x])
    inner_mech = inner.build(BagContext(deleted, zeroed, derive_seed(seed, "projection-inner"), certificate))
    nonloops = [e for e in range(n) if e not in N.loops]
    pinned = _PinnedMechanism(inner_mech, loops)
    single = single_item_thresholds(list(dists), nonloops, n) if nonloops else ThresholdVector.never(n)
    return MixtureMechanism([(1 / 3, pinned), (2 / 3, FixedMechanism(single, 2.0))], ratio=3 * alpha,
                            name="projection")


class _PinnedMechanism(Mechanism):
    """Wraps a mechanism and forces the given items to +inf."""

    def __init__(self, inner: Mechanism, pinned: Sequence[int]):
        super().__init__(inner.n)
        self.inner = inner
        self.pinned = set(pinned)
        self.ratio = inner.ratio
        self.name = inner.name

    def _pin(self, tv: ThresholdVector) -> ThresholdVector:
        vals = tuple(math.inf if i in self.pinned else v for i, v in enumerate(tv.values))
        return ThresholdVector(vals, tv.tie, tv.provenance)

    def draw_with(self, rng, choices):
        return self._pin(self.inner.draw_with(rng, choices))

    def support(self):
        return [(w, self._pin(tv)) for w, tv in self.inner.support()]


def lift_guarantee(parent: Matroid, x: int, inner: GuaranteedMechanism) -> GuaranteedMechanism:
    def build(ctx):
        return lift_transfer(parent, x, inner, ctx.dists, ctx.seed, ctx.certificate)

    return GuaranteedMechanism(f"lift({inner.name})", 2 * inner.ratio + 2, build)


def projection_guarantee(parent: Matroid, x: int, inner: GuaranteedMechanism) -> GuaranteedMechanism:
    def build(ctx):
        return projection_transfer(parent, x, inner, ctx.dists, ctx.seed, ctx.certificate)

    return GuaranteedMechanism(f"projection({inner.name})", 3 * inner.ratio, build)


def distance_transfer(chain: Sequence[tuple[str, Matroid, int]], inner: GuaranteedMechanism) -> GuaranteedMechanism:
    """Fold lift/projection steps; each step's parent is (kind, matroid, x).

    A lift step's parent L satisfies L / x = current matroid; a projection
    step's parent P satisfies P - x = current matroid.  The recorded ratio is
    3^t alpha, using 3 alpha >= 2 alpha + 2 for lifts.
    """
    if inner.ratio < 2:
        raise InputError(f"distance transfer needs alpha >= 2, got {inner.ratio}")
    current = inner
    for step, (kind, parent, x) in enumerate(chain):
        if kind == "lift":
            nxt = lift_guarantee(parent, x, current)
        elif kind == "projection":
            nxt = projection_guarantee(parent, x, current)
        else:
            raise InputError(f"step {step}: unknown transfer kind {kind!r}")
        current = GuaranteedMechanism(nxt.name, 3 * current.ratio, nxt.build)
    return current


# ---------------------------------------------------------------------------
# regular matroids


REGULAR_BAGS = {
    "graphic": graphic_sparse_guarantee,
    "cographic": cographic_guarantee,
    "r10x": r10x_guarantee,
}


def regular_mechanism(st: SeymourTree, dists: Sequence[ValueDistribution], seed: int = 0,
                      evaluator: Callable | None = None) -> TreeComposition:
    """Compose graphic (32), cographic (6) and R10-extension (20) bags with
    p = 2, k = 2 and alpha = 32, for a recorded ratio of 256."""
    problems = st.validate(2)
    if problems:
        raise DecompositionError("; ".join(problems))
    for v in st.tree.nodes:
        if st.tree.tags.get(v) not in REGULAR_BAGS:
            raise DecompositionError(f"node {v}: untagged or unsupported bag class {st.tree.tags.get(v)!r}")
    bags = {tag: make() for tag, make in REGULAR_BAGS.items()}
    if len(st.tree.bags) == 1:
        v = st.tree.nodes[0]
        ctx = BagContext(st.matroid, list(dists), derive_seed(seed, "bag", v), st.certificates.get(v))
        mech = bags[st.tree.tags[v]].build(ctx)
        return TreeComposition(mech, mech.ratio, [CompositionStage(v, st.tree.tags[v], st.tree.bags[v],
                                                                    st.tree.bags[v], None, mech.name, mech.ratio)])
    return tree_compose(st.matroid, st.tree, bags, 2, dists, seed, evaluator, st.certificates, alpha=32.0)
