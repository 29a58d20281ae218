"""
Matroids given by rank oracles.

Every instance exposes ``rank`` as the single source of truth; the class
payloads (graph, matrix, uniform parameters, explicit bases) are used to make
the oracle fast and to feed the mechanisms that need structure.  Minors are
relabelled onto ``0..m-1`` in ascending order of the surviving original ids,
and carry the original labels along.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

from . import gf
from .graph import Graph, UnionFind

EXPLICIT_LIMIT = 12
TABLE_LIMIT = 16


class InputError(ValueError):
    """Malformed input: unknown element ids, negative weights, bad parameters."""


@dataclass(frozen=True)
class GroundSet:
    n: int
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.n < 0:
            raise InputError("ground set size must be nonnegative")
        if len(self.labels) != self.n:
            raise InputError(f"expected {self.n} labels, got {len(self.labels)}")

    @property
    def elements(self) -> range:
        return range(self.n)


def _as_set(m: "Matroid", s: Iterable[int] | None) -> frozenset[int]:
    if s is None:
        return frozenset(range(m.n))
    out = frozenset(s)
    for e in out:
        if not isinstance(e, (int,)) or isinstance(e, bool) or not 0 <= e < m.n:
            raise InputError(f"unknown element {e!r} (ground set is 0..{m.n - 1})")
    return out


class _RankBuilder:
    """Greedy independent-set builder on top of a bare rank oracle."""

    def __init__(self, m: "Matroid"):
        self.m = m
        self.items: list[int] = []

    def add(self, e: int) -> bool:
        cand = self.items + [e]
        if self.m._rank(frozenset(cand)) == len(cand):
            self.items = cand
            return True
        return False


class _TableBuilder:
    __slots__ = ("table", "mask")

    def __init__(self, table: bytes):
        self.table = table
        self.mask = 0

    def add(self, e: int) -> bool:
        nxt = self.mask | (1 << e)
        if self.table[nxt]:
            self.mask = nxt
            return True
        return False


class Matroid:
    """Base class.  Subclasses implement ``_rank`` plus the minor/dual hooks."""

    kind = "abstract"

    def __init__(self, n: int, labels: Sequence[str] | None = None):
        if labels is None:
            labels = tuple(str(i) for i in range(n))
        self.ground = GroundSet(n, tuple(str(x) for x in labels))
        self.loops = frozenset(e for e in range(n) if self._rank(frozenset((e,))) == 0)
        self.parallel_classes = self._compute_parallel_classes()

    # -- oracle -------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def labels(self) -> tuple[str, ...]:
        return self.ground.labels

    def _rank(self, s: frozenset[int]) -> int:
        raise NotImplementedError

    def rank(self, s: Iterable[int] | None = None) -> int:
        return self._rank(_as_set(self, s))

    def full_rank(self) -> int:
        return self._rank(frozenset(range(self.n)))

    def is_independent(self, s: Iterable[int]) -> bool:
        s = _as_set(self, s)
        return self._rank(s) == len(s)

    @cached_property
    def independence_table(self) -> bytes:
        """indep[mask] for every subset, as a bytes object (n <= TABLE_LIMIT)."""
        if self.n > TABLE_LIMIT:
            raise InputError(f"independence table needs n <= {TABLE_LIMIT}")
        size = 1 << self.n
        table = bytearray(size)
        table[0] = 1
        for mask in range(1, size):
            high = mask.bit_length() - 1
            rest = mask & ~(1 << high)
            if table[rest]:
                items = frozenset(i for i in range(self.n) if mask >> i & 1)
                table[mask] = 1 if self._rank(items) == len(items) else 0
        return bytes(table)

    def new_builder(self):
        if self.n <= TABLE_LIMIT:
            return _TableBuilder(self.independence_table)
        return _RankBuilder(self)

    # -- derived structure --------------------------------------------------
    def _compute_parallel_classes(self) -> tuple[tuple[int, ...], ...]:
        uf = UnionFind(self.n)
        nonloops = [e for e in range(self.n) if e not in self.loops]
        for a, b in combinations(nonloops, 2):
            if uf.find(a) != uf.find(b) and self._rank(frozenset((a, b))) == 1:
                uf.union(a, b)
        classes: dict[int, list[int]] = {}
        for e in nonloops:
            classes.setdefault(uf.find(e), []).append(e)
        return tuple(sorted(tuple(c) for c in classes.values()))

    def closure(self, a: Iterable[int]) -> frozenset[int]:
        a = _as_set(self, a)
        r = self._rank(a)
        return frozenset(c for c in range(self.n) if c in a or self._rank(a | {c}) == r)

    def is_coloop(self, e: int) -> bool:
        full = frozenset(range(self.n))
        return self._rank(full - {e}) < self._rank(full)

    def connectivity(self, s: Iterable[int]) -> int:
        s = _as_set(self, s)
        full = frozenset(range(self.n))
        return self._rank(s) + self._rank(full - s) - self._rank(full)

    def local_connectivity(self, x: Iterable[int], y: Iterable[int]) -> int:
        x, y = _as_set(self, x), _as_set(self, y)
        return self._rank(x) + self._rank(y) - self._rank(x | y)

    # -- minors -------------------------------------------------------------
    def restrict(self, a: Iterable[int]) -> "Matroid":
        items = sorted(_as_set(self, a))
        return self._restrict(items)

    def delete(self, a: Iterable[int]) -> "Matroid":
        a = _as_set(self, a)
        return self._restrict([e for e in range(self.n) if e not in a])

    def contract(self, a: Iterable[int]) -> "Matroid":
        a = _as_set(self, a)
        if not a:
            return self._restrict(list(range(self.n)))
        return self._contract(sorted(a))

    def simplify(self) -> tuple["Matroid", list[int]]:
        """Delete loops and all but the lowest id of each parallel class."""
        keep = sorted(c[0] for c in self.parallel_classes)
        return self._restrict(keep), keep

    def dual(self) -> "Matroid":
        raise NotImplementedError

    def _restrict(self, items: list[int]) -> "Matroid":
        raise NotImplementedError

    def _contract(self, items: list[int]) -> "Matroid":
        raise NotImplementedError

    def _sub_labels(self, items: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.labels[i] for i in items)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n}, rank={self.full_rank()})"


class UniformMatroid(Matroid):
    kind = "uniform"

    def __init__(self, n: int, k: int, labels: Sequence[str] | None = None):
        if not 0 <= k:
            raise InputError("uniform rank must be nonnegative")
        self.k = min(k, n)
        super().__init__(n, labels)

    def _rank(self, s):
        return min(len(s), self.k)

    def dual(self):
        return UniformMatroid(self.n, self.n - self.k, self.labels)

    def _restrict(self, items):
        return UniformMatroid(len(items), min(self.k, len(items)), self._sub_labels(items))

    def _contract(self, items):
        rest = [e for e in range(self.n) if e not in set(items)]
        return UniformMatroid(len(rest), self.k - min(len(items), self.k), self._sub_labels(rest))

    def to_dict(self):
        return {"type": "uniform", "n": self.n, "k": self.k}


class _UFBuilder:
    __slots__ = ("graph", "uf")

    def __init__(self, graph: Graph):
        self.graph = graph
        self.uf = UnionFind(graph.vertices)

    def add(self, e: int) -> bool:
        u, v = self.graph.edges[e]
        return self.uf.union(u, v)


class GraphicMatroid(Matroid):
    """Cycle matroid: a set of edges is independent iff it is a forest."""

    kind = "graphic"

    def __init__(self, graph: Graph, labels: Sequence[str] | None = None):
        self.graph = graph
        super().__init__(graph.m, labels)

    def _rank(self, s):
        return self.graph.forest_rank(s)

    def new_builder(self):
        if self.n <= TABLE_LIMIT:
            return super().new_builder()
        return _UFBuilder(self.graph)

    def dual(self):
        return CographicMatroid(self.graph, self.labels)

    def _restrict(self, items):
        return GraphicMatroid(self.graph.subgraph(items), self._sub_labels(items))

    def _contract(self, items):
        g, kept = self.graph.contract(items)
        return GraphicMatroid(g, self._sub_labels(kept))

    def to_vector(self, p: int = 2) -> "VectorMatroid":
        return VectorMatroid(p, self.graph.incidence_columns(p), self.labels)

    def to_dict(self):
        return {"type": "graphic", **self.graph.to_dict()}


class CographicMatroid(Matroid):
    """Bond matroid: A is independent iff G - A keeps the component count."""

    kind = "cographic"

    def __init__(self, graph: Graph, labels: Sequence[str] | None = None):
        self.graph = graph
        self._base_components = graph.components()
        super().__init__(graph.m, labels)

    def _rank(self, s):
        rest = [i for i in range(self.graph.m) if i not in s]
        return len(s) - (self.graph.components(rest) - self._base_components)

    def dual(self):
        return GraphicMatroid(self.graph, self.labels)

    def _restrict(self, items):
        # deletion in the bond matroid is contraction in the graph
        keep = set(items)
        g, kept = self.graph.contract(i for i in range(self.graph.m) if i not in keep)
        return CographicMatroid(g, self._sub_labels(kept))

    def _contract(self, items):
        drop = set(items)
        rest = [i for i in range(self.graph.m) if i not in drop]
        return CographicMatroid(self.graph.subgraph(rest), self._sub_labels(rest))

    def to_dict(self):
        return {"type": "cographic", **self.graph.to_dict()}


class _VectorBuilder:
    __slots__ = ("columns", "basis")

    def __init__(self, columns, basis):
        self.columns = columns
        self.basis = basis

    def add(self, e: int) -> bool:
        return self.basis.insert(self.columns[e])


class VectorMatroid(Matroid):
    """Columns over F_p; a set is independent iff its columns are."""

    kind = "vector"

    def __init__(self, p: int, columns: Sequence[Sequence[int]], labels: Sequence[str] | None = None,
                 dim: int | None = None):
        if not isinstance(p, int) or not gf.is_prime(p):
            raise InputError(f"field characteristic must be prime, got {p!r}")
        self.p = p
        cols = [tuple(int(x) for x in c) for c in columns]
        if dim is None:
            dim = len(cols[0]) if cols else 0
        for j, c in enumerate(cols):
            if len(c) != dim:
                raise InputError(f"column {j} has length {len(c)}, expected {dim}")
            for x in c:
                if not 0 <= x < p:
                    raise InputError(f"column {j} has entry {x} outside 0..{p - 1}")
        self.dim = dim
        self.columns = tuple(cols)
        super().__init__(len(cols), labels)

    def _rank(self, s):
        if self.dim == 0:
            return 0
        basis = gf.EchelonBasis(self.dim, self.p)
        r = 0
        for e in s:
            if basis.insert(self.columns[e]):
                r += 1
        return r

    def new_builder(self):
        if self.n <= TABLE_LIMIT:
            return super().new_builder()
        return _VectorBuilder(self.columns, gf.EchelonBasis(self.dim, self.p))

    def support(self, e: int) -> tuple[int, ...]:
        return tuple(i for i, x in enumerate(self.columns[e]) if x)

    def max_support(self) -> int:
        return max((len(self.support(e)) for e in range(self.n)), default=0)

    def dual(self):
        rows = [[self.columns[j][i] for j in range(self.n)] for i in range(self.dim)]
        kernel = gf.nullspace(rows, self.p, self.n) if rows else [
            tuple(1 if i == j else 0 for i in range(self.n)) for j in range(self.n)]
        cols = [tuple(v[j] for v in kernel) for j in range(self.n)]
        return VectorMatroid(self.p, cols, self.labels, dim=len(kernel))

    def _restrict(self, items):
        return VectorMatroid(self.p, [self.columns[i] for i in items], self._sub_labels(items), dim=self.dim)

    def _contract(self, items):
        quotient = gf.annihilator([self.columns[i] for i in items], self.p, self.dim)
        drop = set(items)
        rest = [e for e in range(self.n) if e not in drop]
        cols = [tuple(gf.dot(q, self.columns[e], self.p) for q in quotient) for e in rest]
        return VectorMatroid(self.p, cols, self._sub_labels(rest), dim=len(quotient))

    def to_dict(self):
        return {"type": "vector", "p": self.p, "columns": [list(c) for c in self.columns]}


class ExplicitMatroid(Matroid):
    """A matroid listed by its bases; only for tiny oracle tests."""

    kind = "explicit"

    def __init__(self, n: int, bases: Iterable[Iterable[int]], labels: Sequence[str] | None = None):
        if n > EXPLICIT_LIMIT:
            raise InputError(f"explicit matroids are limited to n <= {EXPLICIT_LIMIT}")
        masks = set()
        for b in bases:
            mask = 0
            for e in b:
                if not 0 <= e < n:
                    raise InputError(f"basis element {e} outside 0..{n - 1}")
                mask |= 1 << e
            masks.add(mask)
        if not masks:
            raise InputError("a matroid needs at least one basis")
        sizes = {bin(b).count("1") for b in masks}
        if len(sizes) != 1:
            raise InputError("bases must all have the same size")
        self.bases = tuple(sorted(masks))
        super().__init__(n, labels)

    def _rank(self, s):
        mask = 0
        for e in s:
            mask |= 1 << e
        return max(bin(b & mask).count("1") for b in self.bases)

    def basis_sets(self) -> list[frozenset[int]]:
        return [frozenset(i for i in range(self.n) if b >> i & 1) for b in self.bases]

    def dual(self):
        full = (1 << self.n) - 1
        return ExplicitMatroid(self.n, [[i for i in range(self.n) if (full & ~b) >> i & 1] for b in self.bases],
                               self.labels)

    def _restrict(self, items):
        r = self._rank(frozenset(items))
        bases = [c for c in combinations(items, r) if self._rank(frozenset(c)) == r]
        index = {e: j for j, e in enumerate(items)}
        return ExplicitMatroid(len(items), [[index[e] for e in b] for b in bases], self._sub_labels(items))

    def _contract(self, items):
        a = frozenset(items)
        ra = self._rank(a)
        rest = [e for e in range(self.n) if e not in a]
        index = {e: j for j, e in enumerate(rest)}
        bases = set()
        for b in self.basis_sets():
            if len(b & a) == ra:
                bases.add(tuple(sorted(index[e] for e in b - a)))
        return ExplicitMatroid(len(rest), bases, self._sub_labels(rest))

    def to_dict(self):
        return {"type": "explicit", "n": self.n, "bases": [sorted(b) for b in self.basis_sets()]}


# ---------------------------------------------------------------------------
# module-level operations


def rank(m: Matroid, s: Iterable[int]) -> int:
    return m.rank(s)


def dual(m: Matroid) -> Matroid:
    return m.dual()


def restrict(m: Matroid, a: Iterable[int]) -> Matroid:
    return m.restrict(a)


def contract(m: Matroid, a: Iterable[int]) -> Matroid:
    return m.contract(a)


def greedy_max_weight(m: Matroid, w: Sequence[float], priority: Sequence[float] | None = None,
                      skip_zero: bool = False) -> tuple[int, ...]:
    """Maximum-weight independent set by the matroid greedy algorithm.

    Ties are broken by ``priority`` (ascending) when given, else by element id.
    With ``skip_zero`` elements of weight 0 are never added.
    """
    if len(w) != m.n:
        raise InputError(f"expected {m.n} weights, got {len(w)}")
    for i, x in enumerate(w):
        if not (x >= 0) or x == float("inf"):
            raise InputError(f"weight of element {i} must be finite and nonnegative, got {x}")
    tie = priority if priority is not None else range(m.n)
    order = sorted(range(m.n), key=lambda i: (-w[i], tie[i]))
    builder = m.new_builder()
    chosen = []
    for i in order:
        if skip_zero and w[i] <= 0:
            break
        if builder.add(i):
            chosen.append(i)
    return tuple(sorted(chosen))


def connectivity(m: Matroid, s: Iterable[int]) -> int:
    return m.connectivity(s)


def local_connectivity(m: Matroid, x: Iterable[int], y: Iterable[int]) -> int:
    return m.local_connectivity(x, y)


def closure(m: Matroid, a: Iterable[int]) -> frozenset[int]:
    return m.closure(a)


def loops(m: Matroid) -> frozenset[int]:
    return m.loops


def parallel_classes(m: Matroid) -> tuple[tuple[int, ...], ...]:
    return m.parallel_classes


def simplify(m: Matroid) -> tuple[Matroid, list[int]]:
    return m.simplify()


def subsets(n: int, items: Sequence[int] | None = None):
    base = list(range(n)) if items is None else list(items)
    for mask in range(1 << len(base)):
        yield frozenset(base[i] for i in range(len(base)) if mask >> i & 1)


def same_ranks(m1: Matroid, m2: Matroid) -> bool:
    """Exhaustive rank comparison on all subsets of a common ground set."""
    if m1.n != m2.n:
        return False
    return all(m1._rank(s) == m2._rank(s) for s in subsets(m1.n))


def rank_axiom_violations(m: Matroid, limit: int = EXPLICIT_LIMIT) -> list[str]:
    """Names of violated rank axioms, checked exhaustively for n <= limit."""
    if m.n > limit:
        return []
    n = m.n
    r = [0] * (1 << n)
    for mask in range(1 << n):
        r[mask] = m._rank(frozenset(i for i in range(n) if mask >> i & 1))
    found = []
    if r[0] != 0:
        found.append("rank of empty set")
    for mask in range(1 << n):
        if r[mask] > bin(mask).count("1") or r[mask] < 0:
            found.append("bounded by cardinality")
            break
    bad_mono = bad_aug = False
    for mask in range(1 << n):
        for i in range(n):
            if not mask >> i & 1:
                d = r[mask | 1 << i] - r[mask]
                if d < 0:
                    bad_mono = True
                elif d > 1:
                    bad_aug = True
    if bad_mono:
        found.append("monotone")
    if bad_aug:
        found.append("unit increase")
    # local submodularity: r(A+i) + r(A+j) >= r(A+i+j) + r(A) is equivalent to submodularity
    for mask in range(1 << n):
        for i in range(n):
            if mask >> i & 1:
                continue
            for j in range(i + 1, n):
                if mask >> j & 1:
                    continue
                if r[mask | 1 << i] + r[mask | 1 << j] < r[mask | 1 << i | 1 << j] + r[mask]:
                    found.append("submodular")
                    return found
    return found


def basis_exchange_violations(m: ExplicitMatroid) -> list[str]:
    """Check the augmentation property directly on the listed bases."""
    bases = m.basis_sets()
    indep = set()
    for b in bases:
        for s in subsets(m.n, sorted(b)):
            indep.add(s)
    for a in indep:
        for b in indep:
            if len(a) > len(b) and not any((b | {c}) in indep for c in a - b):
                return ["augmentation"]
    return []


# ---------------------------------------------------------------------------
# matroid partitioning


@dataclass
class PartitionResult:
    """Outcome of covering the non-loop elements by k independent sets."""

    k: int
    feasible: bool
    parts: list[tuple[int, ...]]
    loops: tuple[int, ...]
    violating_set: tuple[int, ...] | None = None
    stuck_element: int | None = None

    def certificate_holds(self, m: Matroid) -> bool:
        if self.violating_set is None:
            return False
        s = self.violating_set
        return len(s) > self.k * m.rank(s)


def partition_into_independent_sets(m: Matroid, k: int) -> PartitionResult:
    """Cover E minus the loops with k disjoint independent sets.

    Edmonds' matroid partition algorithm: each uncovered element is inserted
    along a shortest path in the exchange graph.  When no path exists, the
    set of elements reached by the search satisfies |S| = k r(S) + 1, which is
    returned as the infeasibility certificate.
    """
    if k < 1:
        raise InputError("k must be a positive integer")
    parts: list[set[int]] = [set() for _ in range(k)]
    owner: dict[int, int] = {}
    loop_list = tuple(sorted(m.loops))

    def indep(s: set[int]) -> bool:
        return m._rank(frozenset(s)) == len(s)

    for s in range(m.n):
        if s in m.loops:
            continue
        parent: dict[int, tuple[int, int] | None] = {s: None}
        queue = deque([s])
        end = None
        while queue and end is None:
            y = queue.popleft()
            for j in range(k):
                if owner.get(y) == j:
                    continue
                if indep(parts[j] | {y}):
                    end = (y, j)
                    break
                for x in sorted(parts[j]):
                    if x not in parent and indep((parts[j] - {x}) | {y}):
                        parent[x] = (y, j)
                        queue.append(x)
        if end is None:
            return PartitionResult(k, False, [tuple(sorted(p)) for p in parts], loop_list,
                                   tuple(sorted(parent)), s)
        y, j = end
        # walk back along the path: y enters part j, the element it displaced enters the next part, ...
        while True:
            old = owner.get(y)
            if old is not None:
                parts[old].discard(y)
            parts[j].add(y)
            owner[y] = j
            link = parent[y]
            if link is None:
                break
            y, j = link
    return PartitionResult(k, True, [tuple(sorted(p)) for p in parts], loop_list)


def max_density(m: Matroid) -> float:
    """max |S| / r(S) over loop-free nonempty S, by exhaustive search (small n only)."""
    best = 0.0
    items = [e for e in range(m.n) if e not in m.loops]
    for s in subsets(m.n, items):
        if s:
            best = max(best, len(s) / m._rank(s))
    return best
