"""Tree decompositions of a matroid's ground set and their thickness audit."""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import Graph
from .matroid import (CographicMatroid, GraphicMatroid, InputError, Matroid, VectorMatroid,
                      same_ranks)

BAG_TAGS = ("graphic", "cographic", "r10x", "two-column-sparse", "gamma-sparse")
SEYMOUR_TAGS = ("graphic", "cographic", "r10x")
TAG_CHECK_LIMIT = 12


class DecompositionError(InputError):
    pass


@dataclass
class DecompositionTree:
    """Tree whose nodes carry disjoint bags covering the ground set."""

    bags: dict[int, tuple[int, ...]]
    edges: list[tuple[int, int]]
    tags: dict[int, str] = field(default_factory=dict)
    sums: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self):
        self.bags = {int(k): tuple(sorted(int(e) for e in v)) for k, v in self.bags.items()}
        self.edges = [(int(u), int(v)) for u, v in self.edges]
        for v, tag in self.tags.items():
            if tag not in BAG_TAGS:
                raise DecompositionError(f"node {v}: unknown class tag {tag!r}")

    @property
    def nodes(self) -> list[int]:
        return sorted(self.bags)

    def neighbors(self, v: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == v:
                out.append(b)
            elif b == v:
                out.append(a)
        return sorted(out)

    def validate(self, n: int) -> None:
        """Raise unless the bags partition 0..n-1 and the tree is connected and acyclic."""
        seen: dict[int, int] = {}
        for v in self.nodes:
            for e in self.bags[v]:
                if not 0 <= e < n:
                    raise DecompositionError(f"node {v}: bag element {e} outside 0..{n - 1}")
                if e in seen:
                    raise DecompositionError(f"element {e} appears in bags {seen[e]} and {v}")
                seen[e] = v
        missing = [e for e in range(n) if e not in seen]
        if missing:
            raise DecompositionError(f"elements {missing} are in no bag")
        nodes = set(self.nodes)
        for a, b in self.edges:
            if a not in nodes or b not in nodes:
                raise DecompositionError(f"tree edge ({a}, {b}) uses an unknown node")
        if len(self.edges) != len(nodes) - 1:
            raise DecompositionError(f"a tree on {len(nodes)} nodes needs {len(nodes) - 1} edges, got {len(self.edges)}")
        if nodes and len(self.component(self.nodes[0])) != len(nodes):
            raise DecompositionError("tree is not connected")

    def component(self, start: int, without: tuple[int, int] | None = None) -> set[int]:
        blocked = {without, without[::-1]} if without else set()
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in self.neighbors(v):
                if (v, w) in blocked or w in seen:
                    continue
                seen.add(w)
                stack.append(w)
        return seen

    def side(self, edge: tuple[int, int]) -> tuple[int, ...]:
        """Elements in the bags on the first endpoint's side of ``edge``."""
        part = self.component(edge[0], without=edge)
        return tuple(sorted(e for v in part for e in self.bags[v]))

    def edge_thickness(self, m: Matroid) -> dict[tuple[int, int], int]:
        return {e: m.connectivity(self.side(e)) for e in self.edges}

    def thickness(self, m: Matroid) -> int:
        return max(self.edge_thickness(m).values(), default=0)

    def check_thickness(self, m: Matroid, k: int) -> None:
        for e, lam in self.edge_thickness(m).items():
            if lam > k:
                raise DecompositionError(f"tree edge {e} has connectivity {lam} > {k}")

    def leaves(self) -> list[int]:
        if len(self.bags) == 1:
            return self.nodes
        return [v for v in self.nodes if len(self.neighbors(v)) == 1]

    def prune(self, leaf: int, m: Matroid) -> tuple["DecompositionTree", list[int]]:
        """Drop ``leaf`` and renumber the remaining elements as in ``m.delete(bag)``.

        Returns the pruned tree and the old ids of the surviving elements.
        """
        gone = set(self.bags[leaf])
        kept = [e for e in range(m.n) if e not in gone]
        index = {e: j for j, e in enumerate(kept)}
        bags = {v: tuple(index[e] for e in b) for v, b in self.bags.items() if v != leaf}
        edges = [(a, b) for a, b in self.edges if leaf not in (a, b)]
        tags = {v: t for v, t in self.tags.items() if v != leaf}
        sums = {e: s for e, s in self.sums.items() if leaf not in e}
        return DecompositionTree(bags, edges, tags, sums), kept

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": v, "bag": list(self.bags[v]), **({"class": self.tags[v]} if v in self.tags else {})}
                      for v in self.nodes],
            "edges": [{"u": a, "v": b, **({"sum": self.sums[(a, b)]} if (a, b) in self.sums else {})}
                      for a, b in self.edges],
        }


def r10_columns() -> list[tuple[int, ...]]:
    """Binary representation [I_5 | A] of R10."""
    a = ["11001", "11100", "01110", "00111", "10011"]
    cols = [tuple(1 if i == j else 0 for i in range(5)) for j in range(5)]
    for c in range(5):
        cols.append(tuple(int(a[r][c]) for r in range(5)))
    return cols


@dataclass
class SeymourTree:
    """A decomposition tree plus the global binary matroid and per-bag certificates.

    ``certificates`` maps a node to the object its tag claims the bag restricts
    to: a Graph for graphic/cographic bags (edge i is the i-th element of the
    sorted bag) or an F_2 VectorMatroid for r10x bags.
    """

    matroid: VectorMatroid
    tree: DecompositionTree
    certificates: dict[int, object] = field(default_factory=dict)

    def validate(self, k: int = 2) -> list[str]:
        """Structural checks; returns the list of problems (empty when valid)."""
        problems = []
        try:
            self.tree.validate(self.matroid.n)
        except DecompositionError as exc:
            return [str(exc)]
        for v in self.tree.nodes:
            tag = self.tree.tags.get(v)
            if tag not in SEYMOUR_TAGS:
                problems.append(f"node {v}: bag class {tag!r} is not graphic, cographic or r10x")
        for (a, b), s in self.tree.sums.items():
            if s not in (1, 2, 3):
                problems.append(f"tree edge ({a}, {b}): sum type {s} is not 1, 2 or 3")
        for e, lam in self.tree.edge_thickness(self.matroid).items():
            if lam > k:
                problems.append(f"tree edge {e}: connectivity {lam} exceeds thickness bound {k}")
            s = self.tree.sums.get(e)
            if s is not None and lam > s - 1:
                problems.append(f"tree edge {e}: connectivity {lam} too large for a {s}-sum")
        for v in self.tree.nodes:
            problems.extend(self._check_bag(v))
        return problems

    def bag_matroid(self, v: int) -> Matroid:
        return self.matroid.restrict(self.tree.bags[v])

    def _check_bag(self, v: int) -> list[str]:
        tag = self.tree.tags.get(v)
        bag = self.tree.bags[v]
        cert = self.certificates.get(v)
        if tag not in SEYMOUR_TAGS:
            return []
        if cert is None:
            return [f"node {v}: {tag} bag has no certificate"]
        if tag in ("graphic", "cographic"):
            if not isinstance(cert, Graph) or cert.m != len(bag):
                return [f"node {v}: graph certificate must have exactly {len(bag)} edges"]
            claimed = GraphicMatroid(cert) if tag == "graphic" else CographicMatroid(cert)
        else:
            if not isinstance(cert, VectorMatroid) or cert.n != len(bag):
                return [f"node {v}: r10x certificate must have exactly {len(bag)} columns"]
            claimed = cert
            if cert.simplify()[0].n > 10:
                return [f"node {v}: r10x bag has more than 10 parallel classes"]
        if len(bag) <= TAG_CHECK_LIMIT and not same_ranks(self.bag_matroid(v), claimed):
            return [f"node {v}: bag does not restrict to the certified {tag} matroid"]
        return []
