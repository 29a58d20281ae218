"""Undirected multigraphs with union-find based component counting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.sets = n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the classes of a and b; False if they were already merged."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.sets -= 1
        return True


@dataclass(frozen=True)
class Graph:
    """Vertex count plus an edge list; parallel edges and self-loops are allowed.

    Edge ``i`` of the list is matroid element ``i`` of the graphic and
    cographic matroids built on top of it.
    """

    vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(u), int(v)) for u, v in self.edges))
        if self.vertices < 0:
            raise ValueError("vertex count must be nonnegative")
        for i, (u, v) in enumerate(self.edges):
            if not (0 <= u < self.vertices and 0 <= v < self.vertices):
                raise ValueError(f"edge {i} = ({u}, {v}) has an endpoint outside 0..{self.vertices - 1}")

    @property
    def m(self) -> int:
        return len(self.edges)

    def components(self, edge_ids: Iterable[int] | None = None) -> int:
        uf = UnionFind(self.vertices)
        ids = range(self.m) if edge_ids is None else edge_ids
        for i in ids:
            u, v = self.edges[i]
            uf.union(u, v)
        return uf.sets

    def forest_rank(self, edge_ids: Iterable[int]) -> int:
        """Size of a spanning forest of the given edges."""
        uf = UnionFind(self.vertices)
        r = 0
        for i in edge_ids:
            u, v = self.edges[i]
            if uf.union(u, v):
                r += 1
        return r

    def is_simple(self) -> bool:
        seen = set()
        for u, v in self.edges:
            if u == v:
                return False
            key = (min(u, v), max(u, v))
            if key in seen:
                return False
            seen.add(key)
        return True

    def subgraph(self, edge_ids: Sequence[int]) -> "Graph":
        """Keep the listed edges (in the given order) and every vertex."""
        return Graph(self.vertices, tuple(self.edges[i] for i in edge_ids))

    def contract(self, edge_ids: Iterable[int]) -> tuple["Graph", list[int]]:
        """Contract the listed edges.

        Returns the contracted graph and the original ids of its edges, in order.
        Vertices are renumbered contiguously by the smallest original vertex of
        each merged class.
        """
        contracted = set(edge_ids)
        uf = UnionFind(self.vertices)
        for i in contracted:
            u, v = self.edges[i]
            uf.union(u, v)
        reps = sorted({uf.find(v) for v in range(self.vertices)})
        index = {r: j for j, r in enumerate(reps)}
        kept = [i for i in range(self.m) if i not in contracted]
        new_edges = tuple((index[uf.find(self.edges[i][0])], index[uf.find(self.edges[i][1])]) for i in kept)
        return Graph(len(reps), new_edges), kept

    def incident(self, v: int) -> list[int]:
        return [i for i, (a, b) in enumerate(self.edges) if a == v or b == v]

    def incidence_columns(self, p: int = 2) -> list[tuple[int, ...]]:
        """Signed vertex-edge incidence columns over F_p (self-loops give zero columns)."""
        cols = []
        for u, v in self.edges:
            col = [0] * self.vertices
            if u != v:
                col[u] = 1
                col[v] = (p - 1) % p if p != 2 else 1
            cols.append(tuple(col))
        return cols

    def to_dict(self) -> dict:
        return {"vertices": self.vertices, "edges": [list(e) for e in self.edges]}


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def cycle_graph(n: int) -> Graph:
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def star_graph(leaves: int) -> Graph:
    return Graph(leaves + 1, tuple((0, i) for i in range(1, leaves + 1)))
