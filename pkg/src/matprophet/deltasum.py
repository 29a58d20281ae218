"""
1-, 2- and 3-sums of binary matroids.

Both summands are F_2 vector matroids whose elements are identified by label;
the overlap Z is the set of shared labels.  The sum lives on the symmetric
difference, and its cycles are the sets C1 ^ C2 with C_i a cycle of M_i
(disjoint union of circuits, i.e. a kernel vector of the representation)
that agree on Z.
"""

from __future__ import annotations

from itertools import combinations

from . import gf
from .matroid import InputError, VectorMatroid


class DeltaSumError(InputError):
    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        super().__init__(f"{condition}: {detail}" if detail else condition)


def _kernel(m: VectorMatroid) -> list[tuple[int, ...]]:
    if m.dim == 0:
        return [tuple(1 if i == j else 0 for i in range(m.n)) for j in range(m.n)]
    rows = [[m.columns[j][i] for j in range(m.n)] for i in range(m.dim)]
    return gf.nullspace(rows, 2, m.n)


def cycle_space(m: VectorMatroid) -> list[tuple[int, ...]]:
    """Basis of the cycle space (incidence vectors over the ground set)."""
    if m.p != 2:
        raise InputError("cycle spaces are only used for binary matroids")
    return _kernel(m)


def from_cycle_space(cycles: list[tuple[int, ...]], n: int, labels) -> VectorMatroid:
    """Binary matroid whose cycle space is the span of ``cycles``, in standard form."""
    if cycles:
        rows = gf.nullspace(cycles, 2, n)
    else:
        rows = [tuple(1 if i == j else 0 for i in range(n)) for j in range(n)]
    red, _ = gf.rref(rows, 2) if rows else ([], [])
    cols = [tuple(r[j] for r in red) for j in range(n)]
    return VectorMatroid(2, cols, labels, dim=len(red))


def _overlap(m1: VectorMatroid, m2: VectorMatroid) -> list[str]:
    for m in (m1, m2):
        if m.p != 2:
            raise DeltaSumError("binary", "both summands must be vector matroids over F_2")
        if len(set(m.labels)) != m.n:
            raise DeltaSumError("labels", "element labels must be distinct within a summand")
    shared = set(m2.labels)
    return [x for x in m1.labels if x in shared]


def _check_overlap_agrees(m1: VectorMatroid, m2: VectorMatroid, z: list[str]) -> None:
    i1 = [m1.labels.index(x) for x in z]
    i2 = [m2.labels.index(x) for x in z]
    for r in range(1, len(z) + 1):
        for sub in combinations(range(len(z)), r):
            if m1.rank(i1[j] for j in sub) != m2.rank(i2[j] for j in sub):
                raise DeltaSumError("overlap mismatch", "the summands restrict to different matroids on the shared elements")


def classify_sum(m1: VectorMatroid, m2: VectorMatroid) -> int:
    """Return 1, 2 or 3 for a valid k-sum, else raise naming the failed condition."""
    z = _overlap(m1, m2)
    n1, n2 = m1.n, m2.n
    if len(z) == 0:
        if n1 == 0 or n2 == 0:
            raise DeltaSumError("nonempty", "1-sum needs nonempty summands")
        return 1
    if len(z) == 1:
        if n1 < 3 or n2 < 3:
            raise DeltaSumError("size bound", f"2-sum needs |E1|, |E2| >= 3 (got {n1}, {n2})")
        for name, m in (("M1", m1), ("M2", m2)):
            e = m.labels.index(z[0])
            if e in m.loops:
                raise DeltaSumError("loop", f"shared element {z[0]!r} is a loop of {name}")
            if m.is_coloop(e):
                raise DeltaSumError("coloop", f"shared element {z[0]!r} is a coloop of {name}")
        return 2
    if len(z) == 3:
        if n1 < 7 or n2 < 7:
            raise DeltaSumError("size bound", f"3-sum needs |E1|, |E2| >= 7 (got {n1}, {n2})")
        _check_overlap_agrees(m1, m2, z)
        for name, m in (("M1", m1), ("M2", m2)):
            idx = [m.labels.index(x) for x in z]
            if not (m.rank(idx) == 2 and all(m.rank(p) == 2 for p in combinations(idx, 2))):
                raise DeltaSumError("circuit", f"shared elements are not a circuit of {name}")
            # Z holds no cocircuit iff deleting any nonempty part of Z keeps the rank
            rest = [e for e in range(m.n) if e not in idx]
            if m.rank(rest) != m.full_rank():
                raise DeltaSumError("cocircuit", f"shared elements contain a cocircuit of {name}")
        return 3
    raise DeltaSumError("overlap size", f"shared set has {len(z)} elements; expected 0, 1 or 3")


def delta_sum(m1: VectorMatroid, m2: VectorMatroid) -> VectorMatroid:
    """Binary matroid on E1 ^ E2 with cycles {C1 ^ C2 : C1|Z = C2|Z}.

    Elements of the result are ordered as M1's private elements followed by
    M2's, each in their original order; labels are carried over.
    """
    z = _overlap(m1, m2)
    zs = set(z)
    own1 = [i for i, x in enumerate(m1.labels) if x not in zs]
    own2 = [i for i, x in enumerate(m2.labels) if x not in zs]
    z1 = [m1.labels.index(x) for x in z]
    z2 = [m2.labels.index(x) for x in z]
    k1, k2 = _kernel(m1), _kernel(m2)
    n = len(own1) + len(own2)
    labels = [m1.labels[i] for i in own1] + [m2.labels[i] for i in own2]
    if z:
        # coefficient vectors (a, b) with sum a K1|Z + sum b K2|Z = 0
        eqs = [[v[j] for v in k1] + [v[j2] for v in k2] for j, j2 in zip(z1, z2)]
        sols = gf.nullspace(eqs, 2, len(k1) + len(k2))
    else:
        sols = [tuple(1 if i == j else 0 for i in range(len(k1) + len(k2))) for j in range(len(k1) + len(k2))]
    cycles = []
    for s in sols:
        c1 = gf.combine(s[: len(k1)], k1, 2, m1.n)
        c2 = gf.combine(s[len(k1):], k2, 2, m2.n)
        cycles.append(tuple(c1[i] for i in own1) + tuple(c2[i] for i in own2))
    cycles = gf.span_basis(cycles, 2, n)
    return from_cycle_space(cycles, n, labels)


def checked_sum(m1: VectorMatroid, m2: VectorMatroid) -> tuple[VectorMatroid, int]:
    kind = classify_sum(m1, m2)
    return delta_sum(m1, m2), kind
