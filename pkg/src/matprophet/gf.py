"""
Dense linear algebra over the prime field F_p.

Vectors are plain tuples of ints in ``range(p)``; matrices are sequences of
such tuples.  Everything here is sized for desk-scale instances (a few dozen
coordinates), so the routines are pure Python rather than numpy.
"""

from __future__ import annotations

from itertools import product
from typing import Iterable, Sequence

Vector = tuple[int, ...]


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def check_prime(p: int) -> None:
    if not isinstance(p, int) or not is_prime(p):
        raise ValueError(f"field characteristic must be prime, got {p!r}")


def normalize(v: Iterable[int], p: int) -> Vector:
    return tuple(int(x) % p for x in v)


def is_zero(v: Sequence[int]) -> bool:
    return not any(v)


def add(u: Sequence[int], v: Sequence[int], p: int) -> Vector:
    return tuple((a + b) % p for a, b in zip(u, v))


def scale(c: int, v: Sequence[int], p: int) -> Vector:
    return tuple((c * a) % p for a in v)


def dot(u: Sequence[int], v: Sequence[int], p: int) -> int:
    return sum(a * b for a, b in zip(u, v)) % p


class EchelonBasis:
    """Incrementally maintained echelon basis of a subspace of F_p^d.

    Every stored row has a 1 at its pivot and zeros at the pivots of all rows
    inserted before it, so reducing a vector against the rows in insertion
    order clears every pivot coordinate.
    """

    def __init__(self, dim: int, p: int):
        self.dim = dim
        self.p = p
        self.rows: list[list[int]] = []
        self.pivots: list[int] = []

    def __len__(self) -> int:
        return len(self.rows)

    def copy(self) -> "EchelonBasis":
        out = EchelonBasis(self.dim, self.p)
        out.rows = [r[:] for r in self.rows]
        out.pivots = self.pivots[:]
        return out

    def reduce(self, v: Sequence[int]) -> list[int]:
        p = self.p
        w = [x % p for x in v]
        for piv, row in zip(self.pivots, self.rows):
            c = w[piv]
            if c:
                for j in range(self.dim):
                    if row[j]:
                        w[j] = (w[j] - c * row[j]) % p
        return w

    def contains(self, v: Sequence[int]) -> bool:
        return not any(self.reduce(v))

    def insert(self, v: Sequence[int]) -> bool:
        """Add ``v``; return False (and leave the basis unchanged) if it is dependent."""
        w = self.reduce(v)
        for j, x in enumerate(w):
            if x:
                inv = pow(x, -1, self.p)
                w = [(y * inv) % self.p for y in w]
                self.rows.append(w)
                self.pivots.append(j)
                return True
        return False


def rank(vectors: Iterable[Sequence[int]], p: int, dim: int | None = None) -> int:
    vecs = list(vectors)
    if not vecs:
        return 0
    basis = EchelonBasis(dim if dim is not None else len(vecs[0]), p)
    r = 0
    for v in vecs:
        if basis.insert(v):
            r += 1
    return r


def rref(rows: Sequence[Sequence[int]], p: int) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    m = [[x % p for x in r] for r in rows]
    if not m:
        return [], []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, len(m)) if m[i][c]), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = pow(m[r][c], -1, p)
        m[r] = [(x * inv) % p for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows: Sequence[Sequence[int]], p: int, ncols: int | None = None) -> list[Vector]:
    """Basis of {x : A x = 0} where A has the given rows."""
    if ncols is None:
        if not rows:
            raise ValueError("ncols is required for an empty matrix")
        ncols = len(rows[0])
    red, pivots = rref(rows, p) if rows else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        x = [0] * ncols
        x[f] = 1
        for row, pc in zip(red, pivots):
            x[pc] = (-row[f]) % p
        basis.append(tuple(x))
    return basis


def span_basis(vectors: Iterable[Sequence[int]], p: int, dim: int) -> list[Vector]:
    """A basis (subset of the input) of the span of ``vectors``."""
    eb = EchelonBasis(dim, p)
    out = []
    for v in vectors:
        if eb.insert(v):
            out.append(normalize(v, p))
    return out


def intersect_spans(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]], p: int, dim: int) -> list[Vector]:
    """Basis of span(a) ∩ span(b).

    Solves sum x_i a_i = sum y_j b_j through the null space of [A | -B] and
    maps the solutions back through A.
    """
    a = span_basis(a, p, dim)
    b = span_basis(b, p, dim)
    if not a or not b:
        return []
    rows = []
    for coord in range(dim):
        rows.append([v[coord] for v in a] + [(-v[coord]) % p for v in b])
    sols = nullspace(rows, p, len(a) + len(b))
    images = []
    for s in sols:
        x = [0] * dim
        for coef, v in zip(s[: len(a)], a):
            if coef:
                for j in range(dim):
                    x[j] = (x[j] + coef * v[j]) % p
        images.append(tuple(x))
    return span_basis(images, p, dim)


def coordinates(basis: Sequence[Sequence[int]], v: Sequence[int], p: int) -> Vector:
    """Coefficients c with sum c_i basis_i = v; raises if v is outside the span."""
    dim = len(v)
    k = len(basis)
    if k == 0:
        if any(x % p for x in v):
            raise ValueError("vector is not in the span of the basis")
        return ()
    rows = [[basis[i][j] % p for i in range(k)] + [v[j] % p] for j in range(dim)]
    red, pivots = rref(rows, p)
    if k in pivots:
        raise ValueError("vector is not in the span of the basis")
    if len(pivots) < k:
        raise ValueError("basis vectors are linearly dependent")
    c = [0] * k
    for row, pc in zip(red, pivots):
        c[pc] = row[k]
    return tuple(c)


def annihilator(vectors: Sequence[Sequence[int]], p: int, dim: int) -> list[Vector]:
    """Basis of {y : y . v = 0 for all v}; its rows realize the quotient by span(vectors)."""
    vecs = [list(v) for v in vectors]
    if not vecs:
        return [tuple(1 if i == j else 0 for i in range(dim)) for j in range(dim)]
    return nullspace(vecs, p, dim)


def all_vectors(dim: int, p: int) -> Iterable[Vector]:
    return product(range(p), repeat=dim)


def combine(coeffs: Sequence[int], basis: Sequence[Sequence[int]], p: int, dim: int) -> Vector:
    x = [0] * dim
    for c, v in zip(coeffs, basis):
        if c:
            for j in range(dim):
                x[j] = (x[j] + c * v[j]) % p
    return tuple(x)
