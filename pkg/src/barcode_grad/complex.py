"""Finite simplicial complexes, filter functions and their pre-orders."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateSimplex, EmptyComplex, InvalidSimplex, NotAFiltration, ShapeError, Undefined

DEFAULT_TIE_TOL = 1e-12

Simplex = tuple  # strictly increasing tuple of non-negative vertex ids


def _normalize(vertices: Iterable[int]) -> Simplex:
    vs = [int(v) for v in vertices]
    if not vs:
        raise InvalidSimplex("empty simplex")
    if any(v < 0 for v in vs):
        raise InvalidSimplex(f"negative vertex id in {vs}")
    s = tuple(sorted(vs))
    if len(set(s)) != len(s):
        raise InvalidSimplex(f"repeated vertex in {vs}")
    return s


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """A finite abstract simplicial complex with canonical indexing.

    Simplices are sorted by ``(dimension, vertices)``; ``faces[i]`` holds the
    indices of the codimension-1 faces of simplex ``i``.
    """

    simplices: tuple
    faces: tuple
    index: dict = field(repr=False)
    dims: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.simplices)

    def __iter__(self):
        return iter(self.simplices)

    @property
    def dim(self) -> int:
        return int(self.dims.max())

    @property
    def vertices(self) -> tuple:
        """Vertex ids in index order (vertices are the first simplices)."""
        return tuple(s[0] for s in self.simplices if len(s) == 1)

    @property
    def n_vertices(self) -> int:
        return int(np.count_nonzero(self.dims == 0))

    def vertex_positions(self) -> list:
        """For each simplex, the positions of its vertices among ``vertices``."""
        pos = {v: i for i, v in enumerate(self.vertices)}
        return [tuple(pos[v] for v in s) for s in self.simplices]

    def simplices_of_dim(self, p: int) -> np.ndarray:
        return np.flatnonzero(self.dims == p)

    def face_pairs(self):
        """Yield every (face, coface) index pair with codimension 1."""
        for j, fs in enumerate(self.faces):
            for i in fs:
                yield i, j

    def __eq__(self, other):
        return isinstance(other, SimplicialComplex) and self.simplices == other.simplices

    def __hash__(self):
        return hash(self.simplices)


def build_complex(simplex_list: Sequence[Iterable[int]]) -> SimplicialComplex:
    """Build the face closure of ``simplex_list``.

    Raises ``DuplicateSimplex`` when two input entries coincide after
    sorting and ``EmptyComplex`` on empty input.
    """
    if len(simplex_list) == 0:
        raise EmptyComplex("no simplices given")
    given = [_normalize(s) for s in simplex_list]
    seen = set()
    for s in given:
        if s in seen:
            raise DuplicateSimplex(f"simplex {list(s)} listed twice")
        seen.add(s)
    closure = set()
    for s in given:
        for k in range(1, len(s) + 1):
            closure.update(combinations(s, k))
    ordered = sorted(closure, key=lambda s: (len(s), s))
    index = {s: i for i, s in enumerate(ordered)}
    faces = tuple(
        tuple(sorted(index[f] for f in combinations(s, len(s) - 1))) if len(s) > 1 else ()
        for s in ordered
    )
    dims = np.array([len(s) - 1 for s in ordered], dtype=np.int64)
    dims.setflags(write=False)
    return SimplicialComplex(tuple(ordered), faces, index, dims)


def full_complex(n_vertices: int, max_dim: int) -> SimplicialComplex:
    """All simplices on ``n_vertices`` vertices of dimension ``<= max_dim``."""
    tops = list(combinations(range(n_vertices), min(max_dim, n_vertices - 1) + 1))
    return build_complex(tops)


@dataclass(frozen=True, eq=False)
class FilterFunction:
    """Real values on the simplices of ``complex``, monotone under inclusion."""

    complex: SimplicialComplex
    values: np.ndarray

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def validate_filter(K: SimplicialComplex, values) -> FilterFunction:
    """Return a FilterFunction if ``values`` is monotone on ``K``.

    Raises ``NotAFiltration(face, coface)`` at the first violation found in
    index order, with the simplices given as vertex tuples.
    """
    vals = np.array(values, dtype=float).reshape(-1)
    if vals.shape[0] != len(K):
        raise ShapeError(f"expected {len(K)} values, got {vals.shape[0]}")
    if not np.all(np.isfinite(vals)):
        raise ValueError("filter values must be finite")
    for j, fs in enumerate(K.faces):
        for i in fs:
            if vals[i] > vals[j]:
                raise NotAFiltration(K.simplices[i], K.simplices[j])
    vals.setflags(write=False)
    return FilterFunction(K, vals)


def is_monotone(K: SimplicialComplex, values, strict: bool = False) -> bool:
    vals = np.asarray(values, dtype=float)
    for i, j in K.face_pairs():
        if vals[i] > vals[j] or (strict and vals[i] == vals[j]):
            return False
    return True


@dataclass(frozen=True)
class PreorderSignature:
    """Canonical encoding of the total pre-order induced by a filter.

    ``order`` lists simplex indices by increasing value, with indices sorted
    inside each tie group; ``breaks`` are the start offsets of tie groups.
    """

    order: tuple
    breaks: tuple

    def ranks(self) -> np.ndarray:
        """Tie-group rank of every simplex."""
        r = np.empty(len(self.order), dtype=np.int64)
        bounds = list(self.breaks) + [len(self.order)]
        for g in range(len(self.breaks)):
            for k in range(bounds[g], bounds[g + 1]):
                r[self.order[k]] = g
        return r

    def sign_matrix(self) -> np.ndarray:
        """Matrix of sign(f(s) - f(t)) with entries in {-1, 0, 1}."""
        r = self.ranks()
        return np.sign(r[:, None] - r[None, :]).astype(np.int8)

    def tied_pairs(self):
        """Pairs (i, j), i < j, lying in a common tie group."""
        bounds = list(self.breaks) + [len(self.order)]
        for g in range(len(self.breaks)):
            group = sorted(self.order[bounds[g]:bounds[g + 1]])
            yield from combinations(group, 2)


def preorder(f: FilterFunction | np.ndarray, tol: float = DEFAULT_TIE_TOL) -> PreorderSignature:
    """Pre-order signature; values closer than ``tol`` along the sorted
    sequence are merged into one tie group."""
    vals = np.asarray(getattr(f, "values", f), dtype=float)
    perm = np.argsort(vals, kind="stable")
    order, breaks = [], []
    start = 0
    for k in range(1, len(perm) + 1):
        if k == len(perm) or vals[perm[k]] - vals[perm[k - 1]] > tol:
            breaks.append(len(order))
            order.extend(sorted(int(i) for i in perm[start:k]))
            start = k
    return PreorderSignature(tuple(order), tuple(breaks))


def ordering_equivalent(f, g, tol: float = DEFAULT_TIE_TOL) -> bool:
    return preorder(f, tol) == preorder(g, tol)


def gap_radius(f: FilterFunction | np.ndarray) -> float:
    """Half the smallest gap between values of two distinct simplices."""
    vals = np.sort(np.asarray(getattr(f, "values", f), dtype=float))
    if len(vals) < 2:
        raise Undefined("gap radius needs at least two simplices")
    return 0.5 * float(np.min(np.diff(vals)))
