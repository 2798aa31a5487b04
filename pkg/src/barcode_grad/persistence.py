"""Sublevel-set persistence by boundary-matrix reduction over GF(2).

Besides barcodes, the reduction yields barcode templates: the simplex
pairs and unpaired simplices whose filter values realize each diagram.
Templates only depend on the pre-order of the filter, which is what makes
them usable as local coordinates for parametrized filters.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .barcodes import Barcode, OrderedBarcode
from .complex import FilterFunction, SimplicialComplex
from .errors import BadDegree, OrderViolation


def filtration_order(f: FilterFunction) -> np.ndarray:
    """Simplex indices sorted by (value, dimension, lexicographic vertices).

    Canonical indices already sort by (dimension, vertices), so the index is
    the secondary key.
    """
    return np.lexsort((np.arange(len(f.values)), f.values))


@dataclass(frozen=True, eq=False)
class ReductionCertificate:
    """Outcome of the column reduction.

    ``order`` is the total order used; ``positive[s]`` tells whether simplex
    ``s`` creates a class; ``partner[s]`` is the simplex it is paired with,
    or -1 when unpaired.
    """

    order: np.ndarray
    positive: np.ndarray
    partner: np.ndarray

    def pairs(self):
        """(positive, negative) simplex pairs, by increasing negative index."""
        neg = np.flatnonzero(~self.positive)
        return [(int(self.partner[j]), int(j)) for j in neg]

    def unpaired(self):
        return [int(s) for s in np.flatnonzero(self.partner < 0)]


def boundary_csc(K: SimplicialComplex, order: np.ndarray):
    """Boundary matrix columns in filtration positions (CSC arrays)."""
    n = len(K)
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for j, s in enumerate(order):
        rows = sorted(int(pos[i]) for i in K.faces[s])
        if rows and rows[-1] >= j:
            raise OrderViolation(f"face of {K.simplices[s]} appears after it in the order")
        indices.extend(rows)
        indptr[j + 1] = len(indices)
    return indptr, np.asarray(indices, dtype=np.int64)


def reduce(K: SimplicialComplex, order) -> ReductionCertificate:
    """Standard left-to-right column reduction of the boundary matrix."""
    order = np.array(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(len(K))):
        raise OrderViolation("order is not a permutation of the simplices")
    indptr, indices = boundary_csc(K, order)
    partner_pos = _kernels.reduce_boundary(indptr, indices, len(K))
    partner = np.full(len(K), -1, dtype=np.int64)
    positive = np.ones(len(K), dtype=bool)
    for j, q in enumerate(partner_pos):
        if q >= 0:
            partner[order[j]] = order[q]
            if q < j:
                positive[order[j]] = False
    partner.setflags(write=False)
    positive.setflags(write=False)
    order.setflags(write=False)
    return ReductionCertificate(order, positive, partner)


@dataclass(frozen=True, eq=False)
class BarcodeTemplate:
    """Degree-``p`` template: ``pairs`` is an (m, 2) array of (s, s') simplex
    indices sorted by s'; ``unpaired`` holds n simplex indices, sorted."""

    degree: int
    pairs: np.ndarray
    unpaired: np.ndarray

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def n(self) -> int:
        return len(self.unpaired)

    def ordering(self) -> np.ndarray:
        """Simplex read at each slot of the ordered barcode (length 2m+n)."""
        return np.concatenate([self.pairs.reshape(-1), self.unpaired]).astype(np.int64)

    def read(self, values) -> OrderedBarcode:
        vals = np.asarray(getattr(values, "values", values), dtype=float)
        return OrderedBarcode(self.m, self.n, vals[self.ordering()])

    def realize(self, values) -> Barcode:
        vals = np.asarray(getattr(values, "values", values), dtype=float)
        return Barcode.from_pairs(vals[self.pairs] if self.m else (), vals[self.unpaired])

    def __eq__(self, other):
        return (
            isinstance(other, BarcodeTemplate)
            and self.degree == other.degree
            and np.array_equal(self.pairs, other.pairs)
            and np.array_equal(self.unpaired, other.unpaired)
        )

    def __hash__(self):
        return hash((self.degree, self.pairs.tobytes(), self.unpaired.tobytes()))


@dataclass(frozen=True, eq=False)
class TotalBarcodeTemplate:
    """Templates for every degree 0..dim K, partitioning all simplices."""

    templates: tuple

    @property
    def m(self) -> list:
        return [t.m for t in self.templates]

    @property
    def n(self) -> list:
        return [t.n for t in self.templates]

    def __getitem__(self, p: int) -> BarcodeTemplate:
        return self.templates[p]

    def __len__(self):
        return len(self.templates)

    def permutation(self) -> np.ndarray:
        """Concatenated slot orderings: Perm(f) = f[permutation()]."""
        return np.concatenate([t.ordering() for t in self.templates])

    def __eq__(self, other):
        return isinstance(other, TotalBarcodeTemplate) and self.templates == other.templates


def _templates_from_certificate(K: SimplicialComplex, cert: ReductionCertificate) -> TotalBarcodeTemplate:
    dims = K.dims
    out = []
    pairs = cert.pairs()
    unpaired = cert.unpaired()
    for p in range(K.dim + 1):
        P = [(s, t) for s, t in pairs if dims[s] == p]
        P.sort(key=lambda st: st[1])
        U = sorted(s for s in unpaired if dims[s] == p)
        P = np.asarray(P, dtype=np.int64).reshape(-1, 2)
        U = np.asarray(U, dtype=np.int64)
        P.setflags(write=False)
        U.setflags(write=False)
        out.append(BarcodeTemplate(p, P, U))
    return TotalBarcodeTemplate(tuple(out))


def total_template(f: FilterFunction) -> TotalBarcodeTemplate:
    K = f.complex
    return _templates_from_certificate(K, reduce(K, filtration_order(f)))


def _check_degree(K: SimplicialComplex, p: int):
    if not 0 <= p <= K.dim:
        raise BadDegree(f"degree {p} outside 0..{K.dim}")


def barcode_template(f: FilterFunction, p: int) -> BarcodeTemplate:
    _check_degree(f.complex, p)
    return total_template(f)[p]


def diagram(f: FilterFunction, p: int) -> Barcode:
    """Degree-``p`` persistence diagram of the sublevel filtration of f."""
    _check_degree(f.complex, p)
    return total_template(f)[p].realize(f.values)


def diagrams(f: FilterFunction) -> list:
    """Diagrams in all degrees 0..dim K from a single reduction."""
    T = total_template(f)
    return [t.realize(f.values) for t in T.templates]


def perm_lift(f: FilterFunction) -> list:
    """Perm(f): one ordered barcode per degree, read through the total template."""
    return [t.read(f.values) for t in total_template(f).templates]
