"""Ordered barcodes, the quotient map, and bottleneck/Wasserstein distances.

Off-diagonal points may be matched to the diagonal only at their
orthogonal projection, at L-infinity cost ``(d - b) / 2``. Infinite bars
are matched separately by sorted births.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _kernels
from .barcodes import Barcode, OrderedBarcode
from .errors import BadExponent, ShapeError

__all__ = [
    "Barcode",
    "OrderedBarcode",
    "Matching",
    "quotient",
    "bottleneck",
    "bottleneck_matching",
    "wasserstein",
    "wasserstein_matching",
    "lipschitz_check_Q",
]


def quotient(x: OrderedBarcode) -> Barcode:
    """Q_{m,n}: forget the ordering and drop pairs lying on the diagonal."""
    fin = np.column_stack([x.births, x.deaths]) if x.m else ()
    return Barcode.from_pairs(fin, x.infinite)


@dataclass(frozen=True)
class Edge:
    """One matched pair of a finite matching.

    ``kind`` is ``"point"`` (A[i] to B[j]), ``"diag_a"`` (A[i] to its
    projection) or ``"diag_b"`` (B[j] to its projection).
    """

    kind: str
    i: int
    j: int
    cost: float


@dataclass(frozen=True)
class Matching:
    """Optimal partial matching between two diagrams.

    ``edges`` covers the finite off-diagonal points; ``infinite`` lists
    (i, j) index pairs between infinite bars with their costs.
    """

    value: float
    edges: tuple = ()
    infinite: tuple = ()
    infinite_costs: tuple = ()
    approximate: bool = False
    candidates: np.ndarray = field(default=None, repr=False, compare=False)


def _linf(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if len(A) == 0 or len(B) == 0:
        return np.zeros((len(A), len(B)))
    return np.max(np.abs(A[:, None, :] - B[None, :, :]), axis=2)


def augmented_costs(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Square cost matrix over ``A + diag(B)`` rows and ``B + diag(A)`` columns.

    Forbidden entries are ``inf``; diagonal-to-diagonal entries are 0.
    """
    k, l = len(A), len(B)
    N = k + l
    C = np.full((N, N), np.inf)
    C[:k, :l] = _linf(A, B)
    if k:
        C[np.arange(k), l + np.arange(k)] = (A[:, 1] - A[:, 0]) / 2.0
    if l:
        C[k + np.arange(l), np.arange(l)] = (B[:, 1] - B[:, 0]) / 2.0
    C[k:, l:] = 0.0
    return C


def _edges_from_assignment(rows, cols, C, k, l) -> tuple:
    edges = []
    for r, c in zip(rows, cols):
        r, c = int(r), int(c)
        if r < k and c < l:
            edges.append(Edge("point", r, c, float(C[r, c])))
        elif r < k:
            edges.append(Edge("diag_a", r, -1, float(C[r, c])))
        elif c < l:
            edges.append(Edge("diag_b", -1, c, float(C[r, c])))
    return tuple(edges)


def _infinite_match(a: np.ndarray, b: np.ndarray):
    ia, ib = np.argsort(a, kind="stable"), np.argsort(b, kind="stable")
    costs = np.abs(a[ia] - b[ib])
    return tuple(zip(ia.tolist(), ib.tolist())), tuple(costs.tolist())


def finite_bottleneck(A: np.ndarray, B: np.ndarray):
    """Bottleneck value and matching edges between two finite point sets.

    Binary search over the sorted candidate costs, testing each threshold
    for a perfect matching by augmenting paths.
    """
    k, l = len(A), len(B)
    if k + l == 0:
        return 0.0, (), np.zeros(0)
    C = augmented_costs(A, B)
    relevant = np.isfinite(C)
    relevant[k:, l:] = False
    cand = np.unique(np.concatenate([[0.0], C[relevant]]))
    lo, hi = 0, len(cand) - 1
    best = None
    while lo < hi:
        mid = (lo + hi) // 2
        size, match = _kernels.max_matching(C, float(cand[mid]))
        if size == k + l:
            hi = mid
            best = (mid, match)
        else:
            lo = mid + 1
    if best is None or best[0] != lo:
        size, match = _kernels.max_matching(C, float(cand[lo]))
        assert size == k + l
    else:
        match = best[1]
    rows = np.arange(k + l)
    return float(cand[lo]), _edges_from_assignment(rows, match, C, k, l), C[relevant]


def bottleneck_matching(D: Barcode, E: Barcode) -> Matching:
    """Exact bottleneck distance with an optimal matching.

    The value is ``inf`` when the numbers of infinite bars differ.
    """
    if len(D.infinite) != len(E.infinite):
        return Matching(math.inf)
    value, edges, cand = finite_bottleneck(D.finite, E.finite)
    inf_pairs, inf_costs = _infinite_match(D.infinite, E.infinite)
    if inf_costs:
        value = max(value, max(inf_costs))
    return Matching(value, edges, inf_pairs, inf_costs, candidates=cand)


def bottleneck(D: Barcode, E: Barcode) -> float:
    return bottleneck_matching(D, E).value


def finite_wasserstein(A: np.ndarray, B: np.ndarray, q: float):
    """Optimal sum of q-th powers of L-infinity costs, with its assignment."""
    k, l = len(A), len(B)
    if k + l == 0:
        return 0.0, (), np.zeros((0, 0))
    C = augmented_costs(A, B)
    Cq = C ** q
    rows, cols = linear_sum_assignment(Cq)
    total = float(Cq[rows, cols].sum())
    return total, _edges_from_assignment(rows, cols, C, k, l), Cq


def wasserstein_matching(D: Barcode, E: Barcode, q: float = 1.0) -> Matching:
    """q-Wasserstein distance with L-infinity ground cost.

    Exact for q >= 1; for 0 < q < 1 the same assignment is returned and
    the result is flagged ``approximate``.
    """
    if not q > 0:
        raise BadExponent(f"exponent must be positive, got {q}")
    if len(D.infinite) != len(E.infinite):
        return Matching(math.inf, approximate=q < 1)
    total, edges, _ = finite_wasserstein(D.finite, E.finite, q)
    inf_pairs, inf_costs = _infinite_match(D.infinite, E.infinite)
    total += float(np.sum(np.asarray(inf_costs) ** q)) if inf_costs else 0.0
    return Matching(total ** (1.0 / q), edges, inf_pairs, inf_costs, approximate=q < 1)


def wasserstein(D: Barcode, E: Barcode, q: float = 1.0) -> float:
    return wasserstein_matching(D, E, q).value


@dataclass(frozen=True)
class LipschitzReport:
    ok: bool
    bottleneck: float
    linf: float
    l2: float


def lipschitz_check_Q(x: OrderedBarcode, y: OrderedBarcode) -> LipschitzReport:
    """Check db(Q(x), Q(y)) <= |x - y|_inf <= |x - y|_2."""
    if x.shape != y.shape:
        raise ShapeError(f"ordered barcodes of shapes {x.shape} and {y.shape}")
    db = bottleneck(quotient(x), quotient(y))
    diff = x.data - y.data
    linf = float(np.max(np.abs(diff))) if len(diff) else 0.0
    l2 = float(np.linalg.norm(diff))
    return LipschitzReport(db <= linf + 1e-12 and linf <= l2 + 1e-12, db, linf, l2)
