"""Pure-Python twins of the compiled kernels in ``_core.pyx``."""
import numpy as np


def reduce_boundary(indptr, indices, n):
    """Reduce the boundary matrix given in CSC form over GF(2).

    Returns ``partner`` with ``partner[i] = j`` and ``partner[j] = i`` for
    every persistence pair (i < j) and ``-1`` for unpaired columns.
    """
    partner = np.full(n, -1, dtype=np.int64)
    pivot_of = {}
    cols = [None] * n
    for j in range(n):
        col = set(int(r) for r in indices[indptr[j]:indptr[j + 1]])
        while col:
            low = max(col)
            other = pivot_of.get(low)
            if other is None:
                break
            col ^= cols[other]
        cols[j] = col
        if col:
            low = max(col)
            pivot_of[low] = j
            partner[low] = j
            partner[j] = low
    return partner


def max_matching(cost, eps):
    """Maximum bipartite matching using edges with ``cost <= eps``.

    Returns ``(size, match_row)`` where ``match_row[r]`` is the column
    matched to row ``r`` (or -1).
    """
    nr, nc = cost.shape
    allowed = [np.flatnonzero(cost[r] <= eps) for r in range(nr)]
    match_col = [-1] * nc
    match_row = [-1] * nr

    def augment(r, seen):
        for c in allowed[r]:
            if c in seen:
                continue
            seen.add(c)
            if match_col[c] < 0 or augment(match_col[c], seen):
                match_col[c] = r
                match_row[r] = int(c)
                return True
        return False

    size = 0
    for r in range(nr):
        if augment(r, set()):
            size += 1
    return size, np.asarray(match_row, dtype=np.int64)
