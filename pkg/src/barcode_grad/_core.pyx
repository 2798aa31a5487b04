# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels: GF(2) column reduction and bipartite matching.

Both functions mirror ``_core_py`` exactly; the two implementations are
selected at import time by ``barcode_grad._kernels``.
"""
import numpy as np
cimport numpy as cnp
from libcpp.vector cimport vector

cnp.import_array()


cdef void _symdiff(vector[long]& a, const vector[long]& b, vector[long]& out):
    # a, b sorted ascending; out <- a xor b (sorted)
    cdef size_t i = 0, j = 0
    out.clear()
    while i < a.size() and j < b.size():
        if a[i] < b[j]:
            out.push_back(a[i]); i += 1
        elif b[j] < a[i]:
            out.push_back(b[j]); j += 1
        else:
            i += 1; j += 1
    while i < a.size():
        out.push_back(a[i]); i += 1
    while j < b.size():
        out.push_back(b[j]); j += 1


def reduce_boundary(cnp.int64_t[::1] indptr, cnp.int64_t[::1] indices, long n):
    """Reduce the boundary matrix given in CSC form (rows sorted per column).

    Returns ``partner`` with ``partner[i] = j`` and ``partner[j] = i`` for
    every persistence pair (i < j) and ``-1`` for unpaired columns.
    """
    cdef vector[vector[long]] cols
    cdef vector[long] tmp
    cdef long[::1] pivot_of = np.full(n, -1, dtype=np.int_)
    cdef long j, k, low, other
    cols.resize(n)
    partner = np.full(n, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] part = partner
    for j in range(n):
        for k in range(indptr[j], indptr[j + 1]):
            cols[j].push_back(indices[k])
        while cols[j].size() > 0:
            low = cols[j].back()
            other = pivot_of[low]
            if other < 0:
                break
            _symdiff(cols[j], cols[other], tmp)
            cols[j].swap(tmp)
        if cols[j].size() > 0:
            low = cols[j].back()
            pivot_of[low] = j
            part[low] = j
            part[j] = low
    return partner


def max_matching(double[:, ::1] cost, double eps):
    """Maximum bipartite matching using edges with ``cost <= eps``.

    Returns ``(size, match_row)`` where ``match_row[r]`` is the column
    matched to row ``r`` (or -1).
    """
    cdef Py_ssize_t nr = cost.shape[0], nc = cost.shape[1]
    cdef long[::1] match_col = np.full(nc, -1, dtype=np.int_)
    cdef long[::1] match_row = np.full(nr, -1, dtype=np.int_)
    cdef long[::1] seen = np.full(nc, -1, dtype=np.int_)
    cdef long[::1] stack_row = np.empty(nr + 1, dtype=np.int_)
    cdef long[::1] stack_col = np.empty(nr + 1, dtype=np.int_)
    cdef long[::1] came_from = np.empty(nc, dtype=np.int_)
    cdef Py_ssize_t root, r, c, top, other, size = 0
    cdef bint found
    for root in range(nr):
        # iterative DFS over alternating paths from ``root``
        top = 0
        stack_row[0] = root
        stack_col[0] = 0
        found = False
        while top >= 0 and not found:
            r = stack_row[top]
            c = stack_col[top]
            while c < nc:
                if seen[c] != root and cost[r, c] <= eps:
                    break
                c += 1
            if c >= nc:
                top -= 1
                continue
            stack_col[top] = c + 1
            seen[c] = root
            came_from[c] = r
            if match_col[c] < 0:
                found = True
                # flip the path back to the root
                while True:
                    r = came_from[c]
                    other = match_row[r]
                    match_row[r] = c
                    match_col[c] = r
                    if r == root:
                        break
                    c = other
                break
            top += 1
            stack_row[top] = match_col[c]
            stack_col[top] = 0
        if found:
            size += 1
    return size, np.asarray(match_row, dtype=np.int64)
