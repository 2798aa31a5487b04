import numpy as np
import pytest

from barcode_grad.barcodes import Barcode
from barcode_grad.complex import build_complex, preorder
from barcode_grad.errors import BadDegree, OrderViolation
from barcode_grad.persistence import (
    barcode_template,
    diagram,
    diagrams,
    filtration_order,
    perm_lift,
    reduce,
    total_template,
)
from barcode_grad.barcode_space import quotient
from barcode_grad.verify import random_complex, random_filter

from conftest import filt


def test_filtration_order_examples(segment, triangle_boundary):
    assert filtration_order(filt(segment, [0, 1, 2])).tolist() == [0, 1, 2]
    assert filtration_order(filt(segment, [0, 0, 0])).tolist() == [0, 1, 2]
    assert filtration_order(filt(triangle_boundary, [0, 0, 0, 1, 1, 1])).tolist() == list(range(6))
    assert filtration_order(filt(segment, [1, 0, 2])).tolist() == [1, 0, 2]


def test_reduce_segment(segment):
    cert = reduce(segment, [0, 1, 2])
    assert cert.positive.tolist() == [True, True, False]
    assert cert.partner.tolist() == [-1, 2, 1]
    assert cert.pairs() == [(1, 2)]
    assert cert.unpaired() == [0]


def test_reduce_triangle_boundary(triangle_boundary):
    cert = reduce(triangle_boundary, range(6))
    assert len(cert.pairs()) == 2
    dims = triangle_boundary.dims
    unpaired = cert.unpaired()
    assert sorted(dims[unpaired].tolist()) == [0, 1]


def test_reduce_single_vertex():
    cert = reduce(build_complex([[0]]), [0])
    assert cert.positive.tolist() == [True] and cert.unpaired() == [0]


def test_reduce_rejects_incompatible_order(segment):
    with pytest.raises(OrderViolation):
        reduce(segment, [2, 0, 1])
    with pytest.raises(OrderViolation):
        reduce(segment, [0, 0, 1])


def test_reduce_does_not_freeze_caller_array(segment):
    order = np.array([0, 1, 2])
    reduce(segment, order)
    order[0] = 0  # still writable


def test_diagram_examples(segment, triangle_boundary):
    assert diagram(filt(segment, [0, 1, 2]), 0) == Barcode.from_pairs([(1, 2)], [0])
    f = filt(triangle_boundary, [0, 0, 0, 1, 1, 1])
    assert diagram(f, 0) == Barcode.from_pairs([(0, 1), (0, 1)], [0])
    assert diagram(f, 1) == Barcode.from_pairs([], [1])
    assert diagram(filt(segment, [0, 1, 1]), 0) == Barcode.from_pairs([], [0])


def test_diagram_bad_degree(segment):
    assert diagram(filt(segment, [0, 1, 2]), 1) == Barcode.empty()
    with pytest.raises(BadDegree):
        diagram(filt(segment, [0, 1, 2]), 2)
    with pytest.raises(BadDegree):
        diagram(filt(segment, [0, 1, 2]), -1)


def test_full_triangle(full_triangle):
    f = filt(full_triangle, np.arange(7.0))
    T = total_template(f)
    assert (T.m, T.n) == ([2, 1, 0], [1, 0, 0])
    assert diagram(f, 0) == Barcode.from_pairs([(1, 3), (2, 4)], [0])
    assert diagram(f, 1) == Barcode.from_pairs([(5, 6)])


def test_templates_segment(segment):
    t = barcode_template(filt(segment, [0, 1, 2]), 0)
    assert t.pairs.tolist() == [[1, 2]] and t.unpaired.tolist() == [0]
    assert t == barcode_template(filt(segment, [5, 6, 7]), 0)


def test_template_triangle_boundary_degree1(triangle_boundary):
    t = barcode_template(filt(triangle_boundary, [0, 0, 0, 1, 1, 1]), 1)
    assert t.m == 0 and t.n == 1 and triangle_boundary.dims[t.unpaired[0]] == 1


def test_total_template_counts(segment, triangle_boundary):
    T = total_template(filt(segment, [0, 1, 2]))
    assert (T.m, T.n) == ([1, 0], [1, 0])
    T = total_template(filt(triangle_boundary, [0, 0, 0, 1, 1, 1]))
    assert (T.m, T.n) == ([2, 0], [1, 1])


def test_perm_lift_examples(segment):
    x = perm_lift(filt(segment, [0, 1, 2]))
    assert x[0].data.tolist() == [1, 2, 0] and (x[0].m, x[0].n) == (1, 1)
    y = perm_lift(filt(segment, [5, 6, 7]))
    assert y[0].data.tolist() == [6, 7, 5]
    assert total_template(filt(segment, [0, 1, 2])).permutation().tolist() == [1, 2, 0]


def test_zero_length_pairs_stay_in_template(segment):
    f = filt(segment, [0, 1, 1])
    t = barcode_template(f, 0)
    assert t.m == 1  # pair (b, ab) kept, realized on the diagonal
    assert t.realize(f.values) == Barcode.from_pairs([], [0])


def test_random_invariants(rng):
    for _ in range(100):
        K = random_complex(rng, max_simplices=14, max_vertices=5)
        f = random_filter(K, rng)
        T = total_template(f)
        perm = T.permutation()
        assert sorted(perm.tolist()) == list(range(len(K)))
        assert sum(2 * m + n for m, n in zip(T.m, T.n)) == len(K)
        for p, t in enumerate(T.templates):
            assert all(K.dims[a] == p and K.dims[b] == p + 1 for a, b in t.pairs)
            assert all(K.dims[a] == p for a in t.unpaired)
        for p, (x, D) in enumerate(zip(perm_lift(f), diagrams(f))):
            assert quotient(x) == D


def test_template_transfer_to_equivalent_filter(rng):
    for _ in range(50):
        K = random_complex(rng, max_simplices=14, max_vertices=5)
        f = random_filter(K, rng)
        # strictly increasing reparametrization keeps the pre-order
        g = filt(K, np.exp(f.values) * 3 - 1)
        assert preorder(f) == preorder(g)
        for p in range(K.dim + 1):
            assert barcode_template(f, p).realize(g.values) == diagram(g, p)
