import itertools
import math

import numpy as np
import pytest

from barcode_grad.barcode_space import (
    bottleneck,
    bottleneck_matching,
    lipschitz_check_Q,
    quotient,
    wasserstein,
    wasserstein_matching,
)
from barcode_grad.barcodes import Barcode, OrderedBarcode
from barcode_grad.errors import BadExponent, ShapeError


def brute_force(A, B, q=None):
    """Min over all partial injections A -> B; unmatched points go to their
    diagonal projection. Bottleneck if q is None, else q-Wasserstein."""
    A, B = np.asarray(A, float).reshape(-1, 2), np.asarray(B, float).reshape(-1, 2)
    best = math.inf
    for r in range(min(len(A), len(B)) + 1):
        for sa in itertools.combinations(range(len(A)), r):
            for sb in itertools.permutations(range(len(B)), r):
                costs = [np.max(np.abs(A[i] - B[j])) for i, j in zip(sa, sb)]
                costs += [(A[i, 1] - A[i, 0]) / 2 for i in range(len(A)) if i not in sa]
                costs += [(B[j, 1] - B[j, 0]) / 2 for j in range(len(B)) if j not in sb]
                if q is None:
                    c = max(costs, default=0.0)
                else:
                    c = sum(x**q for x in costs) ** (1 / q)
                best = min(best, c)
    return best


def random_diagram(rng, k):
    b = rng.uniform(0, 2, k)
    return np.column_stack([b, b + rng.uniform(0.01, 2, k)])


def test_quotient_examples():
    assert quotient(OrderedBarcode(2, 0, [1, 2, 1, 2])) == Barcode.from_pairs([(1, 2), (1, 2)])
    assert quotient(OrderedBarcode(1, 0, [3, 3])) == Barcode.empty()
    assert quotient(OrderedBarcode(1, 1, [0, 1, 5])) == Barcode.from_pairs([(0, 1)], [5])


def test_ordered_barcode_shape_checked():
    with pytest.raises(ShapeError):
        OrderedBarcode(1, 1, [0, 1])


def test_bottleneck_examples():
    D = Barcode.from_pairs([(0, 2)])
    assert bottleneck(D, D) == 0
    assert bottleneck(D, Barcode.empty()) == 1
    assert bottleneck(Barcode.from_pairs([], [0]), Barcode.empty()) == math.inf


def test_infinite_bars_matched_by_sorted_births():
    D = Barcode.from_pairs([], [0, 5])
    E = Barcode.from_pairs([], [4.5, 0.25])
    m = bottleneck_matching(D, E)
    assert m.value == 0.5
    assert wasserstein(D, E) == pytest.approx(0.75)


def test_wasserstein_examples():
    D = Barcode.from_pairs([(0, 2)])
    assert wasserstein(D, D, 2) == 0
    assert wasserstein(Barcode.from_pairs([(0, 2), (0, 2)]), Barcode.empty(), 1) == 2
    assert wasserstein(D, Barcode.from_pairs([(0, 4)]), 1) == 2
    with pytest.raises(BadExponent):
        wasserstein(D, D, 0)
    assert wasserstein_matching(D, D, 0.5).approximate
    assert not wasserstein_matching(D, D, 1).approximate


def test_against_exhaustive_matchings(rng):
    for _ in range(300):
        A = random_diagram(rng, int(rng.integers(0, 5)))
        B = random_diagram(rng, int(rng.integers(0, 5)))
        D, E = Barcode.from_pairs(A), Barcode.from_pairs(B)
        assert bottleneck(D, E) == pytest.approx(brute_force(A, B), abs=1e-12)
        for q in (1, 2):
            assert wasserstein(D, E, q) == pytest.approx(brute_force(A, B, q), abs=1e-12)


def test_bottleneck_matching_edges_realize_value(rng):
    for _ in range(100):
        D = Barcode.from_pairs(random_diagram(rng, 3))
        E = Barcode.from_pairs(random_diagram(rng, 2))
        m = bottleneck_matching(D, E)
        assert max(e.cost for e in m.edges) == pytest.approx(m.value)
        covered_a = sorted(e.i for e in m.edges if e.kind != "diag_b")
        covered_b = sorted(e.j for e in m.edges if e.kind != "diag_a")
        assert covered_a == [0, 1, 2] and covered_b == [0, 1]


def test_metric_axioms(rng):
    for _ in range(100):
        X, Y, Z = (Barcode.from_pairs(random_diagram(rng, int(rng.integers(0, 4)))) for _ in range(3))
        assert bottleneck(X, Y) == pytest.approx(bottleneck(Y, X))
        assert bottleneck(X, Z) <= bottleneck(X, Y) + bottleneck(Y, Z) + 1e-12
        assert (bottleneck(X, Y) == 0) == (X == Y)


def test_lipschitz_examples():
    x = OrderedBarcode(1, 0, [0, 1])
    assert lipschitz_check_Q(x, x).ok
    r = lipschitz_check_Q(x, OrderedBarcode(1, 0, [0, 3]))
    # both points to the diagonal: max(0.5, 1.5); matching them costs 2
    assert r.ok and r.bottleneck == 1.5 and r.linf == 2
    assert brute_force([(0, 1)], [(0, 3)]) == 1.5
    with pytest.raises(ShapeError):
        lipschitz_check_Q(x, OrderedBarcode(0, 1, [0]))


def _above_diagonal(rng, m, n):
    v = rng.normal(size=2 * m + n)
    v[1:2 * m:2] = v[0:2 * m:2] + np.abs(v[1:2 * m:2])
    return v


def test_lipschitz_random(rng):
    for _ in range(1000):
        m, n = int(rng.integers(0, 4)), int(rng.integers(0, 3))
        x = OrderedBarcode(m, n, _above_diagonal(rng, m, n))
        y = OrderedBarcode(m, n, _above_diagonal(rng, m, n))
        assert lipschitz_check_Q(x, y).ok


def test_barcode_rejects_reversed_interval():
    with pytest.raises(ValueError):
        Barcode.from_pairs([(2, 1)])


def test_without_short_uses_distance_to_diagonal():
    D = Barcode.from_pairs([(0, 1), (0, 3)], [0])
    assert D.without_short(0.6) == Barcode.from_pairs([(0, 3)], [0])
    assert D.without_short(0.5) == D


def test_dict_roundtrip():
    D = Barcode.from_pairs([(0, 1), (0.5, 3)], [0, 2])
    assert Barcode.from_dict(D.to_dict()) == D
