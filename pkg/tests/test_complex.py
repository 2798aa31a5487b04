import numpy as np
import pytest

from barcode_grad.complex import (
    build_complex,
    full_complex,
    gap_radius,
    is_monotone,
    ordering_equivalent,
    preorder,
    validate_filter,
)
from barcode_grad.errors import DuplicateSimplex, EmptyComplex, InvalidSimplex, NotAFiltration, Undefined


def test_segment_closure_and_faces(segment):
    assert len(segment) == 3
    assert segment.faces[segment.index[(0, 1)]] == (0, 1)


def test_triangle_closure_adds_faces():
    K = build_complex([[0, 1, 2]])
    assert len(K) == 7
    assert [len(s) for s in K.simplices] == [1, 1, 1, 2, 2, 2, 3]
    assert K.dim == 2


def test_indexing_is_dimension_then_lex():
    K = build_complex([[2, 3], [0, 1]])
    assert K.simplices == ((0,), (1,), (2,), (3,), (0, 1), (2, 3))


def test_unsorted_input_is_normalized():
    assert build_complex([[1, 0]]) == build_complex([[0, 1]])


def test_duplicate_simplex():
    with pytest.raises(DuplicateSimplex):
        build_complex([[0], [0]])
    with pytest.raises(DuplicateSimplex):
        build_complex([[0, 1], [1, 0]])


def test_empty_and_invalid():
    with pytest.raises(EmptyComplex):
        build_complex([])
    with pytest.raises(InvalidSimplex):
        build_complex([[0, 0]])
    with pytest.raises(InvalidSimplex):
        build_complex([[-1]])


def test_full_complex_counts():
    assert len(full_complex(4, 2)) == 4 + 6 + 4
    assert len(full_complex(4, 3)) == 15


def test_validate_filter(segment):
    validate_filter(segment, [0, 1, 2])
    validate_filter(segment, [1, 1, 1])
    with pytest.raises(NotAFiltration) as exc:
        validate_filter(segment, [0, 1, 0.5])
    assert exc.value.face == (1,) and exc.value.coface == (0, 1)
    with pytest.raises(ValueError):
        validate_filter(segment, [0, 1])


def test_is_monotone_strict(segment):
    assert is_monotone(segment, [0, 1, 2], strict=True)
    assert not is_monotone(segment, [0, 1, 1], strict=True)
    assert is_monotone(segment, [0, 1, 1])


def test_preorder_examples(segment):
    f = validate_filter(segment, [0, 1, 2])
    assert preorder(f) == preorder(validate_filter(segment, [0, 2, 3]))
    assert preorder(f) != preorder(validate_filter(segment, [1, 0, 2]))
    assert ordering_equivalent(f, f)


def test_preorder_ties_are_recorded(segment):
    sig = preorder(validate_filter(segment, [0, 1, 1]))
    S = sig.sign_matrix()
    assert S[1, 2] == 0 and S[0, 1] == -1 and S[2, 0] == 1
    assert np.array_equal(S, -S.T)
    assert list(sig.tied_pairs()) == [(1, 2)]
    assert preorder(validate_filter(segment, [0, 1, 1])) != preorder(validate_filter(segment, [0, 1, 2]))


def test_sign_matrix_matches_values(rng):
    K = build_complex([[0, 1, 2], [2, 3]])
    for _ in range(20):
        v = np.round(rng.uniform(0, 3, K.n_vertices), 0)
        vals = np.array([max(v[list(s)]) for s in K.simplices])
        S = preorder(validate_filter(K, vals)).sign_matrix()
        assert np.array_equal(S, np.sign(vals[:, None] - vals[None, :]))


def test_gap_radius(segment):
    assert gap_radius(validate_filter(segment, [0, 1, 2])) == 0.5
    assert gap_radius(validate_filter(segment, [0, 1, 1])) == 0.0
    assert gap_radius(validate_filter(segment, [0, 0.2, 1])) == pytest.approx(0.1)
    with pytest.raises(Undefined):
        gap_radius(validate_filter(build_complex([[0]]), [0.0]))
