import json

import numpy as np
import pytest

from barcode_grad import build_complex, validate_filter
from barcode_grad.corpora import LOSSES, PARAMETRIZATIONS, gradient_corpus, sample_instance
from barcode_grad.errors import OracleTooLarge
from barcode_grad.losses import total_persistence
from barcode_grad.parametrizations import raw_filter
from barcode_grad.verify import (
    SUITES,
    finite_difference_jacobian,
    gradient_check,
    local_isometry_check,
    oracle_check,
    random_complex,
    random_filter,
    rank_oracle,
    run_suite,
    stability_check,
    worker_count,
)
from conftest import filt


def test_rank_oracle_triangle_boundary(triangle_boundary):
    f = filt(triangle_boundary, [0, 0, 0, 1, 1, 1])
    assert rank_oracle(triangle_boundary, f, 0, 0, 0) == 3
    assert rank_oracle(triangle_boundary, f, 0, 0, 1) == 1
    assert rank_oracle(triangle_boundary, f, 1, 1, 1) == 1
    assert rank_oracle(triangle_boundary, f, 3, 0, 1) == 0


def test_rank_oracle_too_large():
    K = build_complex([[0, 1, 2, 3, 4, 5, 6]])
    f = validate_filter(K, np.arange(len(K), dtype=float))
    with pytest.raises(OracleTooLarge):
        rank_oracle(K, f, 0, 0, 1)


def test_oracle_check_random(rng):
    for _ in range(30):
        K = random_complex(rng, max_simplices=8)
        assert oracle_check(random_filter(K, rng)) == []


def test_random_filter_is_monotone(rng):
    for _ in range(20):
        K = random_complex(rng, max_simplices=12, max_vertices=5)
        f = random_filter(K, rng)
        assert all(f.values[j] >= f.values[i] for i, j in K.face_pairs())
        assert len(K) <= 12


def test_stability_identity_and_shift(full_triangle):
    f = filt(full_triangle, [0, 1, 2, 3, 4, 5, 6])
    rep = stability_check(f, f)
    assert rep.passed and rep.details["sup_norm"] == 0
    g = filt(full_triangle, f.values + 0.75)
    rep = stability_check(f, g)
    assert rep.passed and rep.details["slack"][0] == pytest.approx(0)


def test_stability_random(rng):
    for _ in range(50):
        K = random_complex(rng, max_simplices=12, max_vertices=5)
        assert stability_check(random_filter(K, rng), random_filter(K, rng)).passed


def test_stability_rejects_different_complexes(segment, full_triangle):
    with pytest.raises(ValueError):
        stability_check(filt(segment, [0, 1, 2]), filt(full_triangle, range(7)))


def test_local_isometry_random(rng):
    done = 0
    while done < 10:
        K = random_complex(rng, max_simplices=12, max_vertices=5)
        f = random_filter(K, rng)
        if len(K) < 2:
            continue
        rep = local_isometry_check(f, rng)
        assert rep.passed, rep.failures
        done += 1


def test_local_isometry_requires_generic(segment):
    with pytest.raises(ValueError):
        local_isometry_check(filt(segment, [0, 0, 1]), np.random.default_rng(0))


def test_gradient_check_linear_exact(segment):
    rep = gradient_check(raw_filter(segment), [0.0, 1.0, 2.0], 0, total_persistence)
    assert rep.passed and rep.details["max_abs_error"] < 1e-9


@pytest.mark.parametrize("pk,lk", [("rips", "persistence_image"), ("lower_star", "bottleneck_to")])
def test_gradient_check_examples(pk, lk):
    rng = np.random.default_rng(5)
    for _ in range(5):
        inst = sample_instance(pk, lk, rng)
        assert gradient_check(inst.parametrization, inst.theta, inst.degree, inst.loss).passed


def test_finite_difference_jacobian_matches(rng):
    from barcode_grad.corpora import _parametrization

    for kind in PARAMETRIZATIONS:
        F, theta = _parametrization(kind, rng)
        theta = F.retract(theta)
        fd, B = finite_difference_jacobian(F, theta)
        assert np.allclose(F.jacobian(theta) @ B, fd, atol=1e-5)


def test_gradient_corpus_is_deterministic():
    a = [inst.theta for inst in gradient_corpus(1, seed=3)]
    b = [inst.theta for inst in gradient_corpus(1, seed=3)]
    assert len(a) == len(PARAMETRIZATIONS) * len(LOSSES)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suites_small(name):
    count = 1 if name == "gradients" else 10
    rep = run_suite(name, seed=7, count=count, workers=2)
    assert rep.passed, rep.failures
    assert rep.details["suite"] == name and rep.details["count"] == count
    json.loads(rep.to_json())


def test_suite_report_independent_of_workers():
    a = run_suite("stability", seed=3, count=20, workers=1)
    b = run_suite("stability", seed=3, count=20, workers=3)
    assert a.to_json() == b.to_json()


def test_worker_count_cap(monkeypatch):
    monkeypatch.setenv("BARCODE_GRAD_THREADS", "1")
    assert worker_count() == 1
