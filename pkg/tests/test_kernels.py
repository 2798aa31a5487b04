import os
import subprocess
import sys

import numpy as np
import pytest

from barcode_grad import _core_py, _kernels
from barcode_grad.persistence import boundary_csc, filtration_order
from barcode_grad.verify import random_complex, random_filter

try:
    from barcode_grad import _core
except ImportError:
    _core = None

needs_ext = pytest.mark.skipif(_core is None, reason="compiled extension not built")


def test_backend_name():
    assert _kernels.BACKEND in {"cython", "python"}
    if _core is not None and os.environ.get("BARCODE_GRAD_PURE") != "1":
        assert _kernels.BACKEND == "cython"


def test_pure_env_forces_fallback():
    env = dict(os.environ, BARCODE_GRAD_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import barcode_grad; print(barcode_grad.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_reduce_boundary_python_small(full_triangle):
    from conftest import filt

    f = filt(full_triangle, range(7))
    indptr, indices = boundary_csc(full_triangle, filtration_order(f))
    partner = _core_py.reduce_boundary(indptr, indices, 7)
    # vertices 0,1,2; edges 01,02,12; triangle
    assert partner.tolist() == [-1, 3, 4, 1, 2, 6, 5]


@needs_ext
def test_reduce_boundary_agrees(rng):
    for _ in range(200):
        K = random_complex(rng, max_simplices=30, max_vertices=7)
        f = random_filter(K, rng)
        indptr, indices = boundary_csc(K, filtration_order(f))
        a = _core.reduce_boundary(indptr, indices, len(K))
        b = _core_py.reduce_boundary(indptr, indices, len(K))
        assert np.array_equal(np.asarray(a), np.asarray(b))


@needs_ext
def test_max_matching_agrees(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        C = rng.uniform(0, 1, (n, n))
        C[rng.random((n, n)) < 0.2] = np.inf
        eps = float(rng.uniform(0.2, 1.0))
        sa, ma = _core.max_matching(np.ascontiguousarray(C), eps)
        sb, mb = _core_py.max_matching(C, eps)
        assert sa == sb
        for m in (np.asarray(ma), mb):
            used = [c for c in m if c >= 0]
            assert len(used) == len(set(used)) == sa
            assert all(C[r, c] <= eps for r, c in enumerate(m) if c >= 0)


def test_max_matching_perfect_threshold():
    C = np.array([[0.1, 0.9], [0.2, 0.3]])
    assert _kernels.max_matching(C, 0.3)[0] == 2
    assert _kernels.max_matching(C, 0.15)[0] == 1
