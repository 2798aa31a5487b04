"""Independent oracles and property checks.

Nothing here goes through the boundary-matrix reduction or the template
machinery on the checked side: ranks come from Gaussian elimination on
chain groups, gradients from central finite differences.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .barcode_space import bottleneck
from .barcodes import OrderedBarcode
from .complex import FilterFunction, SimplicialComplex, build_complex, gap_radius, validate_filter
from .differential import build_lift, chain_rule, differential
from .errors import OracleTooLarge
from .persistence import diagrams

ORACLE_MAX_SIMPLICES = 64


@dataclass
class Report:
    passed: bool
    failures: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"passed": self.passed, "failures": self.failures, **self.details}, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(type(o))


# --------------------------------------------------------------------------
# random instances


def random_filter(K: SimplicialComplex, rng: np.random.Generator, jitter: float = 0.5) -> FilterFunction:
    """Lower-star extension of i.i.d. vertex values plus non-negative
    per-simplex jitter, accumulated along faces so monotonicity holds."""
    vals = np.zeros(len(K))
    vpos = K.vertex_positions()
    vv = rng.uniform(0.0, 1.0, K.n_vertices)
    for s in range(len(K)):
        base = max(vv[v] for v in vpos[s])
        for i in K.faces[s]:
            base = max(base, vals[i])
        vals[s] = base + (rng.uniform(0.0, jitter) if K.dims[s] > 0 else 0.0)
    return validate_filter(K, vals)


def random_complex(rng: np.random.Generator, max_simplices: int = 8, max_vertices: int = 4) -> SimplicialComplex:
    """Face closure of a few random simplices, with at most ``max_simplices``."""
    while True:
        nv = int(rng.integers(1, max_vertices + 1))
        tops = [[v] for v in range(nv)]
        for _ in range(int(rng.integers(0, 4))):
            k = int(rng.integers(2, min(nv, 3) + 1)) if nv >= 2 else 1
            tops.append(sorted(rng.choice(nv, size=k, replace=False).tolist()))
        uniq = sorted({tuple(t) for t in tops})
        K = build_complex([list(t) for t in uniq])
        if len(K) <= max_simplices:
            return K


# --------------------------------------------------------------------------
# rank oracle


def _gf2_insert(pivots: dict, vec: int, tag: int = 0):
    """Reduce ``vec`` against ``pivots``; insert it if independent.

    Returns the reduced tag if ``vec`` reduced to zero, else None.
    """
    while vec:
        h = vec.bit_length() - 1
        if h not in pivots:
            pivots[h] = (vec, tag)
            return None
        pv, pt = pivots[h]
        vec ^= pv
        tag ^= pt
    return tag


def _boundary_bits(K: SimplicialComplex, s: int) -> int:
    out = 0
    for i in K.faces[s]:
        out |= 1 << i
    return out


def rank_oracle(K: SimplicialComplex, f, p: int, s: float, t: float) -> int:
    """Rank of H_p(K^s) -> H_p(K^t) over GF(2), by direct elimination."""
    if len(K) > ORACLE_MAX_SIMPLICES:
        raise OracleTooLarge(f"{len(K)} simplices exceeds oracle limit {ORACLE_MAX_SIMPLICES}")
    if s > t:
        raise ValueError("need s <= t")
    vals = np.asarray(getattr(f, "values", f), dtype=float)
    if p < 0 or p > K.dim:
        return 0
    # cycles of K^s
    piv: dict = {}
    cycles = []
    for c in np.flatnonzero((K.dims == p) & (vals <= s)):
        c = int(c)
        tag = _gf2_insert(piv, _boundary_bits(K, c) if p > 0 else 0, 1 << c)
        if tag is not None:
            cycles.append(tag)
    # boundaries of K^t
    bnd: dict = {}
    rank_b = 0
    for c in np.flatnonzero((K.dims == p + 1) & (vals <= t)):
        if _gf2_insert(bnd, _boundary_bits(K, int(c))) is None:
            rank_b += 1
    rank_zb = rank_b
    for z in cycles:
        if _gf2_insert(bnd, z) is None:
            rank_zb += 1
    return rank_zb - rank_b


def oracle_check(f: FilterFunction) -> list:
    """Compare every diagram of ``f`` with rank_oracle at all value pairs."""
    K = f.complex
    dg = diagrams(f)
    levels = np.unique(f.values)
    failures = []
    for p in range(K.dim + 1):
        D = dg[p]
        for a, s in enumerate(levels):
            for t in levels[a:]:
                expected = rank_oracle(K, f, p, s, t)
                got = int(np.count_nonzero((D.finite[:, 0] <= s) & (D.finite[:, 1] > t))) + int(np.count_nonzero(D.infinite <= s))
                if got != expected:
                    failures.append({"degree": p, "s": float(s), "t": float(t), "oracle": expected, "diagram": got})
    return failures


# --------------------------------------------------------------------------
# stability and local isometry


def _max_db(f_dgms, g_dgms) -> float:
    return max(bottleneck(a, b) for a, b in zip(f_dgms, g_dgms))


def stability_check(f: FilterFunction, g: FilterFunction, degrees=None) -> Report:
    """db(Dgm_p f, Dgm_p g) <= |f - g|_inf for every requested degree."""
    if f.complex != g.complex:
        raise ValueError("filters live on different complexes")
    degrees = range(f.complex.dim + 1) if degrees is None else degrees
    df, dg = diagrams(f), diagrams(g)
    norm = float(np.max(np.abs(f.values - g.values)))
    failures, slack = [], {}
    for p in degrees:
        db = bottleneck(df[p], dg[p])
        slack[p] = norm - db
        if db > norm:
            failures.append({"degree": p, "bottleneck": db, "sup_norm": norm, "f": f.values.tolist(), "g": g.values.tolist()})
    return Report(not failures, failures, {"slack": slack, "sup_norm": norm})


def _perturb(f: FilterFunction, radius: float, rng) -> FilterFunction:
    delta = rng.uniform(-1.0, 1.0, len(f.values))
    delta *= radius / np.max(np.abs(delta))
    return validate_filter(f.complex, f.values + delta)


def _same_closed_stratum(f: FilterFunction, rng) -> FilterFunction:
    """A filter ordered like ``f`` (non-strictly), with some ties merged."""
    order = np.argsort(f.values, kind="stable")
    steps = rng.uniform(0.05, 1.0, len(order))
    steps[rng.random(len(order)) < 0.3] = 0.0  # merge into previous group
    new = np.empty(len(order))
    new[order] = np.cumsum(steps) + rng.normal()
    return validate_filter(f.complex, new)


def local_isometry_check(f: FilterFunction, rng: np.random.Generator, n_samples: int = 5, atol: float = 1e-9) -> Report:
    """Local isometry of Dgm on the d0(f)-ball, the d0(f)/3 two-point
    version, and coercivity on the closed stratum of ``f``."""
    d0 = gap_radius(f)
    if not d0 > 0:
        raise ValueError("f must be injective (positive gap radius)")
    failures = []
    df = diagrams(f)
    for _ in range(n_samples):
        g = _perturb(f, d0 * rng.uniform(0.05, 1.0), rng)
        lhs, rhs = _max_db(df, diagrams(g)), float(np.max(np.abs(f.values - g.values)))
        if abs(lhs - rhs) > atol:
            failures.append({"case": "ball", "max_db": lhs, "sup_norm": rhs, "f": f.values.tolist(), "g": g.values.tolist()})
        g = _perturb(f, d0 / 3 * rng.uniform(0.05, 1.0), rng)
        h = _perturb(f, d0 / 3 * rng.uniform(0.05, 1.0), rng)
        lhs, rhs = _max_db(diagrams(g), diagrams(h)), float(np.max(np.abs(g.values - h.values)))
        if abs(lhs - rhs) > atol:
            failures.append({"case": "third_ball", "max_db": lhs, "sup_norm": rhs, "g": g.values.tolist(), "h": h.values.tolist()})
        g = _same_closed_stratum(f, rng)
        lhs = _max_db(df, diagrams(g))
        rhs = min(float(np.max(np.abs(f.values - g.values))), max(d0, gap_radius(g)))
        if lhs < rhs - 1e-12:
            failures.append({"case": "coercivity", "max_db": lhs, "bound": rhs, "f": f.values.tolist(), "g": g.values.tolist()})
    return Report(not failures, failures, {"d0": d0})


# --------------------------------------------------------------------------
# finite differences


def finite_difference_jacobian(F, theta, h: float = 1e-6) -> tuple:
    """Central differences of theta -> F(theta) along the tangent basis.

    Returns ``(fd, basis)``; ``fd`` should match ``F.jacobian(theta) @ basis``.
    """
    theta = np.asarray(theta, dtype=float)
    B = F.tangent_basis(theta)
    cols = []
    for k in range(B.shape[1]):
        up = F.value(F.retract(theta + h * B[:, k])).values
        dn = F.value(F.retract(theta - h * B[:, k])).values
        cols.append((up - dn) / (2 * h))
    return np.column_stack(cols) if cols else np.zeros((len(F.complex), 0)), B


def within_tol(a, b, rtol: float = 1e-5, atol: float = 1e-7) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.abs(a - b) <= np.maximum(rtol * np.maximum(np.abs(a), np.abs(b)), atol)


def loss_of_parameter(F, theta, p: int, loss) -> float:
    """theta -> loss(Dgm_p(F(theta))) computed without any lift."""
    D = diagrams(F.value(theta))[p]
    return float(loss.value(OrderedBarcode.from_barcode(D)))


def gradient_check(F, theta, p: int, loss, h: float = 1e-6, rtol: float = 1e-5, atol: float = 1e-7) -> Report:
    """Chain-rule gradient against central differences of the scalar loss."""
    theta = np.asarray(theta, dtype=float)
    lift = build_lift(F, theta, p)
    x = lift.evaluate(theta)
    ev = loss.evaluate(x)
    if not ev.smooth:
        return Report(False, [{"reason": "loss not smooth at instance"}])
    grad = chain_rule(lift, differential(lift, F, theta), ev.grad)
    B = F.tangent_basis(theta)
    fd = np.array([
        (loss_of_parameter(F, F.retract(theta + h * B[:, k]), p, loss) - loss_of_parameter(F, F.retract(theta - h * B[:, k]), p, loss)) / (2 * h)
        for k in range(B.shape[1])
    ])
    analytic = grad @ B
    ok = within_tol(analytic, fd, rtol, atol)
    failures = [] if ok.all() else [{"theta": theta.tolist(), "analytic": analytic.tolist(), "finite_difference": fd.tolist()}]
    return Report(bool(ok.all()), failures, {"max_abs_error": float(np.max(np.abs(analytic - fd))) if len(fd) else 0.0})


# --------------------------------------------------------------------------
# suites


def _stability_task(seed: int, i: int) -> list:
    rng = np.random.default_rng([seed, i])
    K = random_complex(rng, max_simplices=12, max_vertices=5)
    f, g = random_filter(K, rng), random_filter(K, rng)
    return stability_check(f, g).failures


def _isometry_task(seed: int, i: int) -> list:
    rng = np.random.default_rng([seed, i])
    while True:
        K = random_complex(rng, max_simplices=12, max_vertices=5)
        if len(K) < 2:
            continue
        f = random_filter(K, rng)
        if gap_radius(f) > 1e-3:
            return local_isometry_check(f, rng).failures


def _oracle_task(seed: int, i: int) -> list:
    rng = np.random.default_rng([seed, i])
    K = random_complex(rng, max_simplices=8)
    return oracle_check(random_filter(K, rng))


def _gradient_task(seed: int, i: int, count: int) -> list:
    from .corpora import LOSSES, PARAMETRIZATIONS, sample_instance

    pk, lk = PARAMETRIZATIONS[i // len(LOSSES)], LOSSES[i % len(LOSSES)]
    rng = np.random.default_rng([seed, i // len(LOSSES), i % len(LOSSES)])
    out = []
    for _ in range(count):
        inst = sample_instance(pk, lk, rng)
        rep = gradient_check(inst.parametrization, inst.theta, inst.degree, inst.loss)
        out.extend({"instance": inst.name, **f} for f in rep.failures)
    return out


SUITES = {
    # name: (task, default count, count meaning)
    "stability": (_stability_task, 1000, "filter pairs"),
    "isometry": (_isometry_task, 100, "generic filters"),
    "oracle": (_oracle_task, 200, "complexes"),
    "gradients": (_gradient_task, 100, "instances per parametrization/loss pair"),
}


def worker_count() -> int:
    """Process pool size: CPU count, capped by BARCODE_GRAD_THREADS."""
    import os

    n = os.cpu_count() or 1
    cap = os.environ.get("BARCODE_GRAD_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_suite(name: str, seed: int = 0, count: int | None = None, workers: int | None = None) -> Report:
    """Run a named suite; failures are aggregated in task order, so the
    report does not depend on the number of workers."""
    from concurrent.futures import ProcessPoolExecutor
    from functools import partial

    task, default, unit = SUITES[name]
    count = default if count is None else count
    if name == "gradients":
        from .corpora import LOSSES, PARAMETRIZATIONS

        n_tasks = len(PARAMETRIZATIONS) * len(LOSSES)
        fn = partial(task, seed, count=count)
    else:
        n_tasks = count
        fn = partial(task, seed)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or n_tasks <= 1:
        results = [fn(i) for i in range(n_tasks)]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, n_tasks)) as pool:
            results = list(pool.map(fn, range(n_tasks), chunksize=max(1, n_tasks // (4 * workers))))
    failures = [f for r in results for f in r]
    return Report(not failures, failures, {"suite": name, "seed": seed, "count": count, "unit": unit})


__all__ = [
    "SUITES",
    "run_suite",
    "worker_count",
    "Report",
    "random_filter",
    "random_complex",
    "rank_oracle",
    "oracle_check",
    "stability_check",
    "local_isometry_check",
    "finite_difference_jacobian",
    "within_tol",
    "loss_of_parameter",
    "gradient_check",
]
