"""Seeded random instances for gradient checks.

An instance is a parametrization, a parameter, a degree and a scalar loss
chosen so that the composed map is smooth with room to spare: every
non-structural tie is at least ``MARGIN`` away, and losses are smooth
with the same margin. Finite differences with a 1e-6 step then never
cross a stratum boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barcodes import Barcode, OrderedBarcode
from .complex import build_complex
from .differential import build_lift
from .errors import SingularParameter
from .losses import (
    BarcodeLoss,
    GaussianImageSpec,
    Scalarized,
    WeightingFunction,
    bottleneck_to,
    linear_representation,
    persistence_image,
    total_persistence,
    wasserstein_to,
)
from .parametrizations import Parametrization, distance_to_point, ellipsoid_rips, height, raw_filter, rips

MARGIN = 1e-4

PARAMETRIZATIONS = ("height", "lower_star", "rips", "ellipsoid_rips", "raw_filter")
LOSSES = ("total_persistence", "persistence_image", "linear_representation", "bottleneck_to", "wasserstein_to")


@dataclass(frozen=True)
class Instance:
    name: str
    parametrization: Parametrization
    theta: np.ndarray
    degree: int
    loss: BarcodeLoss


def grid_complex(rows: int, cols: int):
    """Triangulated rows x cols grid of vertices (a disk)."""
    def v(r, c):
        return r * cols + c

    tris = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            tris.append(sorted([v(r, c), v(r + 1, c), v(r, c + 1)]))
            tris.append(sorted([v(r + 1, c), v(r + 1, c + 1), v(r, c + 1)]))
    return build_complex(tris)


def _random_spd(rng, d: int) -> np.ndarray:
    M = rng.normal(scale=0.3, size=(d, d))
    return np.eye(d) + M @ M.T


def noisy_circle(rng, n: int, noise: float = 0.15) -> np.ndarray:
    """n points near the unit circle, so Rips has a finite degree-1 bar."""
    ang = 2 * np.pi * (np.arange(n) + rng.uniform(-0.2, 0.2, n)) / n
    return np.column_stack([np.cos(ang), np.sin(ang)]) + rng.normal(scale=noise, size=(n, 2))


def _parametrization(kind: str, rng):
    """A parametrization built with tie tolerance ``MARGIN`` and a parameter."""
    if kind == "height":
        K = grid_complex(4, 4)
        coords = rng.normal(size=(K.n_vertices, 3))
        theta = rng.normal(size=3)
        return height(K, coords, tol=MARGIN), theta / np.linalg.norm(theta)
    if kind == "lower_star":
        K = grid_complex(4, 4)
        coords = rng.normal(size=(K.n_vertices, 2))
        return distance_to_point(K, coords, tol=MARGIN), rng.normal(size=2)
    if kind == "rips":
        return rips(6, 2, max_dim=2, tol=MARGIN), noisy_circle(rng, 6).reshape(-1)
    if kind == "ellipsoid_rips":
        n, d = 4, 2
        F = ellipsoid_rips(noisy_circle(rng, n), max_dim=2, tol=MARGIN)
        from .parametrizations import chart_from_matrices

        return F, chart_from_matrices(np.stack([_random_spd(rng, d) for _ in range(n)]))
    if kind == "raw_filter":
        K = grid_complex(2, 3)
        F = raw_filter(K, tol=MARGIN)
        # strictly increasing along faces: vertex values, then per-dimension jitter
        vals = np.zeros(len(K))
        for s in range(len(K)):
            base = max([vals[i] for i in K.faces[s]], default=0.0)
            vals[s] = base + rng.uniform(0.05, 1.0)
        return F, vals
    raise KeyError(kind)


def _degree(kind: str, loss: str) -> int:
    # images need a degree without infinite bars: degree 1 on contractible
    # complexes (grids, Rips 2-skeleta of a full simplex) has none
    return 1 if loss == "persistence_image" else 0


def _finite_persistences_clear_of(x: OrderedBarcode, t: float) -> bool:
    pers = x.deaths - x.births
    pers = pers[pers != 0]
    return bool(np.all(np.abs(pers - t) > MARGIN) and np.all(pers > MARGIN))


def _jitter_target(x: OrderedBarcode, rng, scale: float) -> Barcode:
    """A diagram near Q(x) with the same number of infinite bars."""
    b, d = x.births.copy(), x.deaths.copy()
    keep = d - b > 0
    b, d = b[keep], d[keep]
    nb = b + rng.normal(scale=scale, size=len(b))
    nd = np.maximum(nb, d + rng.normal(scale=scale, size=len(d)))
    fin = [(p, q) for p, q in zip(nb, nd) if q > p]
    if rng.random() < 0.5 or not fin:
        u = rng.uniform(0, 1)
        fin.append((u, u + rng.uniform(0.2, 1.0)))
    inf = x.infinite + rng.normal(scale=scale, size=x.n)
    return Barcode.from_pairs(fin, inf)


def _loss(kind: str, x: OrderedBarcode, rng):
    if kind == "total_persistence":
        return total_persistence
    if kind == "persistence_image":
        pers = x.deaths - x.births
        t = 1.3 * float(np.median(pers[pers > 0])) if np.any(pers > 0) else 1.0
        if not _finite_persistences_clear_of(x, t):
            return None
        lo_b = float(x.births.min()) if x.m else 0.0
        hi_b = float(x.births.max()) if x.m else 1.0
        spec = GaussianImageSpec(lo_b - 0.5, hi_b + 0.5, 0.0, float(pers.max(initial=1.0)) + 0.5, 4, 0.3)
        return Scalarized(persistence_image(spec, WeightingFunction(t)), rng.normal(size=16))
    if kind == "linear_representation":
        pers = x.deaths - x.births
        t = 1.3 * float(np.median(pers[pers > 0])) if np.any(pers > 0) else 1.0
        if not _finite_persistences_clear_of(x, t):
            return None
        rep = linear_representation(
            3,
            lambda b, d: np.array([np.sin(b), np.cos(d), b * d]),
            lambda b, d: np.array([[np.cos(b), 0.0], [0.0, -np.sin(d)], [d, b]]),
            lambda v: np.array([v * v, 0.0, np.sin(v)]),
            lambda v: np.array([2 * v, 0.0, np.cos(v)]),
            WeightingFunction(t),
        )
        return Scalarized(rep, rng.normal(size=3))
    scale = 0.2 * float(max(np.max(np.abs(x.data), initial=0.0), 1.0))
    target = _jitter_target(x, rng, scale)
    loss = bottleneck_to(target, tol=MARGIN) if kind == "bottleneck_to" else wasserstein_to(target, 1.0, tol=MARGIN)
    return loss if loss.evaluate(x).smooth else None


def sample_instance(param_kind: str, loss_kind: str, rng: np.random.Generator, max_tries: int = 200) -> Instance:
    """Draw until the parametrization and loss are generic with margin."""
    for _ in range(max_tries):
        F, theta = _parametrization(param_kind, rng)
        theta = F.retract(theta)
        p = _degree(param_kind, loss_kind)
        try:
            lift = build_lift(F, theta, p)
        except SingularParameter:
            continue
        x = lift.evaluate(theta)
        if loss_kind == "persistence_image" and (x.n or not np.any(x.deaths > x.births)):
            continue
        loss = _loss(loss_kind, x, rng)
        if loss is None:
            continue
        return Instance(f"{param_kind}/{loss_kind}", F, theta, p, loss)
    raise RuntimeError(f"no generic instance for {param_kind}/{loss_kind} after {max_tries} tries")


def gradient_corpus(n_per_pair: int, seed: int = 0):
    """Yield instances for every (parametrization, loss) pair, deterministically."""
    for i, pk in enumerate(PARAMETRIZATIONS):
        for j, lk in enumerate(LOSSES):
            rng = np.random.default_rng([seed, i, j])
            for _ in range(n_per_pair):
                yield sample_instance(pk, lk, rng)
