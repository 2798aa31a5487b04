"""Losses on barcodes, evaluated on ordered barcodes with gradients.

Every loss depends on its argument only through the quotient: values do
not change under slot permutations or insertion of diagonal pairs (b, b).
Gradients are taken with respect to the 2m+n ordered coordinates.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import ndtr

from . import _kernels
from .barcode_space import augmented_costs, finite_bottleneck
from .barcodes import Barcode, OrderedBarcode
from .errors import BadExponent, InfiniteBarsUnsupported

SMOOTH_TOL = 1e-9


@dataclass(frozen=True)
class LossEval:
    value: float | np.ndarray
    grad: np.ndarray
    smooth: bool


class BarcodeLoss(ABC):
    """A map from ordered barcodes to R^k that factors through the quotient."""

    @abstractmethod
    def evaluate(self, x: OrderedBarcode) -> LossEval: ...

    def value(self, x: OrderedBarcode):
        return self.evaluate(x).value

    def grad(self, x: OrderedBarcode) -> np.ndarray:
        return self.evaluate(x).grad

    def smooth_at(self, x: OrderedBarcode) -> bool:
        return self.evaluate(x).smooth

    def __call__(self, x: OrderedBarcode):
        return self.value(x)


class TotalPersistence(BarcodeLoss):
    """Sum of d_i - b_i over finite slots."""

    def evaluate(self, x):
        g = np.zeros(len(x.data))
        g[0:2 * x.m:2] = -1.0
        g[1:2 * x.m:2] = 1.0
        return LossEval(float(np.sum(x.deaths - x.births)), g, True)


total_persistence = TotalPersistence()


# --------------------------------------------------------------------------
# weighting functions


@dataclass(frozen=True)
class WeightingFunction:
    """Smooth increasing step from 0 (u <= 0) to 1 (u >= t).

    ``smoothstep_C1``: 3s^2 - 2s^3 with s = u/t.
    ``bump_Cinf``: e(s) / (e(s) + e(1-s)) with e(s) = exp(-1/s), which is
    C-infinity at both ends.
    """

    t: float = 1.0
    kind: str = "smoothstep_C1"

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("weighting scale t must be positive")
        if self.kind not in ("smoothstep_C1", "bump_Cinf"):
            raise ValueError(f"unknown weighting kind {self.kind!r}")

    def __call__(self, u):
        return self.evaluate(u)[0]

    def derivative(self, u):
        return self.evaluate(u)[1]

    def evaluate(self, u):
        s = np.clip(np.asarray(u, dtype=float) / self.t, 0.0, 1.0)
        if self.kind == "smoothstep_C1":
            return 3 * s**2 - 2 * s**3, 6 * s * (1 - s) / self.t
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
            b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1 - s, 1.0)), 0.0)
            da = np.where(s > 0, a / np.where(s > 0, s, 1.0) ** 2, 0.0)
            db = np.where(s < 1, -b / np.where(s < 1, 1 - s, 1.0) ** 2, 0.0)
            w = a / (a + b)
            dw = (da * (a + b) - a * (da + db)) / (a + b) ** 2
        return w, dw / self.t


class LinearWeight:
    """omega(u) = u; a convenience weight for linear representations."""

    def __call__(self, u):
        return np.asarray(u, dtype=float)

    def derivative(self, u):
        return np.ones_like(np.asarray(u, dtype=float))

    def evaluate(self, u):
        return self(u), self.derivative(u)


# --------------------------------------------------------------------------
# persistence images


@dataclass(frozen=True)
class GaussianImageSpec:
    """Box [x0, x1] x [y0, y1] in (birth, persistence) coordinates, split into
    n x n cells; Gaussians have standard deviation ``sigma``."""

    x0: float
    x1: float
    y0: float
    y1: float
    n: int
    sigma: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1 and self.n >= 1 and self.sigma > 0):
            raise ValueError("invalid image spec")

    def edges(self):
        return np.linspace(self.x0, self.x1, self.n + 1), np.linspace(self.y0, self.y1, self.n + 1)


def _phi(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


class PersistenceImage(BarcodeLoss):
    """Weighted Gaussian histogram over an n x n grid, flattened row-major
    with index ``k * n + l`` for the k-th birth cell and l-th persistence cell.

    Each cell integral factorizes into two 1-D Gaussian CDF differences.
    """

    def __init__(self, spec: GaussianImageSpec, weight=None):
        self.spec = spec
        self.weight = weight if weight is not None else WeightingFunction()

    def evaluate(self, x):
        if x.n:
            raise InfiniteBarsUnsupported("persistence images are defined on barcodes without infinite bars")
        sp = self.spec
        ex, ey = sp.edges()
        b, d = x.births, x.deaths
        w_pers = d - b
        om, dom = self.weight.evaluate(w_pers)
        zx = (ex[None, :] - b[:, None]) / sp.sigma  # (m, n+1)
        zy = (ey[None, :] - w_pers[:, None]) / sp.sigma
        X = np.diff(ndtr(zx), axis=1)  # (m, n)
        Y = np.diff(ndtr(zy), axis=1)
        # d/db of X, d/dw of Y
        Xb = -np.diff(_phi(zx), axis=1) / sp.sigma
        Yw = -np.diff(_phi(zy), axis=1) / sp.sigma
        img = np.einsum("i,ik,il->kl", om, X, Y)
        gb = (
            np.einsum("i,ik,il->kli", -dom, X, Y)
            + np.einsum("i,ik,il->kli", om, Xb, Y)
            - np.einsum("i,ik,il->kli", om, X, Yw)
        )
        gd = np.einsum("i,ik,il->kli", dom, X, Y) + np.einsum("i,ik,il->kli", om, X, Yw)
        G = np.zeros((sp.n * sp.n, len(x.data)))
        G[:, 0:2 * x.m:2] = gb.reshape(sp.n * sp.n, -1)
        G[:, 1:2 * x.m:2] = gd.reshape(sp.n * sp.n, -1)
        return LossEval(img.reshape(-1), G, True)


def persistence_image(spec: GaussianImageSpec, weight=None) -> PersistenceImage:
    return PersistenceImage(spec, weight)


class LinearRepresentation(BarcodeLoss):
    """sum_i omega(d_i - b_i) phi(b_i, d_i) + sum_j psi(v_j), valued in R^k.

    ``phi_jac(b, d)`` returns the (k, 2) Jacobian of phi and
    ``psi_deriv(v)`` the k-vector derivative of psi.
    """

    def __init__(self, k: int, phi: Callable, phi_jac: Callable, psi: Callable, psi_deriv: Callable, weight=None,
                 smooth: Callable | None = None):
        self.k = k
        self.phi, self.phi_jac = phi, phi_jac
        self.psi, self.psi_deriv = psi, psi_deriv
        self.weight = weight if weight is not None else WeightingFunction()
        self._smooth = smooth

    def evaluate(self, x):
        val = np.zeros(self.k)
        G = np.zeros((self.k, len(x.data)))
        for i, (b, d) in enumerate(zip(x.births, x.deaths)):
            om, dom = self.weight.evaluate(d - b)
            ph = np.asarray(self.phi(b, d), dtype=float)
            J = np.asarray(self.phi_jac(b, d), dtype=float).reshape(self.k, 2)
            val += om * ph
            G[:, 2 * i] = -dom * ph + om * J[:, 0]
            G[:, 2 * i + 1] = dom * ph + om * J[:, 1]
        for j, v in enumerate(x.infinite):
            val += np.asarray(self.psi(v), dtype=float)
            G[:, 2 * x.m + j] = np.asarray(self.psi_deriv(v), dtype=float)
        smooth = True if self._smooth is None else bool(self._smooth(x))
        return LossEval(val, G, smooth)


def linear_representation(k, phi, phi_jac, psi, psi_deriv, weight=None, smooth=None) -> LinearRepresentation:
    return LinearRepresentation(k, phi, phi_jac, psi, psi_deriv, weight, smooth)


class Scalarized(BarcodeLoss):
    """<weights, V(x)> for a vector-valued loss V."""

    def __init__(self, loss: BarcodeLoss, weights):
        self.loss = loss
        self.weights = np.asarray(weights, dtype=float)

    def evaluate(self, x):
        ev = self.loss.evaluate(x)
        return LossEval(float(self.weights @ ev.value), self.weights @ ev.grad, ev.smooth)


# --------------------------------------------------------------------------
# distances to a fixed diagram


def _offdiagonal_slots(x: OrderedBarcode):
    keep = np.flatnonzero(x.deaths != x.births)
    return keep, np.column_stack([x.births[keep], x.deaths[keep]]) if len(keep) else np.zeros((0, 2))


def _linf_partials(x_pt, y_pt, tol):
    """Gradient of |x - y|_inf w.r.t. x (2-vector) and whether it is unique."""
    diff = np.asarray(x_pt) - np.asarray(y_pt)
    a = np.abs(diff)
    g = np.zeros(2)
    k = 0 if a[0] >= a[1] else 1
    g[k] = np.sign(diff[k])
    unique = abs(a[0] - a[1]) > tol and a[k] > tol
    return g, unique


def _critical_edges(A, B, value, tol):
    """Pairs of cost ``value`` (within tol) used by some optimal bottleneck
    matching, ordered: points of A to the diagonal, A to B, then points of
    B to the diagonal, each by index."""
    k, l = len(A), len(B)
    if k + l == 0:
        return []
    C = augmented_costs(A, B)
    N = k + l
    out = []
    for r, c in zip(*np.nonzero(np.abs(C - value) <= tol)):
        r, c = int(r), int(c)
        if r >= k and c >= l:
            continue
        rest = np.delete(np.delete(C, r, axis=0), c, axis=1)
        if N == 1 or _kernels.max_matching(rest, value + tol)[0] == N - 1:
            if r < k and c < l:
                out.append((1, "point", r, c))
            elif r < k:
                out.append((0, "diag_a", r, -1))
            else:
                out.append((2, "diag_b", -1, c))
    out.sort()
    return [e[1:] for e in out]


class BottleneckTo(BarcodeLoss):
    """x -> db(Q(x), D0).

    The gradient follows the unique matched pair realizing the distance:
    (-1/2, +1/2) on (b, d) for a point sent to the diagonal, a single +-1
    on the coordinate attaining the L-infinity cost for a point matched to
    a point of D0 or for an infinite bar. When a point of D0 sent to the
    diagonal realizes the distance the gradient is zero. ``smooth`` is
    False when the realizing pair or coordinate is not unique within tol.
    """

    def __init__(self, target: Barcode, tol: float = SMOOTH_TOL):
        self.target = target
        self.tol = tol

    def evaluate(self, x):
        D0 = self.target
        g = np.zeros(len(x.data))
        if x.n != len(D0.infinite):
            return LossEval(math.inf, g, False)
        slots, A = _offdiagonal_slots(x)
        B = D0.finite
        value, _, cand = finite_bottleneck(A, B)
        # infinite bars: sorted births
        ia = np.argsort(x.infinite, kind="stable")
        ib = np.argsort(D0.infinite, kind="stable")
        inf_costs = np.abs(x.infinite[ia] - D0.infinite[ib])
        inf_max = float(inf_costs.max()) if len(inf_costs) else -math.inf
        total = max(value, inf_max)
        all_costs = np.concatenate([cand, inf_costs])
        n_at_max = int(np.count_nonzero(np.abs(all_costs - total) <= self.tol))
        smooth = n_at_max == 1 and total > self.tol
        if len(ia) > 1 and np.min(np.diff(x.infinite[ia])) <= self.tol:
            smooth = False
        if inf_max >= value and len(inf_costs):
            k = int(np.argmax(inf_costs))
            diff = x.infinite[ia[k]] - D0.infinite[ib[k]]
            g[2 * x.m + ia[k]] = np.sign(diff)
            return LossEval(total, g, smooth)
        critical = _critical_edges(A, B, total, self.tol)
        if critical:
            kind, i, j = critical[0]
            if kind == "diag_a":
                s = slots[i]
                g[2 * s], g[2 * s + 1] = -0.5, 0.5
            elif kind == "point":
                s = slots[i]
                part, unique = _linf_partials(A[i], B[j], self.tol)
                g[2 * s:2 * s + 2] = part
                smooth = smooth and unique
        return LossEval(total, g, smooth)


def bottleneck_to(target: Barcode, tol: float = SMOOTH_TOL) -> BottleneckTo:
    return BottleneckTo(target, tol)


class WassersteinTo(BarcodeLoss):
    """x -> d_q(Q(x), D0) with the optimal matching frozen for the gradient.

    ``smooth`` is False on ties between optimal matchings, on L-infinity
    argmax ties inside a matched pair, and at distance zero.
    """

    def __init__(self, target: Barcode, q: float = 1.0, tol: float = SMOOTH_TOL):
        if not q > 0:
            raise BadExponent(f"exponent must be positive, got {q}")
        self.target = target
        self.q = q
        self.tol = tol

    def evaluate(self, x):
        D0, q = self.target, self.q
        g = np.zeros(len(x.data))
        if x.n != len(D0.infinite):
            return LossEval(math.inf, g, False)
        slots, A = _offdiagonal_slots(x)
        B = D0.finite
        k, l = len(A), len(B)
        smooth = True
        # per-edge (cost, gradient of cost w.r.t. x)
        terms = []
        if k + l:
            C = augmented_costs(A, B)
            Cq = C**q
            rows, cols = linear_sum_assignment(Cq)
            best = float(Cq[rows, cols].sum())
            for r, c in zip(rows, cols):
                r, c = int(r), int(c)
                gc = np.zeros(len(x.data))
                if r < k and c < l:
                    part, unique = _linf_partials(A[r], B[c], self.tol)
                    s = slots[r]
                    gc[2 * s:2 * s + 2] = part
                    smooth = smooth and unique
                elif r < k:
                    s = slots[r]
                    gc[2 * s], gc[2 * s + 1] = -0.5, 0.5
                terms.append((float(C[r, c]), gc))
            smooth = smooth and not self._assignment_tie(Cq, rows, cols, best, k, l)
        ia = np.argsort(x.infinite, kind="stable")
        ib = np.argsort(D0.infinite, kind="stable")
        for a, b in zip(ia, ib):
            diff = x.infinite[a] - D0.infinite[b]
            gc = np.zeros(len(x.data))
            gc[2 * x.m + a] = np.sign(diff)
            if abs(diff) <= self.tol:
                smooth = False
            terms.append((abs(float(diff)), gc))
        if len(ia) > 1 and np.min(np.diff(x.infinite[ia])) <= self.tol:
            smooth = False
        S = sum(c**q for c, _ in terms)
        if S <= 0.0:
            return LossEval(0.0, g, False)
        value = S ** (1.0 / q)
        scale = S ** (1.0 / q - 1.0)
        for c, gc in terms:
            if c > 0:
                g += scale * c ** (q - 1.0) * gc
        return LossEval(value, g, smooth and q >= 1)

    def _assignment_tie(self, Cq, rows, cols, best, k, l) -> bool:
        """True if forbidding some used non-trivial edge keeps the optimum."""
        for r, c in zip(rows, cols):
            if r >= k and c >= l:
                continue
            alt = Cq.copy()
            alt[r, c] = np.inf
            try:
                rr, cc = linear_sum_assignment(alt)
            except ValueError:
                continue
            if float(alt[rr, cc].sum()) <= best + self.tol:
                return True
        return False


def wasserstein_to(target: Barcode, q: float = 1.0, tol: float = SMOOTH_TOL) -> WassersteinTo:
    return WassersteinTo(target, q, tol)
