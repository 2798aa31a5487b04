"""Differentiable families of filter functions theta -> F(theta) in R^K.

Every parametrization exposes ``value``, ``jacobian`` (shape ``#K x dim``)
and ``is_smooth_at``. ``tie_witnesses`` lists simplex pairs whose tie at
theta is not forced by the structure of the family; the pre-order is locally
constant exactly when there are none (up to ``tol``).
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .complex import FilterFunction, SimplicialComplex, build_complex, full_complex, is_monotone, validate_filter
from .errors import NotOnSphere, NotPositiveDefinite, ShapeError

GENERAL_POSITION_TOL = 1e-9


class Parametrization(ABC):
    """Base class: a map from parameters to filter functions on ``complex``."""

    complex: SimplicialComplex
    param_dim: int
    tol: float = GENERAL_POSITION_TOL

    @abstractmethod
    def value(self, theta) -> FilterFunction: ...

    @abstractmethod
    def jacobian(self, theta) -> np.ndarray: ...

    @abstractmethod
    def tie_witnesses(self, theta) -> list: ...

    def is_smooth_at(self, theta) -> bool:
        return not self.tie_witnesses(theta)

    def one_sided_jacobian(self, theta, probe) -> np.ndarray:
        """Jacobian at ``theta`` of the smooth branch active at ``probe``.

        Where F is a pointwise max of smooth pieces, the piece is selected
        at the probe and differentiated at theta. The default falls back
        to the Jacobian at the probe.
        """
        return self.jacobian(probe)

    def retract(self, theta) -> np.ndarray:
        """Map an ambient point back onto the parameter domain."""
        return np.asarray(theta, dtype=float)

    def tangent_basis(self, theta) -> np.ndarray:
        """Columns spanning the tangent space at ``theta``."""
        return np.eye(self.param_dim)

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape[0] != self.param_dim:
            raise ShapeError(f"parameter has length {theta.shape[0]}, expected {self.param_dim}")
        return theta


def _sorted_gap_ties(vals: np.ndarray, tol: float, labels=None) -> list:
    """Pairs of entries of ``vals`` closer than ``tol`` (via sorted neighbours)."""
    order = np.argsort(vals, kind="stable")
    out = []
    for a in range(len(order)):
        b = a + 1
        while b < len(order) and vals[order[b]] - vals[order[a]] <= tol:
            i, j = int(order[a]), int(order[b])
            if labels is not None:
                i, j = labels[i], labels[j]
            out.append((min(i, j), max(i, j)))
            b += 1
    return out


# --------------------------------------------------------------------------
# vertex functions and lower-star filtrations


class VertexFunction(ABC):
    """Smooth map theta -> values on vertices, with its Jacobian."""

    dim: int

    @abstractmethod
    def value(self, theta) -> np.ndarray: ...

    @abstractmethod
    def jacobian(self, theta) -> np.ndarray: ...

    def retract(self, theta):
        return np.asarray(theta, dtype=float)

    def tangent_basis(self, theta):
        return np.eye(self.dim)


class HeightVertices(VertexFunction):
    """<theta, x_v> for unit theta; Jacobian projected onto the tangent sphere."""

    def __init__(self, coordinates):
        self.coordinates = np.asarray(coordinates, dtype=float)
        self.dim = self.coordinates.shape[1]

    def _unit(self, theta):
        theta = np.asarray(theta, dtype=float)
        if abs(np.linalg.norm(theta) - 1.0) > 1e-9:
            raise NotOnSphere(f"|theta| = {np.linalg.norm(theta)!r}")
        return theta

    def value(self, theta):
        return self.coordinates @ self._unit(theta)

    def jacobian(self, theta):
        theta = self._unit(theta)
        X = self.coordinates
        return X - np.outer(X @ theta, theta)

    def retract(self, theta):
        theta = np.asarray(theta, dtype=float)
        return theta / np.linalg.norm(theta)

    def tangent_basis(self, theta):
        theta = self._unit(theta)
        # orthonormal complement of theta
        q, _ = np.linalg.qr(np.column_stack([theta, np.eye(self.dim)]))
        return q[:, 1:self.dim]


class SquaredDistanceVertices(VertexFunction):
    """|x_v - theta|^2: squared distance of each vertex to a moving point."""

    def __init__(self, coordinates):
        X = np.asarray(coordinates, dtype=float)
        self.coordinates = X.reshape(len(X), -1)
        self.dim = self.coordinates.shape[1]

    def value(self, theta):
        diff = self.coordinates - np.asarray(theta, dtype=float)
        return np.sum(diff * diff, axis=1)

    def jacobian(self, theta):
        return -2.0 * (self.coordinates - np.asarray(theta, dtype=float))


class CallableVertices(VertexFunction):
    def __init__(self, value, jacobian, dim):
        self._value, self._jacobian, self.dim = value, jacobian, dim

    def value(self, theta):
        return np.asarray(self._value(theta), dtype=float)

    def jacobian(self, theta):
        return np.asarray(self._jacobian(theta), dtype=float)


class LowerStar(Parametrization):
    """F(theta)(s) = max over vertices v of s of F0(theta)(v).

    The Jacobian row of ``s`` is the F0 row of its argmax vertex; ties are
    broken towards the lowest vertex position.
    """

    def __init__(self, K: SimplicialComplex, vertex_function: VertexFunction, tol: float = GENERAL_POSITION_TOL):
        self.complex = K
        self.vertex_function = vertex_function
        self.param_dim = vertex_function.dim
        self.tol = tol
        self._vpos = K.vertex_positions()
        nv = K.n_vertices
        # membership matrix for vectorized max
        self._members = [np.asarray(v, dtype=np.int64) for v in self._vpos]
        self._nv = nv

    def _argmax(self, vvals):
        return np.array([m[np.argmax(vvals[m])] for m in self._members], dtype=np.int64)

    def value(self, theta) -> FilterFunction:
        theta = self._check(theta)
        vvals = self.vertex_function.value(theta)
        vals = vvals[self._argmax(vvals)]
        vals.setflags(write=False)
        return FilterFunction(self.complex, vals)

    def jacobian(self, theta) -> np.ndarray:
        theta = self._check(theta)
        vvals = self.vertex_function.value(theta)
        return self.vertex_function.jacobian(theta)[self._argmax(vvals)]

    def one_sided_jacobian(self, theta, probe) -> np.ndarray:
        theta, probe = self._check(theta), self._check(probe)
        vf = self.vertex_function
        return vf.jacobian(theta)[self._argmax(vf.value(probe))]

    def tie_witnesses(self, theta) -> list:
        theta = self._check(theta)
        vvals = self.vertex_function.value(theta)
        vidx = [self.complex.index[(v,)] for v in self.complex.vertices]
        return _sorted_gap_ties(vvals, self.tol, labels=vidx)

    def retract(self, theta):
        return self.vertex_function.retract(theta)

    def tangent_basis(self, theta):
        return self.vertex_function.tangent_basis(theta)


def lower_star(K: SimplicialComplex, vertex_function: VertexFunction, **kw) -> LowerStar:
    return LowerStar(K, vertex_function, **kw)


def height(K: SimplicialComplex, coordinates, **kw) -> LowerStar:
    """Height filtrations theta in S^{d-1} -> max_{v in s} <theta, v>."""
    return LowerStar(K, HeightVertices(coordinates), **kw)


def distance_to_point(K: SimplicialComplex, coordinates, **kw) -> LowerStar:
    """theta -> max_{v in s} |x_v - theta|^2 (squared distance filtration)."""
    return LowerStar(K, SquaredDistanceVertices(coordinates), **kw)


# --------------------------------------------------------------------------
# Rips and ellipsoid-Rips


class _PairwiseMax(Parametrization):
    """Shared machinery: F(s) = max over vertex pairs of s of r_{ij}(theta)."""

    def __init__(self, n_points: int, max_dim: int, tol: float):
        if n_points < 2:
            raise ValueError("need at least two points")
        self.n_points = n_points
        self.max_dim = max_dim
        self.complex = full_complex(n_points, max_dim)
        self.tol = tol
        self.edges = list(combinations(range(n_points), 2))
        self._edge_id = {e: k for k, e in enumerate(self.edges)}
        members = []
        for s in self.complex.simplices:
            members.append(np.array([self._edge_id[e] for e in combinations(s, 2)], dtype=np.int64))
        self._members = members

    @abstractmethod
    def edge_values(self, theta) -> np.ndarray: ...

    @abstractmethod
    def edge_jacobian(self, theta) -> np.ndarray: ...

    def _argmax_edges(self, evals):
        return [m[np.argmax(evals[m])] if len(m) else -1 for m in self._members]

    def value(self, theta) -> FilterFunction:
        theta = self._check(theta)
        evals = self.edge_values(theta)
        vals = np.array([evals[e] if e >= 0 else 0.0 for e in self._argmax_edges(evals)])
        vals.setflags(write=False)
        return FilterFunction(self.complex, vals)

    def jacobian(self, theta) -> np.ndarray:
        return self.one_sided_jacobian(theta, theta)

    def one_sided_jacobian(self, theta, probe) -> np.ndarray:
        theta, probe = self._check(theta), self._check(probe)
        EJ = self.edge_jacobian(theta)
        J = np.zeros((len(self.complex), self.param_dim))
        for s, e in enumerate(self._argmax_edges(self.edge_values(probe))):
            if e >= 0:
                J[s] = EJ[e]
        return J

    def tie_witnesses(self, theta) -> list:
        theta = self._check(theta)
        evals = self.edge_values(theta)
        idx = self.complex.index
        labels = [idx[e] for e in self.edges]
        out = _sorted_gap_ties(evals, self.tol, labels=labels)
        for k, e in enumerate(self.edges):
            if evals[k] <= self.tol:  # coincident points: edge tied with vertices
                out.append((idx[(e[0],)], idx[e]))
        return out


class Rips(_PairwiseMax):
    """Rips filtration of n points in R^d, flattened as theta in R^{nd}."""

    def __init__(self, n_points: int, ambient_dim: int, max_dim: int = 2, tol: float = GENERAL_POSITION_TOL):
        super().__init__(n_points, max_dim, tol)
        self.ambient_dim = ambient_dim
        self.param_dim = n_points * ambient_dim

    def points(self, theta):
        return np.asarray(theta, dtype=float).reshape(self.n_points, self.ambient_dim)

    def edge_values(self, theta):
        P = self.points(theta)
        return np.array([np.linalg.norm(P[i] - P[j]) for i, j in self.edges])

    def edge_jacobian(self, theta):
        P = self.points(theta)
        d = self.ambient_dim
        EJ = np.zeros((len(self.edges), self.param_dim))
        for k, (i, j) in enumerate(self.edges):
            diff = P[i] - P[j]
            r = np.linalg.norm(diff)
            if r == 0.0:
                continue
            EJ[k, i * d:(i + 1) * d] = diff / r
            EJ[k, j * d:(j + 1) * d] = -diff / r
        return EJ


def rips(n_points: int, ambient_dim: int, max_dim: int = 2, **kw) -> Rips:
    return Rips(n_points, ambient_dim, max_dim, **kw)


def _triu(d):
    return np.triu_indices(d)


def matrices_from_chart(theta, n: int, d: int) -> np.ndarray:
    """Upper-triangular chart entries -> stack of n symmetric d x d matrices."""
    theta = np.asarray(theta, dtype=float).reshape(n, -1)
    iu = _triu(d)
    A = np.zeros((n, d, d))
    A[:, iu[0], iu[1]] = theta
    A[:, iu[1], iu[0]] = theta
    return A


def chart_from_matrices(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    iu = _triu(A.shape[-1])
    return A[:, iu[0], iu[1]].reshape(-1)


class EllipsoidRips(_PairwiseMax):
    """Ellipsoid-Rips filtration of a fixed point cloud, parametrized by
    covariance matrices in their upper-triangular chart.

    r_ij(A) = |p_i - p_j| / ((sqrt(q_i(u)) + sqrt(q_j(u))) / 2) with
    u the unit vector from p_j to p_i and q_i(x) = <A_i x, x>.
    """

    def __init__(self, points, max_dim: int = 2, tol: float = GENERAL_POSITION_TOL):
        P = np.asarray(points, dtype=float)
        super().__init__(len(P), max_dim, tol)
        self.points = P
        self.ambient_dim = d = P.shape[1]
        self.chart_size = d * (d + 1) // 2
        self.param_dim = len(P) * self.chart_size
        lengths, units = [], []
        for i, j in self.edges:
            diff = P[i] - P[j]
            L = np.linalg.norm(diff)
            if L == 0.0:
                raise ValueError(f"points {i} and {j} coincide")
            lengths.append(L)
            units.append(diff / L)
        self._lengths = np.array(lengths)
        self._units = np.array(units)
        iu = _triu(d)
        # d q(u) / d chart entry (k, l): u_k u_l, doubled off the diagonal
        mult = np.where(iu[0] == iu[1], 1.0, 2.0)
        self._dq = self._units[:, iu[0]] * self._units[:, iu[1]] * mult

    def matrices(self, theta):
        return matrices_from_chart(theta, self.n_points, self.ambient_dim)

    def _quadrics(self, theta):
        A = self.matrices(theta)
        for i, Ai in enumerate(A):
            try:
                np.linalg.cholesky(Ai)
            except np.linalg.LinAlgError:
                raise NotPositiveDefinite(f"covariance matrix {i} is not positive definite") from None
        q_i = np.array([u @ A[i] @ u for (i, _), u in zip(self.edges, self._units)])
        q_j = np.array([u @ A[j] @ u for (_, j), u in zip(self.edges, self._units)])
        return q_i, q_j

    def edge_values(self, theta):
        q_i, q_j = self._quadrics(theta)
        return 2.0 * self._lengths / (np.sqrt(q_i) + np.sqrt(q_j))

    def edge_jacobian(self, theta):
        q_i, q_j = self._quadrics(theta)
        s_i, s_j = np.sqrt(q_i), np.sqrt(q_j)
        denom = (s_i + s_j) ** 2
        c = self.chart_size
        EJ = np.zeros((len(self.edges), self.param_dim))
        for k, (i, j) in enumerate(self.edges):
            base = -2.0 * self._lengths[k] / denom[k]
            EJ[k, i * c:(i + 1) * c] += base * self._dq[k] / (2.0 * s_i[k])
            EJ[k, j * c:(j + 1) * c] += base * self._dq[k] / (2.0 * s_j[k])
        return EJ


def ellipsoid_rips(points, max_dim: int = 2, **kw) -> EllipsoidRips:
    return EllipsoidRips(points, max_dim, **kw)


# --------------------------------------------------------------------------
# arbitrary filters


class RawFilter(Parametrization):
    """The indicator parametrization of the filter polytope of ``K``.

    Identity on monotone vectors, the zero filter elsewhere. Smooth only
    in the interior (all face inequalities strict).
    """

    def __init__(self, K: SimplicialComplex, tol: float = GENERAL_POSITION_TOL):
        self.complex = K
        self.param_dim = len(K)
        self.tol = tol

    def value(self, theta) -> FilterFunction:
        theta = self._check(theta)
        if is_monotone(self.complex, theta):
            return validate_filter(self.complex, theta)
        return validate_filter(self.complex, np.zeros(len(theta)))

    def jacobian(self, theta) -> np.ndarray:
        theta = self._check(theta)
        if is_monotone(self.complex, theta):
            return np.eye(self.param_dim)
        return np.zeros((self.param_dim, self.param_dim))

    def in_interior(self, theta) -> bool:
        theta = self._check(theta)
        return all(theta[j] - theta[i] > self.tol for i, j in self.complex.face_pairs())

    def is_smooth_at(self, theta) -> bool:
        return self.in_interior(theta)

    def tie_witnesses(self, theta) -> list:
        theta = self._check(theta)
        bad = [(i, j) for i, j in self.complex.face_pairs() if theta[i] > theta[j]]
        if bad:
            return bad
        return _sorted_gap_ties(theta, self.tol)

    def retract(self, theta) -> np.ndarray:
        return isotonic_repair(self.complex, theta)


def raw_filter(K: SimplicialComplex, **kw) -> RawFilter:
    return RawFilter(K, **kw)


def isotonic_repair(K: SimplicialComplex, values) -> np.ndarray:
    """Closest monotone filter in sup norm.

    With up(s) = max of values over faces of s and low(s) = min over
    cofaces, the midpoint (up + low) / 2 is monotone and attains the
    optimal L-infinity error max (up - low) / 2.
    """
    v = np.asarray(values, dtype=float).copy()
    up = v.copy()
    for j, fs in enumerate(K.faces):  # faces precede cofaces in index order
        for i in fs:
            up[j] = max(up[j], up[i])
    low = v.copy()
    for j in range(len(K) - 1, -1, -1):
        for i in K.faces[j]:
            low[i] = min(low[i], low[j])
    out = 0.5 * (up + low)
    # guard against rounding in the midpoint
    for j, fs in enumerate(K.faces):
        for i in fs:
            out[j] = max(out[j], out[i])
    return out


__all__ = [
    "GENERAL_POSITION_TOL",
    "Parametrization",
    "VertexFunction",
    "HeightVertices",
    "SquaredDistanceVertices",
    "CallableVertices",
    "LowerStar",
    "lower_star",
    "height",
    "distance_to_point",
    "Rips",
    "rips",
    "EllipsoidRips",
    "ellipsoid_rips",
    "matrices_from_chart",
    "chart_from_matrices",
    "RawFilter",
    "raw_filter",
    "isotonic_repair",
    "build_complex",
]
