"""Local lifts of theta -> Dgm_p(F(theta)), their differentials, and the
chain rule with losses defined on ordered barcodes.

A lift reads the filter values F(theta') through a barcode template that
is valid wherever the pre-order of F(theta') agrees with the one at the
base point. Its Jacobian is therefore a row selection of the Jacobian of
the parametrization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .barcode_space import bottleneck, quotient
from .barcodes import OrderedBarcode
from .complex import preorder
from .errors import ShapeError, SingularParameter, UnstableDirection
from .parametrizations import Parametrization
from .persistence import BarcodeTemplate, barcode_template, diagram


@dataclass(frozen=True, eq=False)
class Lift:
    """Local lift of B_p around ``theta0`` through ``template``.

    ``ordering[k]`` is the simplex read at slot ``k``; by default it is the
    template's canonical ordering, but any reordering of pairs and unpaired
    simplices is an equally valid lift.
    """

    parametrization: Parametrization
    theta0: np.ndarray
    degree: int
    template: BarcodeTemplate
    ordering: np.ndarray

    @property
    def m(self) -> int:
        return self.template.m

    @property
    def n(self) -> int:
        return self.template.n

    def evaluate(self, theta) -> OrderedBarcode:
        vals = self.parametrization.value(theta).values
        return OrderedBarcode(self.m, self.n, vals[self.ordering])

    def reordered(self, pair_perm=None, unpaired_perm=None) -> "Lift":
        """The lift obtained by permuting pair slots and unpaired slots."""
        m, n = self.m, self.n
        pp = np.arange(m) if pair_perm is None else np.asarray(pair_perm)
        up = np.arange(n) if unpaired_perm is None else np.asarray(unpaired_perm)
        pairs = self.ordering[:2 * m].reshape(m, 2)[pp].reshape(-1)
        rest = self.ordering[2 * m:][up]
        return Lift(self.parametrization, self.theta0, self.degree, self.template, np.concatenate([pairs, rest]))


@dataclass(frozen=True, eq=False)
class BarcodeDifferential:
    """(2m+n) x dim matrix: row k is d_theta F(.)(ordering[k])."""

    matrix: np.ndarray
    m: int
    n: int

    def apply(self, h) -> np.ndarray:
        return self.matrix @ np.asarray(h, dtype=float)


def lift_from_template(F: Parametrization, theta, template: BarcodeTemplate) -> Lift:
    """Wrap a template as a lift without certifying its validity."""
    theta = np.array(theta, dtype=float).reshape(-1)
    return Lift(F, theta, template.degree, template, template.ordering())


def build_lift(F: Parametrization, theta, p: int) -> Lift:
    """Certified local lift of B_p at ``theta``.

    Raises ``SingularParameter`` carrying the tie witnesses when the
    parametrization is not smooth at ``theta`` or its pre-order is not
    locally constant there.
    """
    theta = np.array(theta, dtype=float).reshape(-1)
    witnesses = F.tie_witnesses(theta)
    if witnesses or not F.is_smooth_at(theta):
        raise SingularParameter(theta, witnesses)
    return lift_from_template(F, theta, barcode_template(F.value(theta), p))


def differential(lift: Lift, F: Parametrization, theta) -> BarcodeDifferential:
    J = F.jacobian(theta)
    return BarcodeDifferential(J[lift.ordering], lift.m, lift.n)


def chain_rule(lift: Lift, bdiff: BarcodeDifferential, loss_grad) -> np.ndarray:
    """Gradient of loss o B_p in parameter space: bdiff^T . loss_grad.

    ``loss_grad`` is a vector of length 2m+n, or a (k, 2m+n) matrix for
    vector-valued losses (the result is then k x dim).
    """
    g = np.asarray(loss_grad, dtype=float)
    slots = 2 * lift.m + lift.n
    if bdiff.matrix.shape[0] != slots or g.shape[-1] != slots:
        raise ShapeError(f"loss gradient has {g.shape[-1]} slots, lift has {slots}, differential has {bdiff.matrix.shape[0]} rows")
    return g @ bdiff.matrix


@dataclass(frozen=True, eq=False)
class DirectionalDerivative:
    """One-sided derivative along ``direction`` of the lift valid on that side."""

    values: np.ndarray
    lift: Lift
    direction: np.ndarray
    probe: float


def stabilized_probe(F: Parametrization, theta, u, eps: float = 1e-6, max_halvings: int = 20):
    """Smallest probe ``theta + eps u`` whose pre-order agrees with the one
    at ``theta + eps u / 2``. Returns ``(eps, probe_point)``."""
    theta = np.asarray(theta, dtype=float)
    for _ in range(max_halvings + 1):
        a = F.retract(theta + eps * u)
        b = F.retract(theta + 0.5 * eps * u)
        if preorder(F.value(a)) == preorder(F.value(b)):
            return 0.5 * eps, b
        eps *= 0.5
    raise UnstableDirection(f"pre-order did not stabilize along direction after {max_halvings} halvings")


def directional_derivative(F: Parametrization, theta, u, p: int, eps: float = 1e-6, max_halvings: int = 20) -> DirectionalDerivative:
    """Derivative of B_p at ``theta`` along unit vector ``u`` (from the u side).

    The template is taken from the filter at a probe point ``theta + eps u``
    once the pre-order there has stabilized, so it is valid on the stratum
    entered in direction ``u``.
    """
    theta = np.array(theta, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    used_eps, probe = stabilized_probe(F, theta, u, eps, max_halvings)
    fp = F.value(probe)
    lift = lift_from_template(F, theta, barcode_template(fp, p))
    if F.is_smooth_at(theta) and preorder(F.value(theta)) == preorder(fp):
        J = F.jacobian(theta)
    else:
        J = F.one_sided_jacobian(theta, probe)
    return DirectionalDerivative(J[lift.ordering] @ u, lift, u, used_eps)


@dataclass(frozen=True)
class TaylorReport:
    radii: tuple
    remainders: tuple
    ratios: tuple

    @property
    def decreasing(self) -> bool:
        r = self.ratios
        return all(r[k + 1] <= r[k] for k in range(len(r) - 1))

    @property
    def final_ratio(self) -> float:
        return self.ratios[-1]


def _reflect_below_diagonal(x: OrderedBarcode) -> OrderedBarcode:
    """Swap (b, d) when d < b, keeping the distance to the diagonal.

    A first-order model can push a short bar across the diagonal at large
    radii; the remainder is only meaningful as the radius shrinks.
    """
    pairs = np.sort(x.data[:2 * x.m].reshape(-1, 2), axis=1)
    return x.with_data(np.concatenate([pairs.reshape(-1), x.infinite]))


def taylor_remainder_check(F: Parametrization, theta, p: int, radii=(1e-1, 1e-2, 1e-3, 1e-4), direction=None, seed: int = 0) -> TaylorReport:
    """First-order remainder db(B_p(theta + h), Q(lift(theta) + D h)) / |h|.

    ``direction`` defaults to a seeded random unit tangent vector.
    """
    theta = np.array(theta, dtype=float).reshape(-1)
    lift = build_lift(F, theta, p)
    D = differential(lift, F, theta)
    if direction is None:
        B = F.tangent_basis(theta)
        u = B @ np.random.default_rng(seed).normal(size=B.shape[1])
    else:
        u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    base = lift.evaluate(theta)
    rems, ratios = [], []
    for r in radii:
        h = r * u
        exact = diagram(F.value(F.retract(theta + h)), p)
        approx = quotient(_reflect_below_diagonal(base.with_data(base.data + D.apply(h))))
        rem = bottleneck(exact, approx)
        rems.append(rem)
        ratios.append(rem / r)
    return TaylorReport(tuple(radii), tuple(rems), tuple(ratios))
