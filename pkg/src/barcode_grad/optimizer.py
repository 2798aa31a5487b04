"""Gradient descent on theta -> sum_t w_t L_t(Dgm_{p_t}(F(theta))) + R(theta).

At smooth parameters the gradient comes from a certified lift and the chain
rule. At singular parameters (ties in the pre-order, or a loss at a
non-generic barcode) a subgradient is taken from the template valid on the
side of each probe direction (the negated tie-broken gradient, then a few
seeded random directions). The step tries the minimum-norm element of
their convex hull, then each one-sided gradient, and keeps the first that
decreases the loss. If no probe stabilizes the run stops with status
``"stalled"``.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import nnls

from .barcodes import Barcode, OrderedBarcode
from .differential import BarcodeDifferential, build_lift, chain_rule, lift_from_template, stabilized_probe
from .errors import SingularParameter, StalledAtSingularity, UnstableDirection
from .losses import BarcodeLoss
from .parametrizations import Parametrization
from .persistence import total_template

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossTerm:
    degree: int
    loss: BarcodeLoss
    weight: float = 1.0


class SupNormRegularizer:
    """lam * |F(theta) - reference|_inf, with the subgradient of the max
    coordinate (lowest index on ties)."""

    def __init__(self, reference, weight: float):
        self.reference = np.asarray(reference, dtype=float)
        self.weight = float(weight)

    def evaluate(self, F: Parametrization, theta):
        vals = F.value(theta).values
        diff = vals - self.reference
        a = np.abs(diff)
        k = int(np.argmax(a))
        value = self.weight * float(a[k])
        g = np.zeros(F.param_dim)
        smooth = True
        if a[k] > 0:
            g = self.weight * np.sign(diff[k]) * F.jacobian(theta)[k]
            smooth = int(np.count_nonzero(a >= a[k] - 1e-12)) == 1
        return value, g, smooth


@dataclass
class OptimizationProblem:
    parametrization: Parametrization
    terms: Sequence[LossTerm]
    theta0: np.ndarray
    rate: float = 1e-2
    schedule: str = "constant"  # or "inverse": rate / (k + 1)
    max_iters: int = 100
    grad_tol: float = 1e-10
    regularizer: SupNormRegularizer | None = None
    armijo_halvings: int = 10
    seed: int = 0

    def rate_at(self, k: int) -> float:
        if self.schedule == "constant":
            return self.rate
        if self.schedule == "inverse":
            return self.rate / (k + 1)
        raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass
class Record:
    iteration: int
    theta: list
    loss: float
    grad_norm: float
    smooth: bool
    rate: float
    status: str = "ok"
    barcodes: list = field(default_factory=list, repr=False)

    def to_json(self, snapshot: str | None = None) -> str:
        d = {
            "iteration": self.iteration,
            "loss": self.loss,
            "grad_norm": self.grad_norm,
            "smooth": self.smooth,
            "rate": self.rate,
            "status": self.status,
            "theta": self.theta,
        }
        if snapshot is not None:
            d["barcodes"] = snapshot
        return json.dumps(d, sort_keys=True)


@dataclass
class Trace:
    records: list = field(default_factory=list)
    status: str = "running"

    @property
    def losses(self) -> list:
        return [r.loss for r in self.records]

    @property
    def final(self) -> Record:
        return self.records[-1]

    def write(self, out_dir: str, snapshots: bool = True) -> None:
        """trace.jsonl plus one barcode CSV per iteration under barcodes/."""
        from .io import write_barcodes_csv

        os.makedirs(out_dir, exist_ok=True)
        if snapshots:
            os.makedirs(os.path.join(out_dir, "barcodes"), exist_ok=True)
        with open(os.path.join(out_dir, "trace.jsonl"), "w") as fh:
            for r in self.records:
                ref = None
                if snapshots:
                    ref = f"barcodes/iter_{r.iteration:05d}.csv"
                    write_barcodes_csv(os.path.join(out_dir, ref), r.barcodes)
                fh.write(r.to_json(ref) + "\n")


def _objective(problem: OptimizationProblem, theta):
    """Loss value and per-term (template, ordered barcode) without gradients."""
    F = problem.parametrization
    f = F.value(theta)
    T = total_template(f)
    total = 0.0
    for term in problem.terms:
        x = T[term.degree].read(f.values)
        total += term.weight * float(term.loss.value(x))
    if problem.regularizer is not None:
        total += problem.regularizer.evaluate(F, theta)[0]
    return total, f, T


def _gradient_from_templates(problem: OptimizationProblem, theta, probe) -> tuple:
    """Chain-rule gradient at ``theta`` through the templates of F(probe),
    with the Jacobian of the branch active at ``probe``.

    Returns ``(grad, smooth)``; ``smooth`` reports the losses and the
    regularizer only.
    """
    F = problem.parametrization
    T = total_template(F.value(probe))
    J = F.jacobian(theta) if probe is theta else F.one_sided_jacobian(theta, probe)
    g = np.zeros(F.param_dim)
    smooth = True
    for term in problem.terms:
        lift = lift_from_template(F, theta, T[term.degree])
        ev = term.loss.evaluate(lift.evaluate(theta))
        smooth = smooth and ev.smooth
        if math.isfinite(float(np.sum(ev.value))):
            g += term.weight * chain_rule(lift, BarcodeDifferential(J[lift.ordering], lift.m, lift.n), ev.grad)
    if problem.regularizer is not None:
        _, rg, rs = problem.regularizer.evaluate(F, theta)
        g += rg
        smooth = smooth and rs
    return g, smooth


def _min_norm_hull(G: np.ndarray) -> np.ndarray:
    """Minimum-norm point of the convex hull of the rows of ``G``."""
    k = len(G)
    if k == 1:
        return G[0]
    # nonnegative least squares with a heavily weighted sum-to-one row
    M = 1e3 * max(1.0, float(np.abs(G).max()))
    A = np.vstack([G.T, M * np.ones((1, k))])
    rhs = np.concatenate([np.zeros(G.shape[1]), [M]])
    lam, _ = nnls(A, rhs)
    lam /= lam.sum()
    return lam @ G


def gradient_candidates(problem: OptimizationProblem, theta) -> tuple:
    """Descent candidates at ``theta`` and whether the objective is smooth there.

    At a smooth point the single candidate is the gradient. At a singular
    filter the candidates are the minimum-norm element of the hull of the
    one-sided gradients, then each one-sided gradient (probe strata first,
    the tie-broken gradient last). Raises ``StalledAtSingularity`` when no
    probe direction stabilizes.
    """
    F = problem.parametrization
    theta = np.asarray(theta, dtype=float)
    try:
        for term in problem.terms:
            build_lift(F, theta, term.degree)
        g, smooth = _gradient_from_templates(problem, theta, theta)
        return [g], smooth
    except SingularParameter:
        pass
    g0, _ = _gradient_from_templates(problem, theta, theta)
    B = F.tangent_basis(theta)
    rng = np.random.default_rng(problem.seed)
    directions = []
    if np.linalg.norm(g0) > 0:
        directions.append(-g0 / np.linalg.norm(g0))
    for _ in range(4):
        v = B @ rng.normal(size=B.shape[1])
        directions.append(v / np.linalg.norm(v))
    sided = []
    for u in directions:
        try:
            _, probe = stabilized_probe(F, theta, u)
        except UnstableDirection:
            continue
        sided.append(_gradient_from_templates(problem, theta, probe)[0])
    if not sided:
        raise StalledAtSingularity(f"no stable probe direction at theta={theta.tolist()}")
    sampled = sided + [g0]
    return [_min_norm_hull(np.array(sampled))] + sampled, False


def gradient(problem: OptimizationProblem, theta) -> tuple:
    """(gradient, smooth) at ``theta``; at singular points the first
    descent candidate."""
    cands, smooth = gradient_candidates(problem, theta)
    return cands[0], smooth


def _record(problem, k, theta, loss, g, smooth, rate, status, f, T) -> Record:
    bars = [(p, t.realize(f.values)) for p, t in enumerate(T.templates)]
    return Record(k, np.asarray(theta).tolist(), float(loss), float(np.linalg.norm(g)), bool(smooth), float(rate), status, bars)


def _line_search(problem, theta, g, loss, rate):
    """Armijo halving along -g; returns (theta_new, rate, decreased)."""
    F = problem.parametrization
    new = F.retract(theta - rate * g)
    for _ in range(problem.armijo_halvings):
        if _objective(problem, new)[0] <= loss:
            break
        rate *= 0.5
        new = F.retract(theta - rate * g)
    return new, rate, _objective(problem, new)[0] < loss


def step(problem: OptimizationProblem, theta, k: int = 0):
    """One descent step from ``theta``; returns ``(theta_new, record)``.

    The record describes ``theta`` (loss, gradient norm, smoothness). The
    rate is halved up to ``armijo_halvings`` times while the loss increases.
    At singular points the first candidate that strictly decreases the
    loss is used; if none does, the step along the first candidate is
    accepted regardless.
    """
    theta = np.asarray(theta, dtype=float)
    loss, f, T = _objective(problem, theta)
    cands, smooth = gradient_candidates(problem, theta)
    cands = [g for g in cands if np.linalg.norm(g) > 0]
    if not cands:
        return theta.copy(), _record(problem, k, theta, loss, np.zeros_like(theta), smooth, 0.0, "ok", f, T)
    first = None
    for g in cands:
        new, rate, decreased = _line_search(problem, theta, g, loss, problem.rate_at(k))
        if first is None:
            first = (new, rate, g)
        if decreased:
            return new, _record(problem, k, theta, loss, g, smooth, rate, "ok", f, T)
    new, rate, g = first
    return new, _record(problem, k, theta, loss, g, smooth, rate, "ok", f, T)


def run(problem: OptimizationProblem) -> Trace:
    """Iterate ``step`` until ``max_iters`` or the gradient norm drops below
    ``grad_tol``. The last record always describes the final iterate."""
    trace = Trace()
    theta = np.asarray(problem.parametrization.retract(problem.theta0), dtype=float)
    for k in range(problem.max_iters + 1):
        if k == problem.max_iters:
            loss, f, T = _objective(problem, theta)
            try:
                g, smooth = gradient(problem, theta)
                status = "ok"
            except StalledAtSingularity:
                g, smooth, status = np.zeros_like(theta), False, "stalled"
            trace.records.append(_record(problem, k, theta, loss, g, smooth, 0.0, status, f, T))
            trace.status = "stalled" if status == "stalled" else "max_iters"
            break
        try:
            new, rec = step(problem, theta, k)
        except StalledAtSingularity as exc:
            logger.info("stalled at iteration %d: %s", k, exc)
            loss, f, T = _objective(problem, theta)
            trace.records.append(_record(problem, k, theta, loss, np.zeros_like(theta), False, 0.0, "stalled", f, T))
            trace.status = "stalled"
            break
        trace.records.append(rec)
        if rec.grad_norm < problem.grad_tol:
            trace.status = "converged"
            break
        theta = new
    return trace


def simplification_target(f0_diagram: Barcode, eps: float) -> Barcode:
    """Dgm(f0) without the intervals within L-infinity distance eps of the diagonal."""
    return f0_diagram.without_short(eps)


__all__ = [
    "LossTerm",
    "SupNormRegularizer",
    "OptimizationProblem",
    "Record",
    "Trace",
    "gradient",
    "gradient_candidates",
    "step",
    "run",
    "simplification_target",
    "OrderedBarcode",
]
