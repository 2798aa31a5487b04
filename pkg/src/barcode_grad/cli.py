"""barcode-grad command line: persistence, optimize, verify."""
from __future__ import annotations

import argparse
import copy
import json
import os
import sys

import jsonschema
import numpy as np

from .barcodes import Barcode
from .errors import BarcodeGradError
from .io import barcode_rows, complex_from_dict, complex_to_dict, format_number, load_complex, template_to_dict, write_barcodes_csv
from .persistence import total_template

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad input: reported on stderr with exit code 2."""


# --------------------------------------------------------------------------
# persistence


def _parse_degrees(text: str | None, top: int) -> list:
    if text is None:
        return list(range(top + 1))
    try:
        degs = sorted({int(t) for t in text.split(",") if t.strip()})
    except ValueError as exc:
        raise UsageError(f"bad --degrees {text!r}") from exc
    bad = [p for p in degs if not 0 <= p <= top]
    if bad:
        raise UsageError(f"degrees {bad} outside 0..{top}")
    return degs


def cmd_persistence(args) -> int:
    K, f, _ = load_complex(args.file)
    if f is None:
        raise UsageError(f"{args.file}: no 'values' to filter by")
    degs = _parse_degrees(args.degrees, K.dim)
    T = total_template(f)
    bars = [(p, T[p].realize(f.values)) for p in degs]
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_barcodes_csv(os.path.join(args.out, "barcodes.csv"), bars)
        with open(os.path.join(args.out, "template.json"), "w") as fh:
            json.dump(template_to_dict(K, T, degs), fh, indent=2, sort_keys=True)
            fh.write("\n")
    sys.stdout.write("degree,birth,death\n")
    for p, b, d in barcode_rows(bars):
        sys.stdout.write(f"{p},{format_number(b)},{format_number(d)}\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# optimize

_NUM_LIST = {"type": "array", "items": {"type": "number"}}
_BARCODE = {
    "type": "object",
    "properties": {"finite": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}}, "infinite": _NUM_LIST},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["parametrization", "loss"],
    "additionalProperties": False,
    "properties": {
        "parametrization": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["rips", "ellipsoid_rips", "height", "lower_star", "raw_filter"]},
                "points": {"type": "array", "items": _NUM_LIST},
                "covariances": {"type": "array"},
                "complex": {"type": "object"},
                "theta0": _NUM_LIST,
                "max_dim": {"type": "integer", "minimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "loss": {
            "type": "object",
            "required": ["terms"],
            "properties": {
                "terms": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["kind", "degree"],
                        "properties": {
                            "kind": {"enum": ["total_persistence", "bottleneck_to", "wasserstein_to", "persistence_image"]},
                            "degree": {"type": "integer", "minimum": 0},
                            "weight": {"type": "number"},
                            "target": _BARCODE,
                            "simplify_eps": {"type": "number", "exclusiveMinimum": 0},
                            "q": {"type": "number", "exclusiveMinimum": 0},
                            "image": {
                                "type": "object",
                                "required": ["x0", "x1", "y0", "y1", "n", "sigma"],
                                "properties": {k: {"type": "number"} for k in ("x0", "x1", "y0", "y1", "sigma", "t")} | {"n": {"type": "integer", "minimum": 1}, "weights": _NUM_LIST},
                                "additionalProperties": False,
                            },
                        },
                        "additionalProperties": False,
                    },
                },
                "regularizer": {
                    "type": ["object", "null"],
                    "properties": {"kind": {"const": "sup_norm"}, "weight": {"type": "number", "minimum": 0}},
                    "required": ["kind", "weight"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "optimizer": {
            "type": "object",
            "properties": {
                "rate": {"type": "number", "exclusiveMinimum": 0},
                "schedule": {"enum": ["constant", "inverse"]},
                "max_iters": {"type": "integer", "minimum": 0},
                "grad_tol": {"type": "number", "minimum": 0},
                "armijo_halvings": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer"},
                "snapshots": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
}

OPTIMIZER_DEFAULTS = {"rate": 1e-2, "schedule": "constant", "max_iters": 100, "grad_tol": 1e-10, "armijo_halvings": 10, "seed": 0, "snapshots": True}
TERM_DEFAULTS = {"weight": 1.0, "q": 1.0}


def resolve_config(cfg: dict) -> dict:
    """Validate against the schema and fill every default explicitly."""
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise UsageError(f"config invalid at '{path}': {exc.message}") from exc
    out = copy.deepcopy(cfg)
    par = out["parametrization"]
    par.setdefault("tol", 1e-9)
    if par["kind"] in ("rips", "ellipsoid_rips"):
        par.setdefault("max_dim", 2)
    for t in out["loss"]["terms"]:
        for k, v in TERM_DEFAULTS.items():
            if k == "q" and t["kind"] != "wasserstein_to":
                continue
            t.setdefault(k, v)
        if t["kind"] in ("bottleneck_to", "wasserstein_to") and ("target" in t) == ("simplify_eps" in t):
            raise UsageError(f"{t['kind']} term needs exactly one of 'target' or 'simplify_eps'")
        if t["kind"] == "persistence_image":
            if "image" not in t:
                raise UsageError("persistence_image term needs an 'image' section")
            t["image"].setdefault("t", 1.0)
    out["loss"].setdefault("regularizer", None)
    opt = out.setdefault("optimizer", {})
    for k, v in OPTIMIZER_DEFAULTS.items():
        opt.setdefault(k, v)
    return out


def _build_parametrization(par: dict):
    from . import parametrizations as P

    kind, tol = par["kind"], par["tol"]
    if kind == "rips":
        if "points" not in par:
            raise UsageError("rips needs 'points'")
        pts = np.asarray(par["points"], dtype=float)
        if pts.ndim != 2:
            raise UsageError("'points' must be a list of equal-length coordinate lists")
        F = P.rips(pts.shape[0], pts.shape[1], max_dim=par["max_dim"], tol=tol)
        return F, pts.reshape(-1), None
    if kind == "ellipsoid_rips":
        if "points" not in par:
            raise UsageError("ellipsoid_rips needs 'points'")
        pts = np.asarray(par["points"], dtype=float)
        F = P.ellipsoid_rips(pts, max_dim=par["max_dim"], tol=tol)
        if "covariances" in par:
            theta = P.chart_from_matrices(np.asarray(par["covariances"], dtype=float))
        else:
            theta = P.chart_from_matrices(np.stack([np.eye(pts.shape[1])] * len(pts)))
        return F, theta, None
    if "complex" not in par:
        raise UsageError(f"{kind} needs a 'complex' section")
    K, f, coords = complex_from_dict(par["complex"])
    if kind == "raw_filter":
        if f is None and "theta0" not in par:
            raise UsageError("raw_filter needs complex 'values' or 'theta0'")
        return P.raw_filter(K, tol=tol), (f.values if f is not None else None), K
    if coords is None:
        raise UsageError(f"{kind} needs complex 'coordinates'")
    if kind == "height":
        return P.height(K, coords, tol=tol), None, K
    return P.distance_to_point(K, coords, tol=tol), None, K


def _build_problem(cfg: dict):
    from .losses import GaussianImageSpec, Scalarized, WeightingFunction, bottleneck_to, persistence_image, total_persistence, wasserstein_to
    from .optimizer import LossTerm, OptimizationProblem, SupNormRegularizer
    from .persistence import diagram

    par = cfg["parametrization"]
    F, theta0, _ = _build_parametrization(par)
    if "theta0" in par:
        theta0 = np.asarray(par["theta0"], dtype=float)
    if theta0 is None:
        raise UsageError(f"{par['kind']} needs 'theta0'")
    if len(theta0) != F.param_dim:
        raise UsageError(f"theta0 has {len(theta0)} entries, parametrization expects {F.param_dim}")
    theta0 = F.retract(theta0)
    f0 = F.value(theta0)
    top = F.complex.dim
    terms = []
    for t in cfg["loss"]["terms"]:
        p = t["degree"]
        if p > top:
            raise UsageError(f"degree {p} exceeds complex dimension {top}")
        kind = t["kind"]
        if kind == "total_persistence":
            loss = total_persistence
        elif kind == "persistence_image":
            im = t["image"]
            spec = GaussianImageSpec(im["x0"], im["x1"], im["y0"], im["y1"], im["n"], im["sigma"])
            w = np.asarray(im.get("weights", np.ones(im["n"] ** 2)), dtype=float)
            if len(w) != im["n"] ** 2:
                raise UsageError("image weights must have n*n entries")
            loss = Scalarized(persistence_image(spec, WeightingFunction(im["t"])), w)
        else:
            if "target" in t:
                target = Barcode.from_pairs(t["target"].get("finite", []), t["target"].get("infinite", []))
            else:
                target = diagram(f0, p).without_short(t["simplify_eps"])
            loss = bottleneck_to(target) if kind == "bottleneck_to" else wasserstein_to(target, t["q"])
        terms.append(LossTerm(p, loss, t["weight"]))
    reg = cfg["loss"]["regularizer"]
    regularizer = SupNormRegularizer(f0.values, reg["weight"]) if reg else None
    o = cfg["optimizer"]
    return OptimizationProblem(
        F, terms, theta0, rate=o["rate"], schedule=o["schedule"], max_iters=o["max_iters"], grad_tol=o["grad_tol"],
        regularizer=regularizer, armijo_halvings=o["armijo_halvings"], seed=o["seed"],
    )


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def cmd_optimize(args) -> int:
    from .optimizer import run

    cfg = resolve_config(_load_json(args.config))
    if args.print_config:
        json.dump(cfg, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    problem = _build_problem(cfg)
    trace = run(problem)
    out = args.out
    trace.write(out, snapshots=cfg["optimizer"]["snapshots"])
    write_barcodes_csv(os.path.join(out, "final_barcode.csv"), trace.final.barcodes)
    F = problem.parametrization
    final_f = F.value(np.asarray(trace.final.theta))
    if cfg["parametrization"]["kind"] == "raw_filter":
        with open(os.path.join(out, "final_filter.json"), "w") as fh:
            json.dump(complex_to_dict(F.complex, final_f), fh, indent=2)
            fh.write("\n")
    summary = {"status": trace.status, "iterations": len(trace.records), "initial_loss": trace.records[0].loss, "final_loss": trace.final.loss}
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"status={trace.status} iterations={len(trace.records)} final_loss={trace.final.loss!r}")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suite

    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}")
    report = run_suite(args.suite, seed=args.seed, count=args.count)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(report.to_json() + "\n")
    print(f"{args.suite}: {'passed' if report.passed else 'FAILED'} ({len(report.failures)} failures)")
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="barcode-grad", description="Persistence barcodes, their derivatives, and gradient descent through them.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("persistence", help="barcodes of a filtered complex (CSV on stdout)")
    p.add_argument("file", help="complex JSON with 'simplices' and 'values'")
    p.add_argument("--degrees", help="comma-separated degrees (default: all)")
    p.add_argument("--out", help="directory for barcodes.csv and template.json")
    p.set_defaults(func=cmd_persistence)

    p = sub.add_parser("optimize", help="gradient descent from a JSON config")
    p.add_argument("config")
    p.add_argument("--print-config", action="store_true", help="print the config with all defaults filled in, then exit")
    p.add_argument("--out", default="optimize_out", help="output directory (default: optimize_out)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("suite", help="stability | isometry | gradients | oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, help="override the suite's instance count")
    p.add_argument("--out", default="verify_out")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, BarcodeGradError, ValueError, OSError) as exc:
        print(f"barcode-grad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
