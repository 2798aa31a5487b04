"""File formats: complex JSON, barcode CSV, template JSON, image CSV."""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .barcodes import Barcode
from .complex import FilterFunction, SimplicialComplex, build_complex, validate_filter
from .errors import ConfigError
from .persistence import TotalBarcodeTemplate


def complex_from_dict(d: dict):
    """Returns ``(K, filter_or_None, coordinates_or_None)``.

    Missing faces are added. Values follow the listed simplices when they
    match them in number; otherwise they must cover the closed complex in
    canonical (dimension, then lexicographic) order.
    """
    if not isinstance(d, dict) or "simplices" not in d:
        raise ConfigError("complex document needs a 'simplices' array")
    raw = d["simplices"]
    if not isinstance(raw, list) or not all(isinstance(s, list) and all(isinstance(v, int) and not isinstance(v, bool) for v in s) for s in raw):
        raise ConfigError("'simplices' must be a list of integer lists")
    for s in raw:
        if list(s) != sorted(set(s)):
            raise ConfigError(f"simplex {s} is not strictly increasing")
    K = build_complex(raw)
    f = None
    if d.get("values") is not None:
        vals = np.asarray(d["values"], dtype=float)
        if vals.ndim != 1:
            raise ConfigError("'values' must be a flat array")
        if len(vals) == len(raw):
            full = np.full(len(K), np.nan)
            for s, v in zip(raw, vals):
                full[K.index[tuple(s)]] = v
            if np.isnan(full).any():
                raise ConfigError("values given for a subset of simplices; supply one value per simplex of the closed complex")
            f = validate_filter(K, full)
        elif len(vals) == len(K):
            f = validate_filter(K, vals)
        else:
            raise ConfigError(f"{len(vals)} values for {len(raw)} listed / {len(K)} closed simplices")
    coords = None
    if d.get("coordinates") is not None:
        coords = np.asarray(d["coordinates"], dtype=float)
        if coords.ndim != 2 or coords.shape[0] != K.n_vertices:
            raise ConfigError("'coordinates' must be one row per vertex")
    return K, f, coords


def load_complex(path: str):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return complex_from_dict(d)


def complex_to_dict(K: SimplicialComplex, f: FilterFunction | None = None, coordinates=None) -> dict:
    d = {"simplices": [list(s) for s in K.simplices]}
    if f is not None:
        d["values"] = [float(v) for v in f.values]
    if coordinates is not None:
        d["coordinates"] = np.asarray(coordinates, dtype=float).tolist()
    return d


def format_number(x: float) -> str:
    return "inf" if math.isinf(x) else repr(float(x))


def barcode_rows(barcodes) -> list:
    """``barcodes`` is a list of ``(degree, Barcode)``; rows sorted by degree
    then birth then death."""
    rows = []
    for p, D in barcodes:
        for b, d in D.finite:
            rows.append((int(p), float(b), float(d)))
        for b in D.infinite:
            rows.append((int(p), float(b), math.inf))
    rows.sort()
    return rows


def write_barcodes_csv(path: str, barcodes) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["degree", "birth", "death"])
        for p, b, d in barcode_rows(barcodes):
            w.writerow([p, format_number(b), format_number(d)])


def read_barcodes_csv(path: str) -> dict:
    """Returns ``{degree: Barcode}``."""
    acc: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            p = int(row["degree"])
            b, d = float(row["birth"]), float(row["death"])
            fin, inf = acc.setdefault(p, ([], []))
            (inf.append(b) if math.isinf(d) else fin.append((b, d)))
    return {p: Barcode.from_pairs(fin, inf) for p, (fin, inf) in sorted(acc.items())}


def template_to_dict(K: SimplicialComplex, T: TotalBarcodeTemplate, degrees) -> dict:
    """Pairs and unpaired simplices per degree, as vertex lists."""
    out = {}
    for p in degrees:
        t = T[p]
        out[str(p)] = {
            "pairs": [[list(K.simplices[a]), list(K.simplices[b])] for a, b in t.pairs],
            "unpaired": [list(K.simplices[a]) for a in t.unpaired],
        }
    return {"templates": out}


def write_image_csv(path: str, values, n: int) -> None:
    """Row-major n x n grid, entry (k, l) at flat index k*n + l."""
    grid = np.asarray(values, dtype=float).reshape(n, n)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in grid:
            w.writerow([repr(float(v)) for v in row])


def read_image_csv(path: str) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([[float(v) for v in row] for row in csv.reader(fh)])


def load_array(path: str, ndim: int | None = None) -> np.ndarray:
    """Point clouds and covariance lists stored as JSON arrays."""
    with open(path) as fh:
        arr = np.asarray(json.load(fh), dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ConfigError(f"{path}: expected a {ndim}-d array, got shape {arr.shape}")
    return arr
