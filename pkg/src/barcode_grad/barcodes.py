"""Barcode containers: unordered multisets and ordered vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


def _sorted_pairs(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if len(arr) == 0:
        return np.zeros((0, 2))
    return arr[np.lexsort((arr[:, 1], arr[:, 0]))]


@dataclass(frozen=True, eq=False)
class Barcode:
    """Finite multiset of intervals; the diagonal is implicit.

    ``finite`` is an ``(k, 2)`` array of (birth, death) with birth < death,
    ``infinite`` the births of the intervals that never die. Both are kept
    sorted so that equality of multisets is equality of arrays.
    """

    finite: np.ndarray
    infinite: np.ndarray

    @classmethod
    def from_pairs(cls, finite=(), infinite=()) -> "Barcode":
        fin = _sorted_pairs(finite)
        if len(fin) and np.any(fin[:, 1] < fin[:, 0]):
            raise ValueError("interval with death < birth")
        fin = fin[fin[:, 1] != fin[:, 0]]  # absorbed by the diagonal
        inf = np.sort(np.asarray(infinite, dtype=float).reshape(-1))
        fin.setflags(write=False)
        inf.setflags(write=False)
        return cls(fin, inf)

    @classmethod
    def empty(cls) -> "Barcode":
        return cls.from_pairs()

    def __len__(self):
        return len(self.finite) + len(self.infinite)

    def __eq__(self, other):
        if not isinstance(other, Barcode):
            return NotImplemented
        return (
            self.finite.shape == other.finite.shape
            and self.infinite.shape == other.infinite.shape
            and bool(np.all(self.finite == other.finite))
            and bool(np.all(self.infinite == other.infinite))
        )

    def isclose(self, other: "Barcode", atol: float = 1e-9) -> bool:
        return (
            self.finite.shape == other.finite.shape
            and self.infinite.shape == other.infinite.shape
            and np.allclose(self.finite, other.finite, atol=atol, rtol=0)
            and np.allclose(self.infinite, other.infinite, atol=atol, rtol=0)
        )

    def persistence(self) -> np.ndarray:
        return self.finite[:, 1] - self.finite[:, 0]

    def without_short(self, eps: float) -> "Barcode":
        """Drop the finite intervals at L-infinity distance < eps from the diagonal."""
        keep = self.persistence() / 2.0 >= eps
        return Barcode.from_pairs(self.finite[keep], self.infinite)

    def to_dict(self) -> dict:
        return {"finite": self.finite.tolist(), "infinite": self.infinite.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Barcode":
        return cls.from_pairs(d.get("finite", ()), d.get("infinite", ()))

    def __repr__(self):
        fin = ", ".join(f"({b:g}, {d:g})" for b, d in self.finite)
        inf = ", ".join(f"({b:g}, inf)" for b in self.infinite)
        return f"Barcode[{', '.join(x for x in (fin, inf) if x)}]"


@dataclass(frozen=True, eq=False)
class OrderedBarcode:
    """Vector ``(b_1, d_1, ..., b_m, d_m, v_1, ..., v_n)`` of length 2m+n."""

    m: int
    n: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float).reshape(-1)
        if data.shape[0] != 2 * self.m + self.n:
            raise ShapeError(f"ordered barcode data has length {data.shape[0]}, expected {2 * self.m + self.n}")
        object.__setattr__(self, "data", data)

    @property
    def births(self) -> np.ndarray:
        return self.data[0:2 * self.m:2]

    @property
    def deaths(self) -> np.ndarray:
        return self.data[1:2 * self.m:2]

    @property
    def infinite(self) -> np.ndarray:
        return self.data[2 * self.m:]

    @property
    def shape(self) -> tuple:
        return (self.m, self.n)

    def __len__(self):
        return len(self.data)

    @classmethod
    def from_barcode(cls, D: Barcode) -> "OrderedBarcode":
        """Canonical pre-image of ``D`` (sorted slots, no diagonal pairs)."""
        return cls(len(D.finite), len(D.infinite), np.concatenate([D.finite.reshape(-1), D.infinite]))

    def with_data(self, data) -> "OrderedBarcode":
        return OrderedBarcode(self.m, self.n, data)
