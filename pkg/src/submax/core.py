"""Matrix and submatrix data model, Gaussian null matrices and the two block statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidArgumentError
from .rng import generator


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Dense, finite, read-only m x n matrix.

    The constructor copies its input and marks the copy read-only, so a
    ``DataMatrix`` can be shared between threads.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"matrix must be 2-dimensional, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"matrix dimensions must be positive, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise InvalidArgumentError("matrix entries must be finite (no NaN/Inf)")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries: Iterable[float]) -> "DataMatrix":
        flat = np.asarray(list(entries), dtype=np.float64)
        if rows < 1 or cols < 1:
            raise InvalidArgumentError("rows and cols must be positive")
        if flat.size != rows * cols:
            raise InvalidArgumentError(
                f"expected {rows * cols} entries for a {rows}x{cols} matrix, got {flat.size}")
        return cls(flat.reshape(rows, cols))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def entries(self) -> np.ndarray:
        """Row-major flat view of the entries."""
        return self.values.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, DataMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    __hash__ = None


def _id_tuple(ids, what: str) -> tuple[int, ...]:
    out = []
    for x in ids:
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise InvalidArgumentError(f"{what} ids must be integers, got {x!r}")
        if x < 0:
            raise InvalidArgumentError(f"{what} ids must be non-negative, got {x}")
        out.append(int(x))
    if not out:
        raise InvalidArgumentError(f"{what} ids must be nonempty")
    if len(set(out)) != len(out):
        dupes = sorted({x for x in out if out.count(x) > 1})
        raise InvalidArgumentError(f"duplicate {what} ids: {dupes}")
    return tuple(sorted(out))


@dataclass(frozen=True)
class SubmatrixIndex:
    """Row and column id sets of a submatrix (0-based, stored sorted).

    Input order does not matter; duplicates are rejected rather than merged.
    """

    row_ids: tuple[int, ...]
    col_ids: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_ids", _id_tuple(self.row_ids, "row"))
        object.__setattr__(self, "col_ids", _id_tuple(self.col_ids, "column"))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_ids), len(self.col_ids)

    @property
    def size(self) -> int:
        return len(self.row_ids) * len(self.col_ids)

    def check_bounds(self, W: DataMatrix) -> None:
        if self.row_ids[-1] >= W.rows:
            raise InvalidArgumentError(
                f"row id {self.row_ids[-1]} out of bounds for {W.rows} rows")
        if self.col_ids[-1] >= W.cols:
            raise InvalidArgumentError(
                f"column id {self.col_ids[-1]} out of bounds for {W.cols} columns")

    def block(self, W: DataMatrix) -> np.ndarray:
        self.check_bounds(W)
        return W.values[np.ix_(self.row_ids, self.col_ids)]

    def to_dict(self) -> dict:
        return {"rows": list(self.row_ids), "cols": list(self.col_ids)}


@dataclass(frozen=True)
class PlantedSignal:
    index: SubmatrixIndex
    amplitude: float

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise InvalidArgumentError(f"amplitude must be finite, got {self.amplitude}")


def _check_dims(m, n):
    for name, v in (("m", m), ("n", n)):
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
            raise InvalidArgumentError(f"{name} must be a positive integer, got {v!r}")


def gaussian_matrix(m: int, n: int, seed: int) -> DataMatrix:
    """m x n matrix of i.i.d. N(0, 1) draws from a Philox stream keyed by ``seed``."""
    _check_dims(m, n)
    return DataMatrix(generator(seed).standard_normal((int(m), int(n))))


def submatrix_average(W: DataMatrix, C: SubmatrixIndex) -> float:
    """Mean of the entries of W on C.

    The block is summed with ``math.fsum`` (exactly rounded), so the result
    does not depend on the order of ids or on the platform.
    """
    block = C.block(W)
    return math.fsum(block.ravel().tolist()) / C.size


def anova_residual(W: DataMatrix, C: SubmatrixIndex) -> float:
    """Two-way ANOVA mean squared residual of the block W[C].

    Uses the closed form: residual_ij = w_ij - row mean - column mean + grand
    mean, summed in squares and divided by (|A|-1)(|B|-1).
    """
    k, l = C.shape
    if k < 2 or l < 2:
        raise InvalidArgumentError(f"ANOVA residual needs at least 2x2, got {k}x{l}")
    block = C.block(W)
    resid = (block - block.mean(axis=1, keepdims=True)
             - block.mean(axis=0, keepdims=True) + block.mean())
    return math.fsum((resid * resid).ravel().tolist()) / ((k - 1) * (l - 1))


def embed_signal(W: DataMatrix, sig: PlantedSignal) -> DataMatrix:
    """Return W with ``sig.amplitude`` added on ``sig.index``; W itself is untouched."""
    sig.index.check_bounds(W)
    out = np.array(W.values)
    out[np.ix_(sig.index.row_ids, sig.index.col_ids)] += sig.amplitude
    return DataMatrix(out)
