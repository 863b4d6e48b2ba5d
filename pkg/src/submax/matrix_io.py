"""Reading and writing matrices as CSV or the raw ``GRMMAT01`` binary format.

Binary layout (all little-endian): the 8 ASCII bytes ``GRMMAT01``, the row
count and column count as unsigned 64-bit integers, then rows*cols IEEE-754
doubles in row-major order.
"""

from __future__ import annotations

import csv
import io
import struct
from pathlib import Path

import numpy as np

from .core import DataMatrix
from .errors import InvalidArgumentError, MatrixFormatError

MAGIC = b"GRMMAT01"
_HEADER = struct.Struct("<8sQQ")


def to_binary(W: DataMatrix) -> bytes:
    return _HEADER.pack(MAGIC, W.rows, W.cols) + W.values.astype("<f8").tobytes(order="C")


def from_binary(data: bytes) -> DataMatrix:
    if len(data) < _HEADER.size:
        raise MatrixFormatError("binary matrix shorter than its header")
    magic, m, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MatrixFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 8 * m * n
    if len(data) != expected:
        raise MatrixFormatError(
            f"binary matrix {m}x{n} needs {expected} bytes, file has {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(m, n)
    try:
        return DataMatrix(values)
    except InvalidArgumentError as exc:
        raise MatrixFormatError(str(exc)) from exc


def to_csv(W: DataMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in W.values:
        writer.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def from_csv(text: str, header: bool = False) -> DataMatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if header:
        rows = rows[1:]
    if not rows:
        raise MatrixFormatError("CSV matrix has no data rows")
    width = len(rows[0])
    values = []
    for lineno, row in enumerate(rows, start=2 if header else 1):
        if len(row) != width:
            raise MatrixFormatError(
                f"row {lineno} has {len(row)} fields, expected {width}")
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise MatrixFormatError(f"row {lineno}: {exc}") from exc
    try:
        return DataMatrix(np.array(values))
    except InvalidArgumentError as exc:
        raise MatrixFormatError(str(exc)) from exc


def read_matrix(path, header: bool = False) -> DataMatrix:
    """Load a matrix, detecting the binary format by its magic bytes."""
    data = Path(path).read_bytes()
    if data[:8] == MAGIC:
        return from_binary(data)
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MatrixFormatError(f"{path}: not UTF-8 CSV and not GRMMAT01") from exc
    return from_csv(text, header=header)


def write_matrix(W: DataMatrix, path, fmt: str | None = None) -> None:
    path = Path(path)
    if fmt is None:
        fmt = "binary" if path.suffix in (".bin", ".grm") else "csv"
    if fmt == "binary":
        path.write_bytes(to_binary(W))
    elif fmt == "csv":
        path.write_text(to_csv(W), encoding="utf-8", newline="")
    else:
        raise InvalidArgumentError(f"unknown matrix format {fmt!r}")
