"""Feature matrix files: a CSV form and a compact binary container.

CSV rows are ``id,f0..f{L-1}`` with floats written via repr so values
round-trip.  The binary container is magic ``TXD1`` followed by little-endian
u32 row and column counts and the f64 matrix row-major; it stores no ids.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BundleFormatError, ConfigError

TXD_MAGIC = b"TXD1"


def write_matrix_csv(path, ids, matrix) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ConfigError("feature matrix must be 2-D")
    if len(ids) != matrix.shape[0]:
        raise ConfigError("id count does not match matrix rows")
    cols = matrix.shape[1]
    lines = ["id," + ",".join(f"f{i}" for i in range(cols))]
    for rid, row in zip(ids, matrix):
        lines.append(str(rid) + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_csv(path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise BundleFormatError(f"{path}: empty feature file")
    header = lines[0].split(",")
    if header[0] != "id" or any(
        h != f"f{i}" for i, h in enumerate(header[1:])
    ):
        raise BundleFormatError(f"{path}: malformed feature header")
    cols = len(header) - 1
    ids, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != cols + 1:
            raise BundleFormatError(f"{path}: row {lineno}: wrong field count")
        ids.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    return ids, np.asarray(rows, dtype=np.float64).reshape(len(ids), cols)


def write_txd(path, matrix) -> None:
    matrix = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if matrix.ndim != 2:
        raise ConfigError("feature matrix must be 2-D")
    rows, cols = matrix.shape
    with open(path, "wb") as fh:
        fh.write(TXD_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(matrix.astype("<f8").tobytes())


def read_txd(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    if len(blob) < 4 or blob[:4] != TXD_MAGIC:
        raise BundleFormatError(f"{path}: bad magic", offset=0)
    if len(blob) < 12:
        raise BundleFormatError(f"{path}: truncated header", offset=len(blob))
    rows, cols = struct.unpack("<II", blob[4:12])
    expected = 12 + rows * cols * 8
    if len(blob) != expected:
        raise BundleFormatError(
            f"{path}: payload size mismatch (want {expected} bytes, have {len(blob)})",
            offset=min(len(blob), expected),
        )
    data = np.frombuffer(blob, dtype="<f8", offset=12)
    return data.reshape(rows, cols).astype(np.float64)
