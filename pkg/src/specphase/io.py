"""Dataset files: CSV (``segment_id,t0,t1,...``) and the SPHD binary format.

SPHD layout, little-endian::

    b"SPHD" | version u16 | segment count u32 | T u32 | float64 * (count * T)

Samples are stored segment-major.
"""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .dataset import ConditionDataset

MAGIC = b"SPHD"
VERSION = 1
_HEADER = struct.Struct("<4sHII")
HEADER_SIZE = _HEADER.size


class DataFormatError(ValueError):
    pass


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    return {".csv": "csv", ".bin": "bin", ".sphd": "bin"}.get(suffix, "csv")


def write_csv(path, segments, ids=None) -> None:
    arr = np.atleast_2d(np.asarray(segments, dtype=np.float64))
    ids = list(range(arr.shape[0])) if ids is None else list(ids)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment_id"] + [f"t{i}" for i in range(arr.shape[1])])
        for sid, row in zip(ids, arr):
            w.writerow([sid] + [repr(float(v)) for v in row])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = rows[0]
    if not header or header[0] != "segment_id":
        raise DataFormatError(f"{path}: header must start with 'segment_id'")
    width = len(header)
    if width < 3:
        raise DataFormatError(f"{path}: need at least two sample columns")
    ids, data = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise DataFormatError(f"{path}: row {lineno} has {len(row)} fields, expected {width}")
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {lineno}: {exc}") from None
        for col, v in enumerate(vals):
            if not math.isfinite(v):
                raise DataFormatError(f"{path}: row {lineno}, column t{col}: non-finite value")
        ids.append(row[0])
        data.append(vals)
    if not data:
        raise DataFormatError(f"{path}: no segments")
    return ids, np.asarray(data, dtype=np.float64)


def write_bin(path, segments) -> None:
    arr = np.atleast_2d(np.asarray(segments, dtype=np.float64))
    n, T = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, T))
        fh.write(arr.astype("<f8").tobytes(order="C"))


def read_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise DataFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, n, T = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported format version {version}")
    expected = HEADER_SIZE + n * T * 8
    if len(raw) != expected:
        raise DataFormatError(
            f"{path}: payload length mismatch: {len(raw)} bytes, expected {expected}"
        )
    arr = np.frombuffer(raw, dtype="<f8", offset=HEADER_SIZE).reshape(n, T).astype(np.float64)
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        j, t = bad[0]
        offset = HEADER_SIZE + (int(j) * T + int(t)) * 8
        raise DataFormatError(f"{path}: non-finite value at segment {int(j)}, byte offset {offset}")
    return arr


def load_segments(path, fmt: str | None = None) -> np.ndarray:
    fmt = fmt or infer_format(path)
    if fmt == "csv":
        return read_csv(path)[1]
    if fmt == "bin":
        return read_bin(path)
    raise DataFormatError(f"unknown format {fmt!r}")


def load_dataset(path, fmt: str | None = None, label: str = "x") -> ConditionDataset:
    return ConditionDataset(load_segments(path, fmt), label=label)


def save_dataset(path, data, fmt: str | None = None) -> None:
    segs = data.segments if isinstance(data, ConditionDataset) else data
    fmt = fmt or infer_format(path)
    if fmt == "csv":
        write_csv(path, segs)
    elif fmt == "bin":
        write_bin(path, segs)
    else:
        raise DataFormatError(f"unknown format {fmt!r}")
