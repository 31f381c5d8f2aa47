"""FMAG1 binary field snapshots, JSON sidecars and CSV tables.

FMAG1 layout (little endian): magic ``b"FMAG1"``, n (int64), h, center[3], s, p
(float64), then n^3 interleaved (re, im) float64 pairs in C order.
"""
from __future__ import annotations

import csv
import json
import math
import os
import struct
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import Field, Grid

MAGIC = b"FMAG1"
_HEADER = struct.Struct("<5sq6d")


class FormatError(ValueError):
    """Malformed result file; ``offset`` is the byte (or line) where parsing failed."""

    def __init__(self, path, offset: int, message: str):
        super().__init__(f"{path}: offset {offset}: {message}")
        self.path = str(path)
        self.offset = offset


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_field(path, u: Field, s: float = math.nan, p: float = math.nan):
    path = Path(path)
    g = u.grid
    head = _HEADER.pack(MAGIC, g.n, g.h, *g.center, float(s), float(p))
    body = np.ascontiguousarray(u.values, dtype="<c16").tobytes()
    _atomic_write(path, head + body)


def read_field(path):
    """Return (field, s, p)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(path, len(data), f"file shorter than the {_HEADER.size}-byte header")
    magic, n, h, cx, cy, cz, s, p = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(path, 0, f"bad magic {magic!r}")
    if n < 4 or not h > 0:
        raise FormatError(path, 5, f"invalid grid header n={n}, h={h}")
    want = _HEADER.size + 16 * n ** 3
    if len(data) != want:
        raise FormatError(path, min(len(data), want), f"expected {want} bytes, found {len(data)}")
    vals = np.frombuffer(data, dtype="<c16", offset=_HEADER.size).reshape((n, n, n))
    try:
        field = Field(Grid(n, h, (cx, cy, cz)), vals)
    except ValueError as exc:
        raise FormatError(path, _HEADER.size, str(exc)) from None
    return field, s, p


def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    _atomic_write(Path(path), text.encode("utf-8"))


def read_json(path):
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        raise FormatError(path, 0, "empty file")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(path, exc.pos, exc.msg) from None


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    os.replace(tmp, path)


def read_csv(path, required: Optional[Sequence[str]] = None):
    """Return (header, rows as lists of floats)."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(path, 0, "empty file")
    header = rows[0]
    if required and list(header[:len(required)]) != list(required):
        raise FormatError(path, 1, f"expected columns {list(required)}, found {header}")
    out = []
    for line, row in enumerate(rows[1:], start=2):
        try:
            out.append([float(x) for x in row])
        except ValueError:
            raise FormatError(path, line, f"non-numeric row {row}") from None
    return header, out
