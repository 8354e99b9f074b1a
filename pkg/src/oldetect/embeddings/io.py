"""Embedding import/export: CSV (external ID + floats) and the OLEM binary format.

OLEM layout, little-endian: magic ``b"OLEM"``, version ``u32`` (=1),
node_count ``u64``, dim ``u32``, then ``node_count * dim`` float64 row-major.
"""

from __future__ import annotations

import csv
import io
import struct
from typing import Sequence

import numpy as np

from ..errors import ParseError, ValidationError
from .base import EmbeddingMatrix

MAGIC = b"OLEM"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")


def to_olem(emb: EmbeddingMatrix | np.ndarray) -> bytes:
    v = np.ascontiguousarray(getattr(emb, "vectors", emb), dtype="<f8")
    return _HEADER.pack(MAGIC, VERSION, v.shape[0], v.shape[1]) + v.tobytes()


def from_olem(data: bytes, method: str = "") -> EmbeddingMatrix:
    if len(data) < _HEADER.size:
        raise ParseError("truncated OLEM header")
    magic, version, n, d = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ParseError(f"unsupported OLEM version {version}")
    need = _HEADER.size + 8 * n * d
    if len(data) != need:
        raise ParseError(f"OLEM payload is {len(data)} bytes, expected {need}")
    v = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n, d).astype(np.float64)
    return EmbeddingMatrix(v, method=method)


def to_csv(emb: EmbeddingMatrix, ids: Sequence[str]) -> str:
    if len(ids) != emb.node_count:
        raise ValidationError("ID list does not match embedding rows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["external_id"] + [f"e{k}" for k in range(emb.dim)])
    for ext, row in zip(ids, emb.vectors):
        w.writerow([ext] + [repr(float(x)) for x in row])
    return buf.getvalue()


def from_csv(text: str, ids: Sequence[str] | None = None, method: str = "") -> tuple[EmbeddingMatrix, list[str]]:
    """Parse CSV embeddings; with ``ids`` given, rows are reordered to match them."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError("empty embedding CSV")
    dim = len(rows[0]) - 1
    names, vecs = [], []
    for lineno, r in enumerate(rows[1:], start=2):
        if not r:
            continue
        if len(r) != dim + 1:
            raise ParseError(f"expected {dim + 1} fields, got {len(r)}", lineno)
        try:
            vecs.append([float(x) for x in r[1:]])
        except ValueError as exc:
            raise ParseError(f"non-numeric cell ({exc})", lineno) from None
        names.append(r[0])
    v = np.array(vecs, dtype=np.float64).reshape(len(vecs), dim)
    if ids is not None:
        pos = {x: k for k, x in enumerate(names)}
        missing = [x for x in ids if x not in pos]
        if missing:
            raise ValidationError(f"{len(missing)} nodes lack embedding rows, e.g. {missing[:3]}")
        v = v[[pos[x] for x in ids]]
        names = list(ids)
    return EmbeddingMatrix(v, method=method), names
