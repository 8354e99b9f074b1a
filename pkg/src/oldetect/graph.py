"""Directed social graphs, attribute tables, k-shell and neighbourhoods.

Edges point from follower to followee: a line ``a b`` in an edge list means
user ``a`` follows user ``b``. Node IDs are dense integers assigned in the
order external IDs first appear.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import _backend
from .errors import DataIOError, ParseError, ValidationError

log = logging.getLogger(__name__)

ATTITUDE_COLUMNS = ("support", "reject", "irrelevant")
DATA_DIR_ENV = "OLD_DATA_DIR"


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _csr(rows: np.ndarray, cols: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR arrays for pre-sorted (rows, cols) pairs."""
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return _frozen(indptr), _frozen(np.ascontiguousarray(cols, dtype=np.int64))


@dataclass(frozen=True)
class IngestReport:
    lines: int = 0
    edges_read: int = 0
    duplicates: int = 0
    self_loops: int = 0


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Immutable directed unweighted graph with adjacency in both directions.

    ``out_*`` arrays hold followees, ``in_*`` arrays hold followers; neighbour
    lists are sorted ascending. Build instances with :meth:`from_edges` or
    :func:`load_edge_list`.
    """

    ids: tuple[str, ...]
    out_indptr: np.ndarray
    out_indices: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    ingest: IngestReport = field(default_factory=IngestReport)

    @classmethod
    def from_edges(cls, src, dst, ids: Sequence[str] | int, ingest: IngestReport | None = None) -> "DirectedGraph":
        """Build a graph from parallel source/target arrays.

        ``ids`` is either the external-ID sequence or a node count (IDs then
        default to ``"0".."n-1"``). Self-loops and duplicate edges are
        dropped; the counts end up in ``graph.ingest`` unless an explicit
        report is passed.
        """
        if isinstance(ids, (int, np.integer)):
            ids = tuple(str(i) for i in range(int(ids)))
        ids = tuple(ids)
        if len(set(ids)) != len(ids):
            raise ValidationError("external IDs must be unique")
        n = len(ids)
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise ValidationError("src and dst must have equal length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValidationError("edge endpoint outside [0, node_count)")
        read = int(src.size)
        loops = src == dst
        n_loops = int(loops.sum())
        src, dst = src[~loops], dst[~loops]
        key = np.unique(src * max(n, 1) + dst)
        n_dup = int(src.size - key.size)
        src, dst = key // max(n, 1), key % max(n, 1)
        out_indptr, out_indices = _csr(src, dst, n)
        order = np.lexsort((src, dst))
        in_indptr, in_indices = _csr(dst[order], src[order], n)
        if ingest is None:
            ingest = IngestReport(lines=read, edges_read=read, duplicates=n_dup, self_loops=n_loops)
        return cls(ids, out_indptr, out_indices, in_indptr, in_indices, ingest)

    @property
    def node_count(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return int(self.out_indices.size)

    @cached_property
    def index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.ids)}

    def node_id(self, external_id: str) -> int:
        try:
            return self.index[external_id]
        except KeyError:
            raise ValidationError(f"unknown node {external_id!r}") from None

    def _check(self, node: int) -> int:
        if not 0 <= node < self.node_count:
            raise ValidationError(f"node {node} outside [0, {self.node_count})")
        return int(node)

    def out_neighbors(self, node: int) -> np.ndarray:
        node = self._check(node)
        return self.out_indices[self.out_indptr[node]:self.out_indptr[node + 1]]

    def in_neighbors(self, node: int) -> np.ndarray:
        node = self._check(node)
        return self.in_indices[self.in_indptr[node]:self.in_indptr[node + 1]]

    @cached_property
    def out_degree(self) -> np.ndarray:
        return _frozen(np.diff(self.out_indptr))

    @cached_property
    def in_degree(self) -> np.ndarray:
        return _frozen(np.diff(self.in_indptr))

    def edges(self) -> np.ndarray:
        """``(E, 2)`` array of ``(follower, followee)`` sorted by follower."""
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), self.out_degree)
        return np.column_stack([src, self.out_indices])

    @cached_property
    def undirected(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, indices)`` of the undirected projection."""
        e = self.edges()
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        n = max(self.node_count, 1)
        key = np.unique(rows * n + cols)
        return _csr(key // n, key % n, self.node_count)

    @cached_property
    def undirected_degree(self) -> np.ndarray:
        return _frozen(np.diff(self.undirected[0]))

    def adjacency(self, direction: str) -> tuple[np.ndarray, np.ndarray]:
        """CSR for ``"out"``, ``"in"`` or ``"undirected"`` traversal."""
        if direction in ("out", "out-edges"):
            return self.out_indptr, self.out_indices
        if direction in ("in", "influence", "influence-edges"):
            return self.in_indptr, self.in_indices
        if direction == "undirected":
            return self.undirected
        raise ValidationError(f"unknown direction {direction!r}")


@dataclass(frozen=True)
class EdgeListFormat:
    """How to read an edge list.

    ``separator=None`` picks comma when a line contains one and whitespace
    otherwise. ``header=True`` skips the first non-comment line.
    """

    separator: str | None = None
    comment: str = "#"
    header: bool = False


def _open_text(source, what: str) -> tuple[TextIO, bool, str]:
    if isinstance(source, (str, os.PathLike)):
        try:
            return open(source, encoding="utf-8", newline=""), True, str(source)
        except OSError as exc:
            raise DataIOError(f"cannot read {what} {source}: {exc.strerror}") from exc
    return source, False, getattr(source, "name", "<stream>")


def load_edge_list(source, fmt: EdgeListFormat = EdgeListFormat()) -> DirectedGraph:
    """Parse a follower/followee edge list into a :class:`DirectedGraph`."""
    stream, owned, name = _open_text(source, "edge list")
    index: dict[str, int] = {}
    src: list[int] = []
    dst: list[int] = []
    lines = 0
    skip_header = fmt.header
    try:
        for lineno, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line or line.startswith(fmt.comment):
                continue
            lines += 1
            if skip_header:
                skip_header = False
                continue
            sep = fmt.separator if fmt.separator is not None else ("," if "," in line else None)
            tokens = [t.strip() for t in line.split(sep)]
            if len(tokens) != 2:
                raise ParseError(f"expected 2 fields, got {len(tokens)}", lineno, name)
            if not tokens[0] or not tokens[1]:
                raise ParseError("empty node ID", lineno, name)
            a = index.setdefault(tokens[0], len(index))
            b = index.setdefault(tokens[1], len(index))
            src.append(a)
            dst.append(b)
    finally:
        if owned:
            stream.close()
    g = DirectedGraph.from_edges(src, dst, tuple(index))
    report = IngestReport(lines=lines, edges_read=len(src),
                          duplicates=g.ingest.duplicates, self_loops=g.ingest.self_loops)
    if report.duplicates or report.self_loops:
        log.info("%s: dropped %d duplicate edges and %d self-loops", name, report.duplicates, report.self_loops)
    return DirectedGraph(g.ids, g.out_indptr, g.out_indices, g.in_indptr, g.in_indices, report)


def write_edge_list(graph: DirectedGraph, stream: TextIO) -> None:
    for a, b in graph.edges():
        stream.write(f"{graph.ids[a]} {graph.ids[b]}\n")


@dataclass(frozen=True, eq=False)
class AttributeTable:
    """Per-node attribute vectors, plus an optional attitude triple.

    ``attitude`` is ``(N, 3)`` with NaN rows for nodes without attitude data;
    the columns are (support, reject, irrelevant).
    """

    values: np.ndarray
    columns: tuple[str, ...]
    attitude: np.ndarray
    missing: tuple[int, ...] = ()
    unknown_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.values.ndim != 2 or self.attitude.shape != (self.values.shape[0], 3):
            raise ValidationError("attribute table shape mismatch")
        if not np.isfinite(self.values).all():
            raise ValidationError("attribute values must be finite")
        att = self.attitude[self.has_attitude]
        if att.size and ((att < 0) | (att > 1)).any():
            raise ValidationError("attitude components must lie in [0, 1]")

    @classmethod
    def from_array(cls, values, attitude=None, columns=None) -> "AttributeTable":
        values = np.array(values, dtype=np.float64, ndmin=2)
        n = values.shape[0]
        if attitude is None:
            attitude = np.full((n, 3), np.nan)
        attitude = np.array(attitude, dtype=np.float64).reshape(n, 3)
        if columns is None:
            columns = tuple(f"a{k}" for k in range(values.shape[1]))
        return cls(_frozen(values), tuple(columns), _frozen(attitude))

    @property
    def node_count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @cached_property
    def has_attitude(self) -> np.ndarray:
        return _frozen(~np.isnan(self.attitude).any(axis=1))

    def attitude_of(self, node: int) -> tuple[float, float, float] | None:
        if not self.has_attitude[node]:
            return None
        return tuple(float(x) for x in self.attitude[node])


def _to_float(cell: str) -> float:
    low = cell.strip().lower()
    if low == "true":
        return 1.0
    if low == "false":
        return 0.0
    return float(cell)


def load_attributes(source, graph: DirectedGraph, columns: Sequence[str] | None = None,
                    attitude_columns: Sequence[str] = ATTITUDE_COLUMNS, id_column: str | None = None) -> AttributeTable:
    """Read a CSV attribute file aligned to ``graph``.

    The external ID sits in ``id_column`` (default: the first column).
    ``columns`` selects which header columns form the attribute vector
    (default: all but the ID and attitude columns). Attitude columns, when all three are in
    the header, are additionally stored as the node's attitude triple; empty
    attitude cells leave that node without attitude data. Boolean cells
    ``True``/``False`` read as 1/0.
    """
    stream, owned, name = _open_text(source, "attribute file")
    try:
        reader = csv.reader(stream)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("attribute file has no header", 1, name) from None
        body = list(reader)
    finally:
        if owned:
            stream.close()
    if len(header) < 2:
        raise ParseError("attribute header needs an ID column and at least one value column", 1, name)
    if id_column is None:
        id_at = 0
    elif id_column in header:
        id_at = header.index(id_column)
    else:
        raise ValidationError(f"{name}: ID column {id_column!r} not in header")
    others = [h for k, h in enumerate(header) if k != id_at]
    has_att = all(c in header for c in attitude_columns)
    if columns is None:
        value_cols = [h for h in others if not (has_att and h in attitude_columns)]
    else:
        value_cols = list(columns)
    for c in value_cols:
        if c not in others:
            raise ValidationError(f"{name}: column {c!r} not in header")
    col_idx = [header.index(c) for c in value_cols]
    att_idx = [header.index(c) for c in attitude_columns] if has_att else None

    n = graph.node_count
    values = np.zeros((n, len(value_cols)))
    attitude = np.full((n, 3), np.nan)
    seen = np.zeros(n, dtype=bool)
    unknown: list[str] = []
    for lineno, row in enumerate(body, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno, name)
        ext = row[id_at].strip()
        node = graph.index.get(ext)
        if node is None:
            unknown.append(ext)
            continue
        try:
            values[node] = [_to_float(row[k]) for k in col_idx]
            if att_idx is not None and all(row[k].strip() for k in att_idx):
                attitude[node] = [_to_float(row[k]) for k in att_idx]
        except ValueError as exc:
            raise ParseError(f"non-numeric cell ({exc})", lineno, name) from None
        if not np.isfinite(values[node]).all():
            raise ParseError("non-finite attribute value", lineno, name)
        seen[node] = True
    missing = tuple(int(i) for i in np.flatnonzero(~seen))
    if unknown:
        log.warning("%s: skipped %d rows with IDs not in the graph", name, len(unknown))
    if missing:
        log.warning("%s: %d of %d graph nodes have no attribute row (zero-filled)", name, len(missing), n)
    return AttributeTable(_frozen(values), tuple(value_cols), _frozen(attitude), missing, tuple(unknown))


@dataclass(frozen=True, eq=False)
class NodeMetrics:
    core: np.ndarray
    in_degree: np.ndarray
    out_degree: np.ndarray
    degree: np.ndarray


def k_shell(graph: DirectedGraph) -> NodeMetrics:
    """Core numbers on the undirected projection (bucket peeling, O(E))."""
    indptr, indices = graph.undirected
    core = _backend.kernels().core_numbers(indptr, indices)
    return NodeMetrics(_frozen(np.asarray(core, dtype=np.int64)), graph.in_degree, graph.out_degree,
                       graph.undirected_degree)


def k_hop_neighborhood(graph: DirectedGraph, node: int, k: int = 3) -> frozenset[int]:
    """Nodes at undirected distance 1..k from ``node``, excluding ``node``."""
    node = graph._check(node)
    if k < 1:
        raise ValidationError("k must be >= 1")
    indptr, indices = graph.undirected
    seen = {node}
    frontier = [node]
    for _ in range(k):
        nxt = []
        for u in frontier:
            for v in indices[indptr[u]:indptr[u + 1]].tolist():
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        if not nxt:
            break
        frontier = nxt
    seen.discard(node)
    return frozenset(seen)


# ---------------------------------------------------------------------------
# snapshots


@dataclass(frozen=True, eq=False)
class Snapshot:
    label: str
    graph: DirectedGraph
    attributes: AttributeTable | None
    global_ids: np.ndarray  # local NodeId -> registry index


@dataclass(frozen=True, eq=False)
class SnapshotSeries:
    snapshots: tuple[Snapshot, ...]
    registry: tuple[str, ...]

    def __post_init__(self):
        labels = [s.label for s in self.snapshots]
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise ValidationError(f"duplicate snapshot labels: {dup}")

    def __len__(self):
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.snapshots)

    @classmethod
    def build(cls, items: Iterable[tuple[str, DirectedGraph, AttributeTable | None]]) -> "SnapshotSeries":
        registry: dict[str, int] = {}
        snaps = []
        for label, g, attrs in items:
            gid = np.array([registry.setdefault(x, len(registry)) for x in g.ids], dtype=np.int64)
            snaps.append(Snapshot(str(label), g, attrs, _frozen(gid)))
        return cls(tuple(snaps), tuple(registry))


def resolve_data_path(path: str | os.PathLike, base: str | os.PathLike | None = None) -> Path:
    """Locate ``path``: as given, then relative to ``base``, then under ``$OLD_DATA_DIR``.

    Returns the first existing candidate, or the first candidate when none
    exists so the caller's error message names a sensible path.
    """
    p = Path(path)
    cands = [p] if p.is_absolute() else ([Path(base) / p] if base is not None else []) + [p]
    env = os.environ.get(DATA_DIR_ENV)
    if env and not p.is_absolute():
        cands.append(Path(env) / p)
    for c in cands:
        if c.exists():
            return c
    return cands[0]


def load_snapshots(manifest, base: str | os.PathLike | None = None, fmt: EdgeListFormat | None = None,
                   attribute_columns: Sequence[str] | None = None, id_column: str | None = None) -> SnapshotSeries:
    """Load a snapshot series from a TOML manifest path or an already-parsed dict.

    The manifest holds an array of tables::

        [[snapshot]]
        label = "week40"
        edges = "week40.edges"
        attributes = "week40.csv"   # optional
    """
    if isinstance(manifest, (str, os.PathLike)):
        mpath = Path(manifest)
        try:
            text = mpath.read_text(encoding="utf-8")
        except OSError as exc:
            raise DataIOError(f"cannot read snapshot manifest {mpath}: {exc.strerror}") from exc
        from .config import parse_toml
        manifest = parse_toml(text, str(mpath))
        base = mpath.parent if base is None else base
    entries = manifest.get("snapshot") or manifest.get("snapshots")
    if not entries:
        raise ValidationError("snapshot manifest lists no [[snapshot]] entries")
    header = bool(manifest.get("header", False))
    fmt = fmt or EdgeListFormat(header=header, separator=manifest.get("separator"))
    labels = [str(e.get("label", "")) for e in entries]
    if any(not x for x in labels):
        raise ValidationError("every snapshot needs a label")
    if len(set(labels)) != len(labels):
        raise ValidationError(f"duplicate snapshot labels: {sorted({x for x in labels if labels.count(x) > 1})}")
    items = []
    for e, label in zip(entries, labels):
        epath = resolve_data_path(e["edges"], base)
        if not epath.exists():
            raise DataIOError(f"snapshot {label!r}: edge file not found: {epath}")
        g = load_edge_list(epath, fmt)
        attrs = None
        if e.get("attributes"):
            apath = resolve_data_path(e["attributes"], base)
            if not apath.exists():
                raise DataIOError(f"snapshot {label!r}: attribute file not found: {apath}")
            attrs = load_attributes(apath, g, attribute_columns, id_column=id_column)
        items.append((label, g, attrs))
    return SnapshotSeries.build(items)


# ---------------------------------------------------------------------------
# binary caches

_GRAPH_MAGIC = b"OLGR"
_ATTR_MAGIC = b"OLAT"


def _write_blob(stream, magic: bytes, header: dict, arrays: Sequence[np.ndarray]) -> None:
    import json
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    stream.write(magic)
    stream.write(np.array([1, len(head)], dtype="<u4").tobytes())
    stream.write(head)
    for a in arrays:
        stream.write(np.ascontiguousarray(a).astype(a.dtype.newbyteorder("<")).tobytes())


def _read_blob(stream, magic: bytes, name: str) -> tuple[dict, bytes]:
    import json
    data = stream.read()
    if data[:4] != magic:
        raise ParseError(f"not a {magic.decode()} file", source=name)
    version, hlen = np.frombuffer(data[4:12], dtype="<u4")
    if version != 1:
        raise ParseError(f"unsupported version {version}", source=name)
    return json.loads(data[12:12 + hlen].decode("utf-8")), data[12 + hlen:]


def graph_to_bytes(graph: DirectedGraph) -> bytes:
    buf = io.BytesIO()
    e = graph.edges()
    _write_blob(buf, _GRAPH_MAGIC, {"ids": list(graph.ids), "edges": int(e.shape[0]),
                                    "ingest": vars(graph.ingest)}, [e[:, 0].astype("<i8"), e[:, 1].astype("<i8")])
    return buf.getvalue()


def graph_from_bytes(data: bytes, name: str = "<graph>") -> DirectedGraph:
    head, rest = _read_blob(io.BytesIO(data), _GRAPH_MAGIC, name)
    m = head["edges"]
    arr = np.frombuffer(rest, dtype="<i8", count=2 * m)
    g = DirectedGraph.from_edges(arr[:m], arr[m:], head["ids"])
    return DirectedGraph(g.ids, g.out_indptr, g.out_indices, g.in_indptr, g.in_indices,
                         IngestReport(**head["ingest"]))


def attributes_to_bytes(attrs: AttributeTable) -> bytes:
    buf = io.BytesIO()
    _write_blob(buf, _ATTR_MAGIC, {"shape": list(attrs.values.shape), "columns": list(attrs.columns),
                                   "missing": list(attrs.missing), "unknown_ids": list(attrs.unknown_ids)},
                [attrs.values.astype("<f8"), attrs.attitude.astype("<f8")])
    return buf.getvalue()


def attributes_from_bytes(data: bytes, name: str = "<attributes>") -> AttributeTable:
    head, rest = _read_blob(io.BytesIO(data), _ATTR_MAGIC, name)
    n, d = head["shape"]
    vals = np.frombuffer(rest, dtype="<f8", count=n * d).reshape(n, d).copy()
    att = np.frombuffer(rest, dtype="<f8", count=n * 3, offset=8 * n * d).reshape(n, 3).copy()
    return AttributeTable(_frozen(vals), tuple(head["columns"]), _frozen(att),
                          tuple(head["missing"]), tuple(head["unknown_ids"]))

