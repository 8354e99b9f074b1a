"""Leader-set combination, attitude summaries and temporal persistence."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .graph import AttributeTable, DirectedGraph
from .ranking import RankingResult


def outlier_mask(in_degree, out_degree, percentile: float) -> np.ndarray:
    """True where both degrees fall strictly below their ``percentile`` thresholds."""
    if not 0 <= percentile < 100:
        raise ValidationError("percentile must lie in [0, 100)")
    ind = np.asarray(in_degree, dtype=np.float64)
    outd = np.asarray(out_degree, dtype=np.float64)
    if ind.size == 0 or percentile == 0:
        return np.zeros(ind.size, dtype=bool)
    return (ind < np.percentile(ind, percentile)) & (outd < np.percentile(outd, percentile))


def apply_outlier_filter(nodes: Iterable[int], graph: DirectedGraph, percentile: float) -> list[int]:
    """Drop nodes with too few followers *and* too few followees."""
    bad = outlier_mask(graph.in_degree, graph.out_degree, percentile)
    return [v for v in nodes if not bad[v]]


def merge_same_ranker(lists: Sequence[RankingResult], exclude=None) -> list[int]:
    """Borda merge of rankings produced by one ranker on different embeddings.

    Nodes in ``exclude`` (a boolean mask or an iterable of node IDs) are
    removed from every list first. In a filtered list of ``m`` nodes, the
    node at 1-based position ``p`` gets ``m - p`` points; candidates are
    ordered by total points, ties by ascending node ID.
    """
    if not lists:
        raise ValidationError("need at least one ranking to merge")
    n = lists[0].node_count
    if any(r.node_count != n for r in lists):
        raise ValidationError("rankings cover different graphs (node counts differ)")
    mask = np.zeros(n, dtype=bool)
    if exclude is not None:
        ex = np.asarray(exclude)
        if ex.dtype == bool:
            if ex.size != n:
                raise ValidationError("exclusion mask does not match node count")
            mask = ex
        else:
            mask[np.asarray(list(exclude), dtype=np.int64)] = True
    points = np.zeros(n, dtype=np.int64)
    for r in lists:
        kept = r.order[~mask[r.order]]
        points[kept] += kept.size - np.arange(1, kept.size + 1)
    cand = np.flatnonzero(~mask)
    order = np.lexsort((cand, -points[cand]))
    return cand[order].tolist()


@dataclass(frozen=True)
class CombineConfig:
    n: int = 15
    ratio: tuple[int, int] = (1, 2)
    outlier_percentile: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "ratio", tuple(int(r) for r in self.ratio))
        if len(self.ratio) != 2 or min(self.ratio) < 1:
            raise ValidationError("ratio needs two positive integers")
        if self.n < sum(self.ratio):
            raise ValidationError(f"n={self.n} is below the ratio's minimum of {sum(self.ratio)}")
        if not 0 <= self.outlier_percentile < 100:
            raise ValidationError("outlier_percentile must lie in [0, 100)")

    @property
    def asnerank_quota(self) -> int:
        a, b = self.ratio
        return self.n * a // (a + b)


@dataclass(frozen=True)
class CombinedLeaders:
    asnerank_part: tuple[int, ...]
    nlcrank_part: tuple[int, ...]
    provenance: Mapping[int, tuple[str, ...]] = field(default_factory=dict)

    @property
    def all(self) -> tuple[int, ...]:
        return self.asnerank_part + self.nlcrank_part


def _provenance(nodes, lists: Sequence[RankingResult], depth: int) -> dict[int, tuple[str, ...]]:
    tops = [(r.params.get("embedding") or r.label, set(r.order[:depth].tolist())) for r in lists]
    return {v: tuple(name for name, top in tops if v in top) for v in nodes}


def combine_leaders(asnerank_merged: Sequence[int], nlcrank_merged: Sequence[int], cfg: CombineConfig = CombineConfig(),
                    asnerank_lists: Sequence[RankingResult] = (), nlcrank_lists: Sequence[RankingResult] = ()) -> CombinedLeaders:
    """Split ``cfg.n`` leader slots between the two merged candidate lists.

    The ASNERank side fills ``floor(n * r1 / (r1 + r2))`` slots, the NLCRank
    side the rest, skipping nodes already taken by the ASNERank side.
    Provenance names the embeddings whose own top-``n`` list contains the
    node (within its ranker family).
    """
    qa = cfg.asnerank_quota
    qn = cfg.n - qa
    a_part = list(dict.fromkeys(asnerank_merged))[:qa]
    if len(a_part) < qa:
        raise ValidationError(f"ASNERank side has {len(a_part)} candidates after filtering, needs {qa}")
    taken = set(a_part)
    n_part = []
    for v in nlcrank_merged:
        if len(n_part) == qn:
            break
        if v not in taken:
            taken.add(v)
            n_part.append(v)
    if len(n_part) < qn:
        raise ValidationError(f"NLCRank side has {len(n_part)} distinct candidates after filtering, needs {qn}")
    prov = _provenance(a_part, asnerank_lists, cfg.n)
    prov.update(_provenance(n_part, nlcrank_lists, cfg.n))
    return CombinedLeaders(tuple(a_part), tuple(n_part), prov)


@dataclass(frozen=True)
class AttitudeSummary:
    support: float
    reject: float
    irrelevant: float
    count: int

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.support, self.reject, self.irrelevant)


def attitude_summary(nodes: Iterable[int], attrs: AttributeTable) -> AttitudeSummary:
    """Mean support/reject/irrelevant over a node set."""
    nodes = sorted(set(int(v) for v in nodes))
    if not nodes:
        raise ValidationError("empty node set")
    idx = np.array(nodes, dtype=np.int64)
    lacking = idx[~attrs.has_attitude[idx]]
    if lacking.size:
        raise ValidationError(f"nodes without attitude data: {lacking.tolist()}")
    m = attrs.attitude[idx].sum(axis=0) / idx.size
    return AttitudeSummary(float(m[0]), float(m[1]), float(m[2]), int(idx.size))


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


@dataclass(frozen=True)
class PersistenceReport:
    labels: tuple[str, ...]
    adjacent_jaccard: tuple[float, ...]
    appearances: Mapping[str, int]
    ranks: Mapping[str, Mapping[str, int | None]]


def temporal_overlap(series: Sequence[tuple[str, RankingResult, Sequence[str]]], k: int) -> PersistenceReport:
    """Persistence of top-``k`` leaders across snapshots.

    ``series`` holds ``(label, ranking, external IDs of that snapshot)``.
    For every external ID that reaches a top-``k`` list the report gives the
    number of such appearances and its 1-based rank in each snapshot it
    belongs to (``None`` where the user is absent from the snapshot).
    """
    if len(series) < 2:
        raise ValidationError("temporal overlap needs at least two snapshots")
    tops = []
    for label, r, ids in series:
        if k > r.node_count:
            raise ValidationError(f"k={k} exceeds node count {r.node_count} of snapshot {label!r}")
        tops.append([ids[v] for v in r.order[:k].tolist()])
    labels = tuple(s[0] for s in series)
    jac = tuple(jaccard(tops[t], tops[t + 1]) for t in range(len(tops) - 1))
    users = list(dict.fromkeys(x for top in tops for x in top))
    appear = {u: sum(u in set(top) for top in tops) for u in users}
    lookup = [{x: i for i, x in enumerate(ids)} for _, _, ids in series]
    ranks: dict[str, dict[str, int | None]] = {}
    for u in users:
        ranks[u] = {}
        for (label, r, _), index in zip(series, lookup):
            node = index.get(u)
            ranks[u][label] = None if node is None else int(r.position[node]) + 1
    return PersistenceReport(labels, jac, appear, ranks)


# ---------------------------------------------------------------------------
# export


def combined_to_csv(leaders: CombinedLeaders, ids: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["part", "rank", "external_id", "provenance"])
    for part, nodes in (("asnerank", leaders.asnerank_part), ("nlcrank", leaders.nlcrank_part)):
        for r, v in enumerate(nodes, start=1):
            w.writerow([part, r, ids[v], ";".join(leaders.provenance.get(v, ()))])
    return buf.getvalue()


def attitudes_to_csv(groups: Mapping[str, AttitudeSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["group", "support", "reject", "irrelevant"])
    for name, s in groups.items():
        w.writerow([name, repr(s.support), repr(s.reject), repr(s.irrelevant)])
    return buf.getvalue()


def persistence_to_csv(report: PersistenceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["external_id", "appearances"] + [f"rank_{x}" for x in report.labels])
    for u, cnt in report.appearances.items():
        w.writerow([u, cnt] + ["" if report.ranks[u][x] is None else report.ranks[u][x] for x in report.labels])
    return buf.getvalue()


def jaccard_to_csv(report: PersistenceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["from", "to", "jaccard"])
    for t, j in enumerate(report.adjacent_jaccard):
        w.writerow([report.labels[t], report.labels[t + 1], repr(j)])
    return buf.getvalue()
