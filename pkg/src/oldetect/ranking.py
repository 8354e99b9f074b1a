"""Influence rankings: NLCRank, ASNERank and LeaderRank.

Every ranker returns a :class:`RankingResult`, a total order over all nodes
(score descending, ties by ascending node ID).
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _backend
from .embeddings.base import EmbeddingMatrix
from .errors import ConvergenceError, ValidationError
from .graph import DirectedGraph, NodeMetrics, k_shell

NEIGHBORHOOD_HOPS = 3


@dataclass(frozen=True, eq=False)
class RankingResult:
    order: np.ndarray
    scores: np.ndarray
    method: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_scores(cls, scores, method: str, params: dict | None = None) -> "RankingResult":
        scores = np.asarray(scores, dtype=np.float64)
        if not np.isfinite(scores).all():
            raise ValidationError(f"{method}: non-finite scores")
        order = np.lexsort((np.arange(scores.size), -scores))
        return cls(order, scores[order], method, dict(params or {}))

    @property
    def node_count(self) -> int:
        return self.order.size

    @property
    def label(self) -> str:
        emb = self.params.get("embedding")
        return f"{emb}+{self.method}" if emb else self.method

    @cached_property
    def position(self) -> np.ndarray:
        """0-based rank position of every node."""
        pos = np.empty_like(self.order)
        pos[self.order] = np.arange(self.order.size)
        return pos

    def score_of(self, node: int) -> float:
        return float(self.scores[self.position[node]])

    def by_node(self) -> np.ndarray:
        out = np.empty_like(self.scores)
        out[self.order] = self.scores
        return out

    def items(self) -> list[tuple[int, float]]:
        return list(zip(self.order.tolist(), self.scores.tolist()))


@dataclass(frozen=True)
class PageRankParams:
    damping: float = 0.85
    tolerance: float = 1e-10
    max_iter: int = 1000

    def __post_init__(self):
        if not 0 < self.damping < 1:
            raise ValidationError("damping must lie in (0, 1)")
        if self.tolerance <= 0 or self.max_iter < 1:
            raise ValidationError("tolerance > 0 and max_iter >= 1 required")


def _aligned(graph: DirectedGraph, emb) -> np.ndarray:
    v = np.ascontiguousarray(getattr(emb, "vectors", emb), dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != graph.node_count:
        raise ValidationError(f"embedding has {v.shape[0] if v.ndim else 0} rows, graph has {graph.node_count} nodes")
    return v


def nlc_scores(graph: DirectedGraph, emb, metrics: NodeMetrics | None = None, hops: int = NEIGHBORHOOD_HOPS,
               threads: int = 1) -> np.ndarray:
    """Per-node ``sum_{j in G(i)} Ks_i * exp(-|x_i - x_j|^2)`` with G(i) the ``hops``-neighbourhood."""
    x = _aligned(graph, emb)
    if metrics is None:
        metrics = k_shell(graph)
    if metrics.core.size != graph.node_count:
        raise ValidationError("node metrics do not match the graph")
    indptr, indices = graph.undirected
    core = np.ascontiguousarray(metrics.core, dtype=np.int64)
    kern = _backend.kernels()
    nodes = np.arange(graph.node_count, dtype=np.int64)
    if threads <= 1 or nodes.size < 64:
        return kern.nlc_scores(indptr, indices, core, x, hops, nodes)
    parts = np.array_split(nodes, threads)
    with ThreadPoolExecutor(threads) as ex:
        return np.concatenate(list(ex.map(lambda p: kern.nlc_scores(indptr, indices, core, x, hops, p), parts)))


def nlc_rank(graph: DirectedGraph, emb, metrics: NodeMetrics | None = None, hops: int = NEIGHBORHOOD_HOPS,
             threads: int = 1) -> RankingResult:
    """Rank by k-shell-weighted Gaussian similarity over the 3-hop neighbourhood."""
    scores = nlc_scores(graph, emb, metrics, hops, threads)
    return RankingResult.from_scores(scores, "nlcrank", {"hops": hops, "embedding": getattr(emb, "method", "") or None})


def asne_transition(graph: DirectedGraph, emb, normalize: bool = False) -> sp.csr_matrix:
    """Row-stochastic matrix over follow edges with weights ``exp(u_j . u_i)``.

    Each row is shifted by its largest logit before exponentiating, so the
    result is the row softmax of the dot products. Rows of nodes without
    followees are empty.
    """
    x = _aligned(graph, emb)
    if normalize:
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        x = x / np.where(norms > 0, norms, 1.0)
    n = graph.node_count
    e = graph.edges()
    logits = np.einsum("ed,ed->e", x[e[:, 0]], x[e[:, 1]])
    deg = graph.out_degree
    rows = np.flatnonzero(deg)
    if logits.size:
        rowmax = np.maximum.reduceat(logits, graph.out_indptr[rows])
        w = np.exp(logits - np.repeat(rowmax, deg[rows]))
        rowsum = np.add.reduceat(w, graph.out_indptr[rows])
        w /= np.repeat(rowsum, deg[rows])
    else:
        w = logits
    return sp.csr_matrix((w, graph.out_indices, graph.out_indptr), shape=(n, n))


def pagerank_power(P: sp.csr_matrix, params: PageRankParams = PageRankParams()) -> tuple[np.ndarray, int]:
    """Solve ``r = (1-d)/N + d (P^T r + dangling mass / N)`` by power iteration."""
    n = P.shape[0]
    if n == 0:
        return np.zeros(0), 0
    d = params.damping
    dangling = np.asarray(P.sum(axis=1)).ravel() == 0
    PT = P.T.tocsr()
    r = np.full(n, 1.0 / n)
    resid = np.inf
    for it in range(1, params.max_iter + 1):
        nxt = d * (PT @ r + r[dangling].sum() / n) + (1.0 - d) / n
        nxt /= nxt.sum()
        resid = float(np.abs(nxt - r).sum())
        r = nxt
        if resid < params.tolerance:
            return r, it
    raise ConvergenceError("PageRank power iteration did not converge", resid, params.max_iter)


def asne_rank(graph: DirectedGraph, emb, params: PageRankParams = PageRankParams(),
              normalize: bool = False) -> RankingResult:
    """PageRank over follow edges weighted by ``exp(u_j . u_i)`` (``normalize`` -> cosine)."""
    P = asne_transition(graph, emb, normalize)
    r, iters = pagerank_power(P, params)
    return RankingResult.from_scores(r, "asnerank", {
        "damping": params.damping, "tolerance": params.tolerance, "iterations": iters,
        "normalize": normalize, "embedding": getattr(emb, "method", "") or None})


def leader_rank_scores(graph: DirectedGraph, tolerance: float = 1e-10, max_iter: int = 10000) -> tuple[np.ndarray, float, int]:
    """LeaderRank fixed point: ``(score per node, ground score, iterations)``.

    A ground node linked both ways to every node is added, every real node
    starts with score 1 and the ground with 0, and scores are pushed along
    out-edges split evenly until the L1 change drops below ``tolerance``.
    Final scores add an even share of the ground node's score.
    """
    n = graph.node_count
    if n == 0:
        raise ValidationError("LeaderRank needs a non-empty graph")
    if graph.edge_count == 0:
        # augmented walk is the periodic star g <-> i; its stationary mass is
        # N/2 on g and 1/2 on each node, so every final score equals 1
        return np.ones(n), n / 2.0, 0
    A = sp.csr_matrix((np.ones(graph.edge_count), graph.out_indices, graph.out_indptr), shape=(n, n))
    AT = A.T.tocsr()
    share = 1.0 / (graph.out_degree + 1.0)
    s = np.ones(n)
    g = 0.0
    resid = np.inf
    for it in range(1, max_iter + 1):
        x = s * share
        s_new = AT @ x + g / n
        g_new = float(x.sum())
        resid = float(np.abs(s_new - s).sum() + abs(g_new - g))
        s, g = s_new, g_new
        if resid < tolerance:
            return s + g / n, g, it
    raise ConvergenceError("LeaderRank did not converge", resid, max_iter)


def leader_rank(graph: DirectedGraph, tolerance: float = 1e-10, max_iter: int = 10000) -> RankingResult:
    scores, ground, iters = leader_rank_scores(graph, tolerance, max_iter)
    return RankingResult.from_scores(scores, "leaderrank", {"tolerance": tolerance, "iterations": iters,
                                                            "ground_score": ground})


def top_n(result: RankingResult, n: int) -> list[int]:
    if not 1 <= n <= result.node_count:
        raise ValidationError(f"n={n} outside [1, {result.node_count}]")
    return result.order[:n].tolist()


# ---------------------------------------------------------------------------
# export


def ranking_to_csv(result: RankingResult, ids: Sequence[str], n: int | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "external_id", "score", "method"])
    k = result.node_count if n is None else n
    for r, (node, score) in enumerate(zip(result.order[:k].tolist(), result.scores[:k].tolist()), start=1):
        w.writerow([r, ids[node], repr(score), result.label])
    return buf.getvalue()


def ranking_to_json(result: RankingResult, ids: Sequence[str], n: int | None = None) -> str:
    k = result.node_count if n is None else n
    doc = {"method": result.label, "params": result.params,
           "ranking": [{"rank": r, "external_id": ids[node], "score": score}
                       for r, (node, score) in enumerate(zip(result.order[:k].tolist(),
                                                             result.scores[:k].tolist()), start=1)]}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def ranking_from_csv(text: str, graph: DirectedGraph) -> RankingResult:
    """Inverse of :func:`ranking_to_csv` for a full ranking."""
    rows = list(csv.DictReader(io.StringIO(text)))
    if len(rows) != graph.node_count:
        raise ValidationError(f"ranking has {len(rows)} rows, graph has {graph.node_count} nodes")
    scores = np.empty(graph.node_count)
    seen = np.zeros(graph.node_count, dtype=bool)
    for r in rows:
        node = graph.node_id(r["external_id"])
        scores[node] = float(r["score"])
        seen[node] = True
    if not seen.all():
        raise ValidationError("ranking does not cover every node")
    label = rows[0]["method"] if rows else ""
    emb, _, method = label.rpartition("+")
    return RankingResult.from_scores(scores, method, {"embedding": emb or None})
