"""Random-walk corpora: uniform (DeepWalk) and second-order biased (node2vec)."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import _backend
from ..errors import ValidationError
from ..graph import DirectedGraph

DIRECTIONS = ("out", "undirected")


@dataclass(frozen=True)
class WalkConfig:
    """Walk hyperparameters.

    ``strategy="uniform"`` ignores ``p``/``q``. ``direction`` is ``"out"``
    (follow edges toward followees) or ``"undirected"``.
    """

    walk_length: int = 80
    num_walks: int = 10
    window: int = 10
    strategy: str = "uniform"
    p: float = 1.0
    q: float = 1.0
    direction: str = "out"
    rng_seed: int = 0

    def __post_init__(self):
        if self.walk_length < 1 or self.num_walks < 1 or self.window < 1:
            raise ValidationError("walk_length, num_walks and window must be >= 1")
        if self.strategy not in ("uniform", "biased"):
            raise ValidationError(f"unknown walk strategy {self.strategy!r}")
        if not (self.p > 0 and self.q > 0):
            raise ValidationError("p and q must be > 0")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")


@dataclass(frozen=True, eq=False)
class WalkCorpus:
    """Walks stored row-wise, right-padded with -1 up to ``walk_length``."""

    walks: np.ndarray
    lengths: np.ndarray
    node_count: int

    @property
    def truncated(self) -> int:
        return int((self.lengths < self.walks.shape[1]).sum())

    @property
    def token_count(self) -> int:
        return int(self.lengths.sum())

    def __len__(self):
        return self.walks.shape[0]

    def __iter__(self):
        for row, n in zip(self.walks, self.lengths):
            yield row[:n].tolist()

    @classmethod
    def from_sequences(cls, seqs, node_count: int | None = None) -> "WalkCorpus":
        seqs = [list(s) for s in seqs]
        width = max((len(s) for s in seqs), default=1)
        walks = np.full((len(seqs), width), -1, dtype=np.int64)
        for k, s in enumerate(seqs):
            walks[k, :len(s)] = s
        lengths = np.array([len(s) for s in seqs], dtype=np.int64)
        if node_count is None:
            node_count = int(walks.max()) + 1 if walks.size else 0
        return cls(walks, lengths, node_count)


def _run_chunks(fn, n_rows: int, threads: int, *args):
    if threads <= 1 or n_rows < 2 * threads:
        return [fn(0, n_rows, *args)]
    bounds = np.linspace(0, n_rows, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(lambda k: fn(bounds[k], bounds[k + 1], *args), range(threads)))


def generate_walks(graph: DirectedGraph, cfg: WalkConfig, threads: int = 1) -> WalkCorpus:
    """Generate ``num_walks`` walks from every node.

    Each round visits the nodes in a fresh random order and draws from its
    own child of ``SeedSequence(rng_seed)``, so the corpus is identical for
    any ``threads`` value.
    """
    n = graph.node_count
    if n == 0:
        raise ValidationError("cannot walk an empty graph")
    indptr, indices = graph.adjacency(cfg.direction)
    k = _backend.kernels()
    L = cfg.walk_length
    walks = np.empty((cfg.num_walks * n, L), dtype=np.int64)
    lengths = np.empty(cfg.num_walks * n, dtype=np.int64)
    for r, ss in enumerate(np.random.SeedSequence(cfg.rng_seed).spawn(cfg.num_walks)):
        rng = np.random.default_rng(ss)
        starts = rng.permutation(n)
        uniforms = rng.random((n, max(L - 1, 0)))

        def chunk(lo, hi):
            if cfg.strategy == "uniform":
                return k.uniform_walks(indptr, indices, starts[lo:hi], L, uniforms[lo:hi])
            return k.biased_walks(indptr, indices, starts[lo:hi], L, 1.0 / cfg.p, 1.0 / cfg.q, uniforms[lo:hi])

        parts = _run_chunks(chunk, n, threads)
        walks[r * n:(r + 1) * n] = np.concatenate([p[0] for p in parts])
        lengths[r * n:(r + 1) * n] = np.concatenate([p[1] for p in parts])
    return WalkCorpus(walks, lengths, n)
