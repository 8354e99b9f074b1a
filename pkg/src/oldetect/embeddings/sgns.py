"""Skip-gram with negative sampling over walk corpora."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import _backend
from ..errors import ValidationError
from .base import EmbeddingMatrix
from .walks import WalkCorpus

log = logging.getLogger(__name__)

NOISE_POWER = 0.75
CHUNK_TOKENS = 200_000


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss(v, u_pos, u_negs) -> float:
    """Negative-sampling loss for one (center, context, negatives) triple.

    ``-log s(u_pos . v) - sum_k log s(-u_k . v)`` with ``s`` the logistic
    function.
    """
    u_negs = np.atleast_2d(u_negs)
    return float(np.logaddexp(0.0, -(u_pos @ v)) + np.logaddexp(0.0, u_negs @ v).sum())


def sgns_grad(v, u_pos, u_negs):
    """Analytic gradient of :func:`sgns_loss` w.r.t. ``(v, u_pos, u_negs)``."""
    u_negs = np.atleast_2d(u_negs)
    gp = _sigmoid(u_pos @ v) - 1.0
    gn = _sigmoid(u_negs @ v)
    dv = gp * u_pos + gn @ u_negs
    return dv, gp * v, gn[:, None] * v[None, :]


def noise_distribution(corpus: WalkCorpus, power: float = NOISE_POWER) -> np.ndarray:
    counts = np.bincount(corpus.walks[corpus.walks >= 0], minlength=corpus.node_count).astype(np.float64)
    w = counts ** power
    return w / w.sum()


def context_pairs(walks: np.ndarray, lengths: np.ndarray, window: int, rng: np.random.Generator):
    """(center, context, token_index) triples with a per-token reduced window.

    Every token draws ``b`` uniformly from ``1..window`` and pairs with the
    tokens at offsets ``1..b`` on both sides. Pairs come out ordered by
    center token, then by offset.
    """
    nw, L = walks.shape
    b = rng.integers(1, window + 1, size=(nw, L))
    pos = np.arange(L)
    valid = pos[None, :] < lengths[:, None]
    centers, contexts, keys = [], [], []
    tok = np.arange(nw * L).reshape(nw, L)
    for off in range(1, window + 1):
        for sign, slot in ((1, 2 * off - 1), (-1, 2 * off - 2)):
            if sign > 0:
                ok = valid[:, :L - off] & valid[:, off:] & (b[:, :L - off] >= off)
                c, o, t = walks[:, :L - off][ok], walks[:, off:][ok], tok[:, :L - off][ok]
            else:
                ok = valid[:, off:] & (b[:, off:] >= off)
                c, o, t = walks[:, off:][ok], walks[:, :L - off][ok], tok[:, off:][ok]
            centers.append(c)
            contexts.append(o)
            keys.append(t * (2 * window) + slot)
    if not centers:
        e = np.empty(0, dtype=np.int64)
        return e, e, e
    c, o, k = np.concatenate(centers), np.concatenate(contexts), np.concatenate(keys)
    order = np.argsort(k, kind="stable")
    return c[order], o[order], k[order] // (2 * window)


def train_sgns(corpus: WalkCorpus, dim: int = 64, window: int = 10, negatives: int = 5, epochs: int = 1,
               lr: float = 0.025, rng_seed: int = 0, threads: int = 1) -> EmbeddingMatrix:
    """Train skip-gram embeddings with negative sampling by plain SGD.

    The learning rate decays linearly from ``lr`` to ``lr / 100`` over all
    epochs; noise samples follow corpus frequency to the 0.75. With
    ``threads > 1`` the pair stream of each chunk is split across threads
    that update the shared matrices without locks, which gives up
    bit-reproducibility.

    The returned matrix carries ``info["epoch_loss"]``, the mean per-pair
    loss of every epoch.
    """
    if len(corpus) == 0 or corpus.token_count == 0:
        raise ValidationError("empty walk corpus")
    if dim < 2:
        raise ValidationError("dim must be >= 2")
    if window < 1 or negatives < 0 or epochs < 1 or lr <= 0:
        raise ValidationError("window>=1, negatives>=0, epochs>=1, lr>0 required")
    n = corpus.node_count
    rng = np.random.default_rng(np.random.SeedSequence(rng_seed))
    w_in = (rng.random((n, dim)) - 0.5) / dim
    w_out = np.zeros((n, dim))
    cdf = np.cumsum(noise_distribution(corpus))
    cdf[-1] = 1.0
    kern = _backend.kernels()

    L = corpus.walks.shape[1]
    rows_per_chunk = max(1, CHUNK_TOKENS // max(L, 1))
    tokens_before = np.concatenate([[0], np.cumsum(corpus.lengths)])
    total = float(corpus.token_count * epochs)
    lr_min = lr / 100.0
    epoch_loss = []
    for epoch in range(epochs):
        loss_sum, pair_count = 0.0, 0
        for lo in range(0, len(corpus), rows_per_chunk):
            hi = min(lo + rows_per_chunk, len(corpus))
            walks, lengths = corpus.walks[lo:hi], corpus.lengths[lo:hi]
            c, o, tok = context_pairs(walks, lengths, window, rng)
            if c.size == 0:
                continue
            # progress by token position within the whole run
            row, col = np.divmod(tok, L)
            done = epoch * corpus.token_count + tokens_before[lo + row] + col
            lrs = np.maximum(lr - (lr - lr_min) * done / total, lr_min)
            neg_u = rng.random((c.size, negatives))
            if threads > 1 and c.size >= 1000 * threads:
                bounds = np.linspace(0, c.size, threads + 1).astype(int)
                with ThreadPoolExecutor(threads) as ex:
                    parts = ex.map(lambda k: kern.sgns_pairs(
                        w_in, w_out, c[bounds[k]:bounds[k + 1]], o[bounds[k]:bounds[k + 1]],
                        neg_u[bounds[k]:bounds[k + 1]], cdf, lrs[bounds[k]:bounds[k + 1]]), range(threads))
                    loss_sum += sum(parts)
            else:
                loss_sum += kern.sgns_pairs(w_in, w_out, c, o, neg_u, cdf, lrs)
            pair_count += c.size
        epoch_loss.append(loss_sum / max(pair_count, 1))
        log.debug("sgns epoch %d: mean loss %.6f over %d pairs", epoch, epoch_loss[-1], pair_count)
    return EmbeddingMatrix(w_in, method="sgns",
                           info={"epoch_loss": epoch_loss, "dim": dim, "window": window,
                                 "negatives": negatives, "epochs": epochs, "lr": lr})
