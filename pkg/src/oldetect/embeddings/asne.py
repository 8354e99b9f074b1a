"""Shallow attributed embedding with early fusion of structure and attributes.

Node ``i`` is represented by ``h_i = [S_i ; A x_i]``: a free structure vector
concatenated with a linear map of its attribute vector. Training scores
directed edges ``i -> j`` with ``h_i . C_j`` against uniformly drawn
non-neighbours, optimised with Adam over edge minibatches.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..graph import AttributeTable, DirectedGraph
from .base import EmbeddingMatrix


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class _Adam:
    def __init__(self, shape, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps

    def step(self, param, grad, t, rows=None):
        """In-place update; ``rows`` restricts the update to touched rows (lazy Adam)."""
        if rows is None:
            m, v = self.m, self.v
            m *= self.b1
            m += (1 - self.b1) * grad
            v *= self.b2
            v += (1 - self.b2) * grad * grad
            param -= self.lr * (m / (1 - self.b1 ** t)) / (np.sqrt(v / (1 - self.b2 ** t)) + self.eps)
            return
        g = grad[rows]
        m = self.b1 * self.m[rows] + (1 - self.b1) * g
        v = self.b2 * self.v[rows] + (1 - self.b2) * g * g
        self.m[rows], self.v[rows] = m, v
        param[rows] -= self.lr * (m / (1 - self.b1 ** t)) / (np.sqrt(v / (1 - self.b2 ** t)) + self.eps)


def _sample_non_neighbors(edge_keys: np.ndarray, n: int, src: np.ndarray, k: int,
                          rng: np.random.Generator, rounds: int = 16) -> np.ndarray:
    """``k`` uniform nodes per source that are neither the source nor one of its followees.

    ``edge_keys`` is the sorted array ``follower * n + followee``. Draws that
    still collide after ``rounds`` resamples are kept (only possible for
    nodes following almost everyone).
    """
    out = rng.integers(0, n, size=(src.size, k))
    for _ in range(rounds):
        key = src[:, None] * n + out
        pos = np.minimum(np.searchsorted(edge_keys, key), max(edge_keys.size - 1, 0))
        bad = (out == src[:, None]) | (edge_keys[pos] == key)
        if not bad.any():
            break
        out[bad] = rng.integers(0, n, size=int(bad.sum()))
    return out


def train_asne_lite(graph: DirectedGraph, attrs: AttributeTable, d_struct: int = 20, d_attr_emb: int = 40,
                    epochs: int = 20, batch: int = 128, lr: float = 0.001, rng_seed: int = 0,
                    negatives: int = 5, scale_attributes: bool = True) -> EmbeddingMatrix:
    """Fit the fused embedding and return ``[S_i ; A x_i]`` for every node.

    ``scale_attributes`` divides each attribute column by its largest
    absolute value, which keeps zero vectors at zero and stops raw counts
    (follower numbers, view counts) from dominating the linear map.
    """
    if attrs.node_count != graph.node_count:
        raise ValidationError("attribute table is not aligned with the graph")
    if d_struct < 1 or d_attr_emb < 1:
        raise ValidationError("d_struct and d_attr_emb must be >= 1")
    if graph.edge_count == 0:
        raise ValidationError("graph has no edges: nothing to train on")
    if batch < 1 or epochs < 1 or lr <= 0:
        raise ValidationError("batch>=1, epochs>=1, lr>0 required")

    n = graph.node_count
    X = np.array(attrs.values, dtype=np.float64)
    if scale_attributes and X.size:
        scale = np.abs(X).max(axis=0)
        X = X / np.where(scale > 0, scale, 1.0)
    d_in = X.shape[1]
    D = d_struct + d_attr_emb

    rng = np.random.default_rng(np.random.SeedSequence(rng_seed))
    S = rng.normal(0.0, 0.1, size=(n, d_struct))
    A = rng.normal(0.0, np.sqrt(2.0 / (d_in + d_attr_emb)), size=(d_attr_emb, d_in)) if d_in else np.zeros((d_attr_emb, 0))
    C = rng.normal(0.0, 0.1, size=(n, D))
    opt_s, opt_a, opt_c = _Adam(S.shape, lr), _Adam(A.shape, lr), _Adam(C.shape, lr)

    edges = graph.edges()
    edge_keys = edges[:, 0] * n + edges[:, 1]
    t = 0
    losses = []
    for _ in range(epochs):
        order = rng.permutation(edges.shape[0])
        total = 0.0
        for lo in range(0, order.size, batch):
            e = edges[order[lo:lo + batch]]
            i, j = e[:, 0], e[:, 1]
            negs = _sample_non_neighbors(edge_keys, n, i, negatives, rng)
            B = i.size
            h = np.concatenate([S[i], X[i] @ A.T], axis=1)
            fp = np.einsum("bd,bd->b", h, C[j])
            fn = np.einsum("bd,bkd->bk", h, C[negs])
            total += float(np.logaddexp(0.0, -fp).sum() + np.logaddexp(0.0, fn).sum())
            gp = (_sigmoid(fp) - 1.0) / B
            gn = _sigmoid(fn) / B
            dh = gp[:, None] * C[j] + np.einsum("bk,bkd->bd", gn, C[negs])
            dC = np.zeros_like(C)
            np.add.at(dC, j, gp[:, None] * h)
            np.add.at(dC, negs.ravel(), (gn[:, :, None] * h[:, None, :]).reshape(-1, D))
            dS = np.zeros_like(S)
            np.add.at(dS, i, dh[:, :d_struct])
            dA = dh[:, d_struct:].T @ X[i]
            t += 1
            opt_s.step(S, dS, t, rows=np.unique(i))
            opt_c.step(C, dC, t, rows=np.unique(np.concatenate([j, negs.ravel()])))
            opt_a.step(A, dA, t)
        losses.append(total / edges.shape[0])
    H = np.concatenate([S, X @ A.T], axis=1)
    return EmbeddingMatrix(H, method="asne-lite", struct_dim=d_struct,
                           info={"epoch_loss": losses, "d_struct": d_struct, "d_attr_emb": d_attr_emb,
                                 "epochs": epochs, "batch": batch, "lr": lr, "negatives": negatives})
