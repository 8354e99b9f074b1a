"""Node embeddings: random-walk corpora, skip-gram training, ASNE-lite."""

from .asne import train_asne_lite
from .base import EmbeddingMatrix
from .sgns import train_sgns
from .walks import WalkConfig, WalkCorpus, generate_walks

__all__ = ["EmbeddingMatrix", "WalkConfig", "WalkCorpus", "generate_walks", "train_sgns", "train_asne_lite",
           "deepwalk", "node2vec"]


def deepwalk(graph, walk_length=80, num_walks=10, window=10, dim=64, negatives=5, epochs=1, lr=0.025,
             direction="out", rng_seed=0, threads=1) -> EmbeddingMatrix:
    """Uniform random walks followed by skip-gram training."""
    cfg = WalkConfig(walk_length, num_walks, window, "uniform", direction=direction, rng_seed=rng_seed)
    corpus = generate_walks(graph, cfg, threads=threads)
    emb = train_sgns(corpus, dim, window, negatives, epochs, lr, rng_seed=rng_seed, threads=threads)
    return EmbeddingMatrix(emb.vectors, "deepwalk", info=dict(emb.info, truncated_walks=corpus.truncated))


def node2vec(graph, walk_length=80, num_walks=10, window=10, dim=128, p=0.25, q=4.0, negatives=5, epochs=1,
             lr=0.025, direction="out", rng_seed=0, threads=1) -> EmbeddingMatrix:
    """Second-order biased walks followed by skip-gram training."""
    cfg = WalkConfig(walk_length, num_walks, window, "biased", p, q, direction, rng_seed)
    corpus = generate_walks(graph, cfg, threads=threads)
    emb = train_sgns(corpus, dim, window, negatives, epochs, lr, rng_seed=rng_seed, threads=threads)
    return EmbeddingMatrix(emb.vectors, "node2vec", info=dict(emb.info, truncated_walks=corpus.truncated))
