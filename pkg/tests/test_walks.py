from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import make_graph
from oracles import undirected_sets
from oldetect.embeddings import WalkConfig, WalkCorpus, generate_walks
from oldetect.errors import ValidationError

# toy graph for the second-order bias: undirected edges 0-1, 1-2, 1-3, 2-3
TOY_EDGES = [(0, 1), (1, 2), (1, 3), (2, 3)]


def analytic_table(n, und_edges, p, q):
    """P(next | prev, cur) straight from the 1/p, 1, 1/q rule."""
    nb = undirected_sets(n, und_edges)
    table = {}
    for cur in range(n):
        for prev in nb[cur]:
            w = {}
            for x in nb[cur]:
                w[x] = 1 / p if x == prev else (1.0 if x in nb[prev] else 1 / q)
            tot = sum(w.values())
            table[(prev, cur)] = {x: v / tot for x, v in w.items()}
    return table


def test_hand_table():
    # prev=0, cur=1: return to 0 (w=4), 2 and 3 are two hops from 0 (w=1/4 each)
    t = analytic_table(4, TOY_EDGES, 0.25, 4.0)
    assert t[(0, 1)] == pytest.approx({0: 4 / 4.5, 2: 0.25 / 4.5, 3: 0.25 / 4.5})
    # prev=2, cur=1: return 4, 3 is adjacent to 2 (w=1), 0 is two hops (w=1/4)
    assert t[(2, 1)] == pytest.approx({2: 4 / 5.25, 3: 1 / 5.25, 0: 0.25 / 5.25})


def test_sink_and_cycle(backend):
    g = make_graph(3, [(1, 0)])
    c = generate_walks(g, WalkConfig(walk_length=5, num_walks=1))
    assert c.lengths[list(c.walks[:, 0]).index(0)] == 1
    assert c.truncated == 3  # node 1 stops after reaching sink 0, node 2 is isolated
    cyc = make_graph(5, [(i, (i + 1) % 5) for i in range(5)])
    c = generate_walks(cyc, WalkConfig(walk_length=5, num_walks=2))
    for w in c:
        assert w == [(w[0] + t) % 5 for t in range(5)]
    assert len(c) == 10 and c.truncated == 0


def _pairs_are_edges(g, corpus, direction):
    if direction == "out":
        ok = {tuple(e) for e in g.edges().tolist()}
    else:
        ok = {tuple(e) for e in g.edges().tolist()} | {(b, a) for a, b in g.edges().tolist()}
    return all((a, b) in ok for w in corpus for a, b in zip(w, w[1:]))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=1, max_size=40),
       st.sampled_from(["uniform", "biased"]), st.sampled_from(["out", "undirected"]), st.integers(0, 2**32))
def test_walk_validity(pairs, strategy, direction, seed):
    g = make_graph(10, pairs)
    cfg = WalkConfig(walk_length=12, num_walks=3, strategy=strategy, p=0.5, q=2.0, direction=direction,
                     rng_seed=seed)
    c = generate_walks(g, cfg)
    assert len(c) == 30
    assert sorted(Counter(w[0] for w in c).values()) == [3] * 10
    assert _pairs_are_edges(g, c, direction)
    assert (c.lengths <= 12).all()


def test_node2vec_transition_frequencies(backend):
    g = make_graph(4, TOY_EDGES)
    cfg = WalkConfig(walk_length=102, num_walks=250, strategy="biased", p=0.25, q=4.0, direction="undirected",
                     rng_seed=11)
    c = generate_walks(g, cfg)
    counts = Counter()
    for w in c:
        counts.update(zip(w, w[1:], w[2:]))
    steps = sum(counts.values())
    assert steps >= 100_000
    table = analytic_table(4, TOY_EDGES, 0.25, 4.0)
    for (prev, cur), dist in table.items():
        tot = sum(counts[(prev, cur, x)] for x in dist)
        assert tot > 1000
        for x, prob in dist.items():
            assert abs(counts[(prev, cur, x)] / tot - prob) < 0.02, (prev, cur, x)


def test_uniform_next_hop_chi2(backend):
    # hub 0 follows 1..5 and every leaf follows back, so walks pass through 0 repeatedly
    edges = [(0, i) for i in range(1, 6)] + [(i, 0) for i in range(1, 6)]
    g = make_graph(6, edges)
    c = generate_walks(g, WalkConfig(walk_length=41, num_walks=1000, rng_seed=3))
    nxt = Counter(b for w in c for a, b in zip(w, w[1:]) if a == 0)
    obs = np.array([nxt[i] for i in range(1, 6)])
    assert obs.sum() >= 100_000
    assert stats.chisquare(obs).pvalue > 0.01


def test_determinism_and_thread_independence():
    rng = np.random.default_rng(0)
    edges = [tuple(x) for x in rng.integers(0, 60, size=(300, 2))]
    g = make_graph(60, edges)
    cfg = WalkConfig(walk_length=20, num_walks=4, strategy="biased", p=0.25, q=4.0, rng_seed=99)
    a, b, t = generate_walks(g, cfg), generate_walks(g, cfg), generate_walks(g, cfg, threads=4)
    assert np.array_equal(a.walks, b.walks) and np.array_equal(a.walks, t.walks)
    other = generate_walks(g, WalkConfig(walk_length=20, num_walks=4, strategy="biased", p=0.25, q=4.0,
                                         rng_seed=100))
    assert not np.array_equal(a.walks, other.walks)


def test_config_validation():
    with pytest.raises(ValidationError):
        WalkConfig(p=0)
    with pytest.raises(ValidationError):
        WalkConfig(walk_length=0)
    with pytest.raises(ValidationError):
        WalkConfig(direction="in")
    with pytest.raises(ValidationError):
        generate_walks(make_graph(0, []), WalkConfig())


def test_corpus_from_sequences():
    c = WalkCorpus.from_sequences([[0, 1, 2], [3]])
    assert c.node_count == 4 and c.token_count == 4 and list(c) == [[0, 1, 2], [3]]
