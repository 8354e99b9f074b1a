import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_graph
from oracles import random_edges
from oldetect.errors import ValidationError
from oldetect.sir import SIRConfig, evaluate_seeds, run_sir, summary_to_csv, summary_to_json


def chain(L):
    # node i+1 follows node i, so influence runs 0 -> 1 -> ... -> L-1
    return make_graph(L, [(i + 1, i) for i in range(L - 1)])


def test_tau_zero_keeps_seeds(backend):
    g = make_graph(6, random_edges(np.random.default_rng(0), 6, 0.5))
    t = run_sir(g, SIRConfig(tau=0.0, gamma=1.0, seeds=(1, 4)))
    assert np.flatnonzero(t.ever).tolist() == [1, 4]
    assert t.S.tolist() == [4, 4] and t.I.tolist() == [2, 0] and t.R.tolist() == [0, 2]


def test_tau_one_wave(backend):
    L = 9
    t = run_sir(chain(L), SIRConfig(tau=1.0, gamma=1.0, seeds=(0,)))
    assert t.final_infected_ever == L
    assert t.I.tolist() == [1] * L + [0]
    assert np.diff(t.infected_ever_curve).tolist() == [1] * (L - 1) + [0]


def test_seed_at_tail_does_not_travel_upstream():
    t = run_sir(chain(5), SIRConfig(tau=1.0, seeds=(4,)))
    assert t.final_infected_ever == 1
    u = run_sir(chain(5), SIRConfig(tau=1.0, seeds=(4,), direction="undirected"))
    assert u.final_infected_ever == 5


def test_single_edge_binomial(backend):
    g = make_graph(2, [(1, 0)])
    s = evaluate_seeds(g, SIRConfig(tau=0.5, gamma=1.0, seeds=(0,), repetitions=10_000, rng_seed=2))
    frac = float((s.finals == 2).mean())
    assert abs(frac - 0.5) <= 3 * np.sqrt(0.25 / 10_000)


@pytest.mark.parametrize("gamma", [1.0, 0.4])
def test_coupling_monotone_in_tau(gamma):
    rng = np.random.default_rng(8)
    g = make_graph(120, random_edges(rng, 120, 0.03))
    taus = [0.0, 0.05, 0.1, 0.2, 0.35, 0.6, 1.0]
    for rep in range(100):
        prev = None
        for tau in taus:
            ever = run_sir(g, SIRConfig(tau=tau, gamma=gamma, seeds=(0, 7), rng_seed=31), rep).ever
            if prev is not None:
                assert not (prev & ~ever).any(), (rep, tau)
            prev = ever


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 1), st.floats(0.05, 1), st.integers(1, 5))
def test_trace_invariants(seed, tau, gamma, k):
    rng = np.random.default_rng(seed)
    n = 30
    g = make_graph(n, random_edges(rng, n, 0.08))
    seeds = tuple(rng.choice(n, size=k, replace=False).tolist())
    t = run_sir(g, SIRConfig(tau=tau, gamma=gamma, seeds=seeds, rng_seed=seed))
    assert ((t.S + t.I + t.R) == n).all()
    assert (np.diff(t.S) <= 0).all() and (np.diff(t.R) >= 0).all() and t.I[-1] == 0
    assert k <= t.final_infected_ever <= n
    assert t.final_infected_ever == n - t.S[-1]
    if gamma == 1.0:
        # infectious for exactly one step
        assert (t.R[1:] == t.R[:-1] + t.I[:-1]).all()


def test_all_seeds_and_determinism():
    g = make_graph(10, random_edges(np.random.default_rng(1), 10, 0.2))
    s = evaluate_seeds(g, SIRConfig(tau=0.3, seeds=range(10), repetitions=7))
    assert (s.finals == 10).all() and s.std_final == 0
    cfg = SIRConfig(tau=0.3, gamma=0.7, seeds=(0,), repetitions=50, rng_seed=5)
    a, b = evaluate_seeds(g, cfg), evaluate_seeds(g, cfg, threads=4)
    assert summary_to_csv(a) == summary_to_csv(b) and summary_to_json(a) == summary_to_json(b)
    assert a.mean_final >= 1


def test_backends_agree():
    from oldetect import _backend
    g = make_graph(80, random_edges(np.random.default_rng(4), 80, 0.05))
    cfg = SIRConfig(tau=0.3, gamma=0.5, seeds=(0, 1, 2), rng_seed=9)
    traces = []
    for name in _backend.available():
        prev = _backend.name()
        _backend.set_backend(name)
        try:
            traces.append(run_sir(g, cfg, 3))
        finally:
            _backend.set_backend(prev)
    for t in traces[1:]:
        assert np.array_equal(t.S, traces[0].S) and np.array_equal(t.ever, traces[0].ever)


def test_degree_seeds_beat_random_seeds():
    wins = 0
    for exp in range(20):
        sf = nx.scale_free_graph(500, seed=exp)
        g = make_graph(500, [(a, b) for a, b in sf.edges() if a != b])
        top = np.lexsort((np.arange(500), -g.in_degree))[:20]
        rnd = np.random.default_rng(1000 + exp).choice(500, 20, replace=False)
        kw = dict(tau=0.05, gamma=1.0, repetitions=50, rng_seed=exp)
        a = evaluate_seeds(g, SIRConfig(seeds=top, **kw)).mean_final
        b = evaluate_seeds(g, SIRConfig(seeds=rnd, **kw)).mean_final
        wins += a > b
    assert wins >= 18


def test_config_validation():
    for bad in (dict(tau=1.5), dict(tau=0.1, gamma=0.0), dict(tau=0.1, repetitions=0), dict(tau=0.1, seeds=()),
                dict(tau=0.1, direction="out")):
        bad.setdefault("seeds", (0,))
        with pytest.raises(ValidationError):
            SIRConfig(**bad)
    with pytest.raises(ValidationError):
        run_sir(chain(3), SIRConfig(tau=0.1, seeds=(5,)))


def test_exports():
    s = evaluate_seeds(chain(4), SIRConfig(tau=1.0, seeds=(0,), repetitions=3))
    text = summary_to_csv(s)
    assert text.splitlines()[:2] == ["step,mean_infected_ever", "0,1.0"] and "\r" not in text
    doc = json.loads(summary_to_json(s, method="x"))
    assert doc["mean_final_infected_ever"] == 4.0 and doc["config"]["tau"] == 1.0 and doc["method"] == "x"
