"""Time the hot kernels under the compiled and pure-Python backends.

    python3 benchmarks/bench_kernels.py [--nodes 2000] [--repeat 3]

Both backends receive the same inputs (including the pre-drawn uniforms),
so each row also checks that they produce the same result.
"""

import argparse
import time

import numpy as np

from oldetect import _backend
from oldetect.graph import DirectedGraph


def scale_free(n, m, rng):
    # preferential attachment by sampling endpoints of earlier edges
    src, dst = [], []
    pool = list(range(m))
    for v in range(m, n):
        targets = set(rng.choice(pool, size=m).tolist())
        for t in targets:
            src.append(v)
            dst.append(t)
        pool.extend(targets)
        pool.extend([v] * len(targets))
    return DirectedGraph.from_edges(src, dst, [str(i) for i in range(n)])


def cases(g, rng):
    ip, ix = g.undirected
    n = g.node_count
    starts = np.repeat(np.arange(n, dtype=np.int64), 2)
    L = 40
    u = rng.random((starts.size, L - 1))
    core = _backend.kernels("python").core_numbers(ip, ix).astype(np.int64)
    emb = rng.normal(size=(n, 32))
    nodes = np.arange(min(n, 300), dtype=np.int64)
    d, npairs = 64, 50_000
    w_in0 = (rng.random((n, d)) - 0.5) / d
    w_out0 = rng.normal(scale=0.01, size=(n, d))
    c = rng.integers(0, n, npairs).astype(np.int64)
    o = rng.integers(0, n, npairs).astype(np.int64)
    neg = rng.random((npairs, 5))
    cdf = np.linspace(1.0 / n, 1.0, n)
    lrs = np.linspace(0.025, 0.00025, npairs)
    seeds = np.arange(50, dtype=np.int64)
    a = np.arange(200_000, dtype=np.int64)

    def sgns(k):
        return k.sgns_pairs(w_in0.copy(), w_out0.copy(), c, o, neg, cdf, lrs)

    return {
        "hash_uniform (2e5)": lambda k: k.hash_uniform(7, a, a[::-1].copy()),
        "core_numbers": lambda k: k.core_numbers(ip, ix),
        "uniform_walks": lambda k: k.uniform_walks(ip, ix, starts, L, u),
        "biased_walks": lambda k: k.biased_walks(ip, ix, starts, L, 4.0, 0.25, u),
        "nlc_scores (300 nodes)": lambda k: k.nlc_scores(ip, ix, core, emb, 3, nodes),
        f"sgns_pairs ({npairs} pairs)": sgns,
        "sir_run (tau=0.1)": lambda k: k.sir_run(g.in_indptr, g.in_indices, seeds, 0.1, 1.0, 1, 2, 10**6),
    }


def same(x, y):
    if isinstance(x, tuple):
        return all(same(a, b) for a, b in zip(x, y))
    if isinstance(x, list):
        return len(x) == len(y) and all(same(a, b) for a, b in zip(x, y))
    x, y = np.asarray(x), np.asarray(y)
    if x.dtype.kind == "f":
        return np.allclose(x, y, rtol=1e-10, atol=1e-12)
    return np.array_equal(x, y)


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    g = scale_free(args.nodes, 5, rng)
    print(f"graph: {g.node_count} nodes, {g.edge_count} edges; backends: {', '.join(_backend.available())}")
    backends = _backend.available()
    print(f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}  agree")
    for label, fn in cases(g, rng).items():
        res = {b: best_of(lambda: fn(_backend.kernels(b)), args.repeat) for b in backends}
        row = f"{label:<28}" + "".join(f"{res[b][1]:>11.4f}s" for b in backends)
        if "cython" in res:
            row += f"{res['python'][1] / res['cython'][1]:>9.1f}x  {same(res['python'][0], res['cython'][0])}"
        print(row)


if __name__ == "__main__":
    main()
