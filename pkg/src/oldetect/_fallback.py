"""Pure-Python/NumPy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function. All randomness arrives as
arrays of uniforms (or as counter-based hash draws for SIR), so outputs match
the compiled backend exactly for a given input.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
GOLDEN2 = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(z):
    """splitmix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_uniform(key, a, b):
    """Counter-based uniform in [0, 1) for stream ``key`` at counter ``(a, b)``."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    z = mix64(mix64(np.uint64(key) + a * GOLDEN) + b * GOLDEN2)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def gather(indptr, indices, nodes):
    """Concatenated neighbour lists of ``nodes`` plus each entry's edge position."""
    nodes = np.asarray(nodes, dtype=np.int64)
    starts = indptr[nodes]
    counts = indptr[nodes + 1] - starts
    total = int(counts.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty, counts
    before = np.cumsum(counts) - counts
    pos = np.repeat(starts - before, counts) + np.arange(total, dtype=np.int64)
    return indices[pos], pos, counts


def core_numbers(indptr, indices):
    """Batagelj-Zaversnik bucket peeling on an undirected CSR."""
    n = len(indptr) - 1
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    indptr = np.asarray(indptr).tolist()
    indices = np.asarray(indices).tolist()
    deg = [indptr[i + 1] - indptr[i] for i in range(n)]
    md = max(deg)
    bins = [0] * (md + 1)
    for d in deg:
        bins[d] += 1
    start = 0
    for d in range(md + 1):
        bins[d], start = start, start + bins[d]
    pos = [0] * n
    vert = [0] * n
    for v in range(n):
        pos[v] = bins[deg[v]]
        vert[pos[v]] = v
        bins[deg[v]] += 1
    for d in range(md, 0, -1):
        bins[d] = bins[d - 1]
    bins[0] = 0
    for i in range(n):
        v = vert[i]
        for k in range(indptr[v], indptr[v + 1]):
            u = indices[k]
            if deg[u] > deg[v]:
                du = deg[u]
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    pos[u], pos[w] = pw, pu
                    vert[pu], vert[pw] = w, u
                bins[du] += 1
                deg[u] -= 1
    return np.array(deg, dtype=np.int64)


def uniform_walks(indptr, indices, starts, walk_length, uniforms):
    """First-order walks; step ``t`` picks neighbour ``floor(u[w, t] * deg)``."""
    starts = np.asarray(starts, dtype=np.int64)
    nw = starts.size
    walks = np.full((nw, walk_length), -1, dtype=np.int64)
    lengths = np.ones(nw, dtype=np.int64)
    if nw == 0:
        return walks, lengths
    walks[:, 0] = starts
    cur = starts.copy()
    alive = np.ones(nw, dtype=bool)
    for t in range(walk_length - 1):
        deg = indptr[cur + 1] - indptr[cur]
        alive &= deg > 0
        if not alive.any():
            break
        idx = np.minimum((uniforms[alive, t] * deg[alive]).astype(np.int64), deg[alive] - 1)
        cur[alive] = indices[indptr[cur[alive]] + idx]
        walks[alive, t + 1] = cur[alive]
        lengths[alive] += 1
    return walks, lengths


def _contains(indices, lo, hi, x):
    k = np.searchsorted(indices[lo:hi], x)
    return k < hi - lo and indices[lo + k] == x


def biased_walks(indptr, indices, starts, walk_length, inv_p, inv_q, uniforms):
    """Second-order walks with unnormalised weights 1/p, 1, 1/q.

    The first step is uniform. Afterwards, candidate ``x`` of the current
    node gets weight ``inv_p`` if ``x`` is the previous node, 1 if ``x`` is a
    neighbour of the previous node, ``inv_q`` otherwise; the pick is the first
    index whose running weight sum exceeds ``u * total``.
    """
    starts = np.asarray(starts, dtype=np.int64)
    nw = starts.size
    walks = np.full((nw, walk_length), -1, dtype=np.int64)
    lengths = np.ones(nw, dtype=np.int64)
    for w in range(nw):
        cur = int(starts[w])
        walks[w, 0] = cur
        prev = -1
        for t in range(walk_length - 1):
            lo, hi = int(indptr[cur]), int(indptr[cur + 1])
            deg = hi - lo
            if deg == 0:
                break
            u = uniforms[w, t]
            if prev < 0:
                k = min(int(u * deg), deg - 1)
            else:
                nb = indices[lo:hi]
                plo, phi = int(indptr[prev]), int(indptr[prev + 1])
                pn = indices[plo:phi]
                wts = np.full(deg, inv_q)
                if pn.size:
                    pos = np.searchsorted(pn, nb)
                    inside = pos < pn.size
                    inside[inside] = pn[pos[inside]] == nb[inside]
                    wts[inside] = 1.0
                wts[nb == prev] = inv_p
                cum = np.cumsum(wts)
                k = min(int(np.searchsorted(cum, u * cum[-1], side="right")), deg - 1)
            prev, cur = cur, int(indices[lo + k])
            walks[w, t + 1] = cur
            lengths[w] += 1
    return walks, lengths


def nlc_scores(indptr, indices, core, emb, hops, nodes):
    """Sum of ``core[i] * exp(-|emb[i] - emb[j]|^2)`` over j within ``hops``."""
    n = len(indptr) - 1
    nodes = np.asarray(nodes, dtype=np.int64)
    out = np.zeros(nodes.size)
    visited = np.zeros(n, dtype=bool)
    for k, i in enumerate(nodes.tolist()):
        visited[i] = True
        frontier = np.array([i], dtype=np.int64)
        members = []
        for _ in range(hops):
            nb, _, _ = gather(indptr, indices, frontier)
            if nb.size == 0:
                break
            nb = np.unique(nb)
            nb = nb[~visited[nb]]
            if nb.size == 0:
                break
            visited[nb] = True
            members.append(nb)
            frontier = nb
        visited[i] = False
        if members:
            m = np.concatenate(members)
            visited[m] = False
            d2 = ((emb[m] - emb[i]) ** 2).sum(axis=1)
            out[k] = (core[i] * np.exp(-d2)).sum()
    return out


def sgns_pairs(w_in, w_out, centers, contexts, neg_uniforms, noise_cdf, lrs):
    """One SGD pass over (center, context) pairs; returns the summed loss.

    Negatives are drawn by inverse-CDF lookup of ``neg_uniforms`` in
    ``noise_cdf``; a negative equal to the positive context is skipped.
    Updates follow word2vec: output vectors are updated in place per target,
    the input-vector gradient is accumulated and applied once per pair.
    """
    n_out = w_out.shape[0]
    k_neg = neg_uniforms.shape[1] if neg_uniforms.ndim == 2 else 0
    negs = np.minimum(np.searchsorted(noise_cdf, neg_uniforms, side="right"), n_out - 1)
    loss = 0.0
    for p in range(centers.size):
        c = centers[p]
        o = contexts[p]
        lr = lrs[p]
        v = w_in[c]
        grad_v = np.zeros_like(v)
        targets = [(o, 1.0)] + [(t, 0.0) for t in negs[p].tolist() if t != o] if k_neg else [(o, 1.0)]
        for t, label in targets:
            u = w_out[t]
            f = float(v @ u)
            if label:
                loss += np.logaddexp(0.0, -f)
            else:
                loss += np.logaddexp(0.0, f)
            g = (label - 1.0 / (1.0 + np.exp(-f))) * lr
            grad_v += g * u
            w_out[t] = u + g * v
        w_in[c] = v + grad_v
    return float(loss)


def sir_run(indptr, indices, seeds, tau, gamma, key_inf, key_rec, max_steps):
    """Synchronous discrete-time SIR on a contact CSR.

    Returns ``(S, I, R, ever)``: per-step compartment counts (step 0 is the
    seeded state) and the infected-ever mask. Contact draws are
    ``hash_uniform(key_inf, edge_position, age_of_source)``, recovery draws
    ``hash_uniform(key_rec, node, age)``.
    """
    n = len(indptr) - 1
    state = np.zeros(n, dtype=np.int8)  # 0 S, 1 I, 2 R
    age = np.zeros(n, dtype=np.int64)
    seeds = np.unique(np.asarray(seeds, dtype=np.int64))
    state[seeds] = 1
    inf = seeds
    S, I, R = [n - seeds.size], [seeds.size], [0]
    steps = 0
    while inf.size and steps < max_steps:
        steps += 1
        nb, pos, counts = gather(indptr, indices, inf)
        src_age = np.repeat(age[inf], counts)
        cand = state[nb] == 0
        hit = np.zeros(nb.size, dtype=bool)
        if cand.any():
            hit[cand] = hash_uniform(key_inf, pos[cand], src_age[cand]) < tau
        new = np.unique(nb[hit])
        rec = hash_uniform(key_rec, inf, age[inf]) < gamma
        state[inf[rec]] = 2
        keep = inf[~rec]
        age[keep] += 1
        state[new] = 1
        age[new] = 0
        inf = np.union1d(keep, new)
        S.append(S[-1] - new.size)
        I.append(inf.size)
        R.append(R[-1] + int(rec.sum()))
    ever = state > 0
    return (np.array(S, dtype=np.int64), np.array(I, dtype=np.int64),
            np.array(R, dtype=np.int64), ever)
