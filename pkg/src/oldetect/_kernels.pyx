# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. See ``_fallback.py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()

ctypedef long long i64
ctypedef unsigned long long u64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 GOLDEN2 = 0xD1B54A32D192ED03ULL


cdef inline u64 mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double hash_uniform_c(u64 key, u64 a, u64 b) nogil:
    cdef u64 z = mix64(mix64(key + a * GOLDEN) + b * GOLDEN2)
    return <double>(z >> 11) * (1.0 / 9007199254740992.0)


def hash_uniform(key, a, b):
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    a, b = np.broadcast_arrays(a, b)
    cdef u64[::1] av = np.ascontiguousarray(a).ravel()
    cdef u64[::1] bv = np.ascontiguousarray(b).ravel()
    out = np.empty(av.shape[0])
    cdef double[::1] ov = out
    cdef u64 k = <u64>int(key)
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        ov[i] = hash_uniform_c(k, av[i], bv[i])
    return out.reshape(a.shape)


def core_numbers(const i64[::1] indptr, const i64[::1] indices):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.zeros(max(n, 0), dtype=np.int64)
    if n <= 0:
        return out
    cdef i64[::1] deg = out
    cdef i64[::1] pos = np.empty(n, dtype=np.int64)
    cdef i64[::1] vert = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t v, u, w, i, k, d
    cdef i64 md = 0, start, tmp, du, pu, pw
    for v in range(n):
        deg[v] = indptr[v + 1] - indptr[v]
        if deg[v] > md:
            md = deg[v]
    cdef i64[::1] bins = np.zeros(md + 1, dtype=np.int64)
    with nogil:
        for v in range(n):
            bins[deg[v]] += 1
        start = 0
        for d in range(md + 1):
            tmp = bins[d]
            bins[d] = start
            start += tmp
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
                        pos[u] = pw
                        pos[w] = pu
                        vert[pu] = w
                        vert[pw] = u
                    bins[du] += 1
                    deg[u] -= 1
    return out


def uniform_walks(const i64[::1] indptr, const i64[::1] indices, starts, Py_ssize_t walk_length,
                  const double[:, ::1] uniforms):
    cdef i64[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t nw = st.shape[0]
    walks_a = np.full((nw, walk_length), -1, dtype=np.int64)
    lengths_a = np.ones(nw, dtype=np.int64)
    cdef i64[:, ::1] walks = walks_a
    cdef i64[::1] lengths = lengths_a
    cdef Py_ssize_t w, t
    cdef i64 cur, deg, k
    with nogil:
        for w in range(nw):
            cur = st[w]
            walks[w, 0] = cur
            for t in range(walk_length - 1):
                deg = indptr[cur + 1] - indptr[cur]
                if deg == 0:
                    break
                k = <i64>(uniforms[w, t] * deg)
                if k > deg - 1:
                    k = deg - 1
                cur = indices[indptr[cur] + k]
                walks[w, t + 1] = cur
                lengths[w] += 1
    return walks_a, lengths_a


cdef inline bint contains(const i64[::1] indices, i64 lo, i64 hi, i64 x) nogil:
    cdef i64 mid, end = hi
    while lo < hi:
        mid = (lo + hi) >> 1
        if indices[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo < end and indices[lo] == x


def biased_walks(const i64[::1] indptr, const i64[::1] indices, starts, Py_ssize_t walk_length,
                 double inv_p, double inv_q, const double[:, ::1] uniforms):
    cdef i64[::1] st = np.ascontiguousarray(starts, dtype=np.int64)
    cdef Py_ssize_t nw = st.shape[0]
    walks_a = np.full((nw, walk_length), -1, dtype=np.int64)
    lengths_a = np.ones(nw, dtype=np.int64)
    cdef i64[:, ::1] walks = walks_a
    cdef i64[::1] lengths = lengths_a
    cdef Py_ssize_t w, t
    cdef i64 cur, prev, deg, k, lo, hi, plo, phi, x, j
    cdef double u, total, target, wt, cum
    with nogil:
        for w in range(nw):
            cur = st[w]
            prev = -1
            walks[w, 0] = cur
            for t in range(walk_length - 1):
                lo = indptr[cur]
                hi = indptr[cur + 1]
                deg = hi - lo
                if deg == 0:
                    break
                u = uniforms[w, t]
                if prev < 0:
                    k = <i64>(u * deg)
                    if k > deg - 1:
                        k = deg - 1
                else:
                    plo = indptr[prev]
                    phi = indptr[prev + 1]
                    total = 0.0
                    for j in range(lo, hi):
                        x = indices[j]
                        if x == prev:
                            total += inv_p
                        elif phi > plo and contains(indices, plo, phi, x):
                            total += 1.0
                        else:
                            total += inv_q
                    target = u * total
                    cum = 0.0
                    k = deg - 1
                    for j in range(lo, hi):
                        x = indices[j]
                        if x == prev:
                            wt = inv_p
                        elif phi > plo and contains(indices, plo, phi, x):
                            wt = 1.0
                        else:
                            wt = inv_q
                        cum += wt
                        if cum > target:
                            k = j - lo
                            break
                prev = cur
                cur = indices[lo + k]
                walks[w, t + 1] = cur
                lengths[w] += 1
    return walks_a, lengths_a


def nlc_scores(const i64[::1] indptr, const i64[::1] indices, const i64[::1] core,
               const double[:, ::1] emb, int hops, nodes):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef i64[::1] nd = np.ascontiguousarray(nodes, dtype=np.int64)
    cdef Py_ssize_t m = nd.shape[0], dim = emb.shape[1]
    out_a = np.zeros(m)
    cdef double[::1] out = out_a
    cdef i64[::1] stamp = np.full(max(n, 1), -1, dtype=np.int64)
    cdef i64[::1] queue = np.empty(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t q, head, tail, level_end, a, e, h
    cdef i64 i, v, x
    cdef double s, d2, diff
    with nogil:
        for q in range(m):
            i = nd[q]
            stamp[i] = q
            head = 0
            tail = 0
            queue[tail] = i
            tail += 1
            s = 0.0
            for h in range(hops):
                level_end = tail
                while head < level_end:
                    v = queue[head]
                    head += 1
                    for e in range(indptr[v], indptr[v + 1]):
                        x = indices[e]
                        if stamp[x] != q:
                            stamp[x] = q
                            queue[tail] = x
                            tail += 1
                            d2 = 0.0
                            for a in range(dim):
                                diff = emb[i, a] - emb[x, a]
                                d2 += diff * diff
                            s += core[i] * exp(-d2)
                if tail == level_end:
                    break
            out[q] = s
    return out_a


cdef inline double logaddexp0(double x) nogil:
    # log(1 + exp(x))
    if x > 0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef inline i64 draw_index(const double[::1] cdf, double u) nogil:
    cdef i64 lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u:
            lo = mid + 1
        else:
            hi = mid
    if lo > cdf.shape[0] - 1:
        lo = cdf.shape[0] - 1
    return lo


def sgns_pairs(double[:, ::1] w_in, double[:, ::1] w_out, const i64[::1] centers, const i64[::1] contexts,
               const double[:, ::1] neg_uniforms, const double[::1] noise_cdf, const double[::1] lrs):
    cdef Py_ssize_t npairs = centers.shape[0], dim = w_in.shape[1], kneg = neg_uniforms.shape[1]
    cdef double* grad = <double*> malloc(dim * sizeof(double))
    if grad == NULL:
        raise MemoryError()
    cdef Py_ssize_t p, j, a
    cdef i64 c, o, t
    cdef double lr, f, g, label, loss = 0.0, tmp
    try:
        with nogil:
            for p in range(npairs):
                c = centers[p]
                o = contexts[p]
                lr = lrs[p]
                memset(grad, 0, dim * sizeof(double))
                for j in range(kneg + 1):
                    if j == 0:
                        t = o
                        label = 1.0
                    else:
                        t = draw_index(noise_cdf, neg_uniforms[p, j - 1])
                        if t == o:
                            continue
                        label = 0.0
                    f = 0.0
                    for a in range(dim):
                        f += w_in[c, a] * w_out[t, a]
                    if label > 0:
                        loss += logaddexp0(-f)
                    else:
                        loss += logaddexp0(f)
                    g = (label - 1.0 / (1.0 + exp(-f))) * lr
                    for a in range(dim):
                        grad[a] += g * w_out[t, a]
                        w_out[t, a] += g * w_in[c, a]
                for a in range(dim):
                    w_in[c, a] += grad[a]
    finally:
        free(grad)
    return loss


def sir_run(const i64[::1] indptr, const i64[::1] indices, seeds, double tau, double gamma,
            key_inf, key_rec, i64 max_steps):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    seeds_a = np.unique(np.asarray(seeds, dtype=np.int64))
    cdef i64[::1] sd = seeds_a
    state_a = np.zeros(max(n, 1), dtype=np.int8)
    cdef signed char[::1] state = state_a
    cdef i64[::1] age = np.zeros(max(n, 1), dtype=np.int64)
    cdef i64[::1] inf = np.empty(max(n, 1), dtype=np.int64)
    cdef i64[::1] nxt = np.empty(max(n, 1), dtype=np.int64)
    cdef i64[::1] new = np.empty(max(n, 1), dtype=np.int64)
    cdef u64 ki = <u64>int(key_inf), kr = <u64>int(key_rec)
    cdef Py_ssize_t ninf = sd.shape[0], nnew, nkeep, a, e
    cdef i64 i, j, steps = 0, s_count, r_count, rec
    S, I, R = [n - ninf], [ninf], [0]
    for a in range(ninf):
        state[sd[a]] = 1
        inf[a] = sd[a]
    s_count = n - ninf
    r_count = 0
    while ninf > 0 and steps < max_steps:
        steps += 1
        with nogil:
            nnew = 0
            for a in range(ninf):
                i = inf[a]
                for e in range(indptr[i], indptr[i + 1]):
                    j = indices[e]
                    if state[j] == 0 and hash_uniform_c(ki, <u64>e, <u64>age[i]) < tau:
                        state[j] = 3
                        new[nnew] = j
                        nnew += 1
            nkeep = 0
            rec = 0
            for a in range(ninf):
                i = inf[a]
                if hash_uniform_c(kr, <u64>i, <u64>age[i]) < gamma:
                    state[i] = 2
                    rec += 1
                else:
                    age[i] += 1
                    nxt[nkeep] = i
                    nkeep += 1
            for a in range(nnew):
                j = new[a]
                state[j] = 1
                age[j] = 0
                nxt[nkeep] = j
                nkeep += 1
            for a in range(nkeep):
                inf[a] = nxt[a]
            ninf = nkeep
            s_count -= nnew
            r_count += rec
        S.append(s_count)
        I.append(ninf)
        R.append(r_count)
    ever = state_a[:n] > 0
    return (np.array(S, dtype=np.int64), np.array(I, dtype=np.int64),
            np.array(R, dtype=np.int64), ever)
