"""Numba kernels behind the public API.

Everything here works on dense int32 label matrices (one row per draw,
canonical labels 0..k-1).  Kernels are nogil so callers may run them from
worker threads; none of them uses numba's global RNG — randomness is either
supplied by the caller or generated from an explicit splitmix64 state, so
results never depend on thread scheduling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, nogil=True)
def next_uniform(state):
    """splitmix64 step; `state` is a 1-element uint64 array, mutated in place."""
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, nogil=True)
def canonicalize_rows(rows, max_label):
    """In-place first-occurrence relabeling of every row; returns cluster counts."""
    T, n = rows.shape
    stamps = np.full(max_label + 1, -1, dtype=np.int64)
    ids = np.zeros(max_label + 1, dtype=np.int32)
    ks = np.zeros(T, dtype=np.int32)
    for t in range(T):
        k = np.int32(0)
        for i in range(n):
            v = rows[t, i]
            if stamps[v] != t:
                stamps[v] = t
                ids[v] = k
                k += 1
            rows[t, i] = ids[v]
        ks[t] = k
    return ks


@njit(cache=True, nogil=True)
def vi_pair(la, ka, lb, kb, ftab):
    """VI in bits between two canonical label rows of equal length."""
    n = la.size
    cont = np.zeros((ka, kb), dtype=np.int64)
    ra = np.zeros(ka, dtype=np.int64)
    rb = np.zeros(kb, dtype=np.int64)
    for i in range(n):
        cont[la[i], lb[i]] += 1
        ra[la[i]] += 1
        rb[lb[i]] += 1
    total = 0.0
    for j in range(ka):
        total += ftab[ra[j]]
    for c in range(kb):
        total += ftab[rb[c]]
    cells = 0.0
    for j in range(ka):
        for c in range(kb):
            cells += ftab[cont[j, c]]
    v = (total - 2.0 * cells) / n
    if v < 0.0:  # rounding noise; the exact value is nonnegative
        v = 0.0
    return v


@njit(cache=True, nogil=True)
def vi_cross(draws, draw_ks, parts, part_ks, ftab):
    """T x L matrix of VI distances between draws and particles."""
    T = draws.shape[0]
    L = parts.shape[0]
    out = np.empty((T, L), dtype=np.float64)
    for t in range(T):
        for l in range(L):
            out[t, l] = vi_pair(draws[t], draw_ks[t], parts[l], part_ks[l], ftab)
    return out


@njit(cache=True, nogil=True)
def vi_to_rows(p_labels, pk, draws, draw_ks, ftab):
    """Per-draw VI distances from one partition to every row of `draws`."""
    T = draws.shape[0]
    out = np.empty(T, dtype=np.float64)
    for t in range(T):
        out[t] = vi_pair(p_labels, pk, draws[t], draw_ks[t], ftab)
    return out


@njit(cache=True, nogil=True)
def coclustering_counts(draws):
    """n x n matrix counting, per item pair, the draws that co-cluster them."""
    T, n = draws.shape
    counts = np.zeros((n, n), dtype=np.int64)
    for t in range(T):
        row = draws[t]
        for i in range(n):
            li = row[i]
            for j in range(i + 1, n):
                if row[j] == li:
                    counts[i, j] += 1
    for i in range(n):
        counts[i, i] = T
        for j in range(i + 1, n):
            counts[j, i] = counts[i, j]
    return counts


@njit(cache=True, nogil=True)
def mean_vi_contribution(p_labels, pk, p_sizes, draws, draw_ks, log2tab):
    """Per-item VI contribution to each draw, averaged over draws."""
    T, n = draws.shape
    cmax = 0
    for t in range(T):
        if draw_ks[t] > cmax:
            cmax = draw_ks[t]
    acc = np.zeros(n, dtype=np.float64)
    cont = np.zeros((pk, cmax), dtype=np.int64)
    mb = np.zeros(cmax, dtype=np.int64)
    val = np.zeros((pk, cmax), dtype=np.float64)
    for t in range(T):
        kb = draw_ks[t]
        row = draws[t]
        for j in range(pk):
            for c in range(kb):
                cont[j, c] = 0
        for c in range(kb):
            mb[c] = 0
        for i in range(n):
            cont[p_labels[i], row[i]] += 1
            mb[row[i]] += 1
        for j in range(pk):
            for c in range(kb):
                x = cont[j, c]
                if x > 0:
                    val[j, c] = log2tab[p_sizes[j]] + log2tab[mb[c]] - 2.0 * log2tab[x]
        for i in range(n):
            acc[i] += val[p_labels[i], row[i]]
    return acc / (n * T)


# ---------------------------------------------------------------------------
# Sequential-allocation greedy search for the minimum-expected-VI partition.
#
# State shared by the kernels below (owned by the caller):
#   labels  int32[n]   current cluster of each item, -1 while unallocated
#   sizes   int64[kmax] cluster sizes, clusters kept dense 0..k_cur-1
#   X       int32[T, kmax, cmax]  X[t, b, c] = |items in cluster b and in
#                                  cluster c of draw t|, restricted to
#                                  currently allocated items
# The expected VI of a full allocation equals
#   (sum_b f(sizes[b]) - (2/T) sum_t sum_cells f(X)) / n  + const(draws),
# with f(z) = z log2 z, so the change from placing one item only involves
# f(z+1)-f(z) terms: `gtab[z]` below.
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def build_tables(labels, draws_T, X, sizes):
    n, T = draws_T.shape
    for i in range(n):
        b = labels[i]
        if b >= 0:
            sizes[b] += 1
            col = draws_T[i]
            for t in range(T):
                X[t, b, col[t]] += 1


@njit(cache=True, nogil=True)
def _place_item(i, labels, sizes, X, draws_T, k_cur, k_max, gtab, removed_from):
    """Score every cluster for item i (currently unallocated) and place it.

    Returns (new_k_cur, chosen_cluster).  `removed_from` >= 0 marks the
    cluster the item just left: ties in its favor keep the item in place so a
    sweep only moves on strict improvement.
    """
    T = draws_T.shape[1]
    col = draws_T[i]
    best_b = -1
    best_s = np.inf
    if removed_from >= 0:
        acc = 0.0
        for t in range(T):
            acc += gtab[X[t, removed_from, col[t]]]
        best_s = gtab[sizes[removed_from]] - 2.0 * acc / T
        best_b = removed_from
    for b in range(k_cur):
        if b == removed_from:
            continue
        acc = 0.0
        for t in range(T):
            acc += gtab[X[t, b, col[t]]]
        s = gtab[sizes[b]] - 2.0 * acc / T
        if s < best_s:
            best_s = s
            best_b = b
    # An empty cluster would score exactly 0; open one only on strict gain.
    if k_cur < k_max and best_s > 0.0:
        best_b = k_cur
        k_cur += 1
    labels[i] = best_b
    sizes[best_b] += 1
    for t in range(T):
        X[t, best_b, col[t]] += 1
    return k_cur, best_b


@njit(cache=True, nogil=True)
def alloc_pass(order, labels, sizes, X, draws_T, k_max, gtab):
    """Sequentially allocate unlabeled items in the given visit order."""
    k_cur = 0
    for b in range(sizes.size):
        if sizes[b] > 0:
            k_cur = b + 1
    for idx in range(order.size):
        i = order[idx]
        k_cur, _ = _place_item(i, labels, sizes, X, draws_T, k_cur, k_max, gtab, -1)
    return k_cur


@njit(cache=True, nogil=True)
def sweep_pass(order, labels, sizes, X, draws_T, k_cur, k_max, gtab):
    """One full reallocation sweep; returns (moves, k_cur)."""
    n, T = draws_T.shape
    moves = 0
    for idx in range(order.size):
        i = order[idx]
        a = labels[i]
        col = draws_T[i]
        labels[i] = -1
        sizes[a] -= 1
        for t in range(T):
            X[t, a, col[t]] -= 1
        k_cur, b = _place_item(i, labels, sizes, X, draws_T, k_cur, k_max, gtab, a)
        if b != a:
            moves += 1
            if sizes[a] == 0:
                # keep clusters dense: move the last cluster into slot a
                last = k_cur - 1
                if a != last:
                    for j in range(n):
                        if labels[j] == last:
                            labels[j] = a
                    sizes[a] = sizes[last]
                    sizes[last] = 0
                    for t in range(T):
                        for c in range(X.shape[2]):
                            X[t, a, c] = X[t, last, c]
                            X[t, last, c] = 0
                k_cur -= 1
    return moves, k_cur


# ---------------------------------------------------------------------------
# Collapsed Gibbs sweep for a Dirichlet-process mixture of Gaussians with
# independent normal-inverse-gamma priors per dimension.
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _pred_logpdf(y, m, S, Q, mu0, k0, a0, b0, lg_num, lg_den):
    """Log posterior-predictive density of point y for a cluster with m
    members and per-dimension sufficient statistics (S, Q); m = 0 gives the
    prior predictive."""
    d = y.size
    km = k0 + m
    am = a0 + 0.5 * m
    nu = 2.0 * am
    lw = 0.0
    for j in range(d):
        if m > 0:
            mean = S[j] / m
            mu_m = (k0 * mu0[j] + S[j]) / km
            ssd = Q[j] - S[j] * S[j] / m
            if ssd < 0.0:
                ssd = 0.0
            bm = b0[j] + 0.5 * ssd + k0 * m * (mean - mu0[j]) ** 2 / (2.0 * km)
        else:
            mu_m = mu0[j]
            bm = b0[j]
        scale2 = bm * (km + 1.0) / (am * km)
        z2 = (y[j] - mu_m) ** 2 / scale2
        lw += (
            lg_num[m]
            - lg_den[m]
            - 0.5 * math.log(nu * math.pi * scale2)
            - 0.5 * (nu + 1.0) * math.log1p(z2 / nu)
        )
    return lw


@njit(cache=True, nogil=True)
def dpm_gibbs(Y, mu0, k0, a0, b0, alpha, sweeps, burnin, thin, seed, out):
    """Run `sweeps` full Gibbs sweeps, storing every `thin`-th post-burnin
    partition into `out` (int32, preallocated).  Starts from one cluster."""
    n, d = Y.shape
    labels = np.zeros(n, dtype=np.int32)
    m = np.zeros(n + 1, dtype=np.int64)
    S = np.zeros((n + 1, d), dtype=np.float64)
    Q = np.zeros((n + 1, d), dtype=np.float64)
    m[0] = n
    for i in range(n):
        for j in range(d):
            S[0, j] += Y[i, j]
            Q[0, j] += Y[i, j] * Y[i, j]
    k_cur = 1

    # lgamma((nu+1)/2) and lgamma(nu/2) only depend on the cluster size
    lg_num = np.empty(n + 1, dtype=np.float64)
    lg_den = np.empty(n + 1, dtype=np.float64)
    for mm in range(n + 1):
        lg_num[mm] = math.lgamma(a0 + 0.5 * (mm + 1.0))
        lg_den[mm] = math.lgamma(a0 + 0.5 * mm)

    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    logw = np.empty(n + 1, dtype=np.float64)
    kept = 0

    for sweep in range(1, sweeps + 1):
        for i in range(n):
            a = labels[i]
            m[a] -= 1
            for j in range(d):
                S[a, j] -= Y[i, j]
                Q[a, j] -= Y[i, j] * Y[i, j]
            if m[a] == 0:
                last = k_cur - 1
                if a != last:
                    for ii in range(n):
                        if labels[ii] == last:
                            labels[ii] = a
                    m[a] = m[last]
                    for j in range(d):
                        S[a, j] = S[last, j]
                        Q[a, j] = Q[last, j]
                m[last] = 0
                for j in range(d):
                    S[last, j] = 0.0
                    Q[last, j] = 0.0
                k_cur -= 1

            y = Y[i]
            for b in range(k_cur):
                logw[b] = math.log(float(m[b])) + _pred_logpdf(
                    y, m[b], S[b], Q[b], mu0, k0, a0, b0, lg_num, lg_den
                )
            logw[k_cur] = math.log(alpha) + _pred_logpdf(
                y, 0, S[k_cur], Q[k_cur], mu0, k0, a0, b0, lg_num, lg_den
            )
            wmax = logw[0]
            for b in range(1, k_cur + 1):
                if logw[b] > wmax:
                    wmax = logw[b]
            total = 0.0
            for b in range(k_cur + 1):
                logw[b] = math.exp(logw[b] - wmax)
                total += logw[b]
            u = next_uniform(state) * total
            pick = k_cur
            cum = 0.0
            for b in range(k_cur + 1):
                cum += logw[b]
                if u < cum:
                    pick = b
                    break
            if pick == k_cur:
                k_cur += 1
            labels[i] = pick
            m[pick] += 1
            for j in range(d):
                S[pick, j] += Y[i, j]
                Q[pick, j] += Y[i, j] * Y[i, j]

        if sweep > burnin and (sweep - burnin) % thin == 0:
            for ii in range(n):
                out[kept, ii] = labels[ii]
            kept += 1
    return kept
