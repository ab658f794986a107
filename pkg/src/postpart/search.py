"""Search for a single partition minimizing the expected VI over a sample
set, plus candidate generation from hierarchical clustering of the PSM.

The greedy solver follows the sequential-allocation pattern: items are
visited in random order and placed in the cluster (possibly a new one, up
to k_max) that minimizes the expected VI of the partial configuration, then
full reallocation sweeps run until no single-item move improves.  Unlike
k-medoids the result is not restricted to the observed draws.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .partition import LABEL_DTYPE, Partition, canonicalize, size_log_table
from .samples import PSM, SampleSet, expected_vi

__all__ = [
    "SearchConfig",
    "greedy_minvi",
    "linkage_candidates",
    "top_candidates_by_evi",
]


@dataclass(frozen=True)
class SearchConfig:
    """Settings for the greedy expected-VI minimizer.

    k_max caps the number of clusters in the search (None: max cluster
    count across the draws plus 10).  `runs` counts restarts: the first is
    seeded from the lowest-EVI draw, the rest use random allocation orders.
    """

    k_max: int | None = None
    runs: int = 4
    max_sweeps: int = 50
    seed: int | None = 0

    def __post_init__(self):
        if self.k_max is not None and self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


@lru_cache(maxsize=8)
def _gain_table(n: int) -> np.ndarray:
    """gtab[z] = f(z+1) - f(z) with f(z) = z log2 z, for z = 0..n."""
    z = np.arange(n + 2, dtype=np.float64)
    f = np.zeros(n + 2)
    f[1:] = z[1:] * np.log2(z[1:])
    out = np.diff(f)
    out.setflags(write=False)
    return out


def resolve_k_max(s: SampleSet, k_max: int | None) -> int:
    if k_max is None:
        k_max = s.max_clusters() + 10
    return max(1, min(k_max, s.n))


def _lowest_evi_draw(s: SampleSet, cap: int = 256) -> int:
    """Index of the draw with the lowest expected VI to the other draws.

    For large T the EVI of each candidate draw is estimated on a thinned
    grid (both candidate and target axes), which keeps this seed selection
    O(cap^2) instead of O(T^2).
    """
    stride = max(1, s.T // cap)
    cand_idx = np.arange(0, s.T, stride)
    targets = s.thin(stride)
    ftab = size_log_table(s.n)
    best_t = 0
    best_evi = np.inf
    for t in cand_idx:
        v = _kernels.vi_to_rows(s.matrix[t], int(s.ks[t]), targets.matrix,
                                targets.ks, ftab).mean()
        if v < best_evi:
            best_evi = v
            best_t = int(t)
    return best_t


def _sweeps(labels, sizes, X, draws_T, k_cur, k_max, gtab, max_sweeps, rng,
            evi_trace=None, s=None):
    for _ in range(max_sweeps):
        order = rng.permutation(labels.size).astype(np.int64)
        moves, k_cur = _kernels.sweep_pass(order, labels, sizes, X, draws_T,
                                           k_cur, k_max, gtab)
        if evi_trace is not None:
            evi_trace.append(expected_vi(canonicalize(labels), s))
        if moves == 0:
            break
    return k_cur


def greedy_minvi(
    s: SampleSet,
    cfg: SearchConfig | None = None,
    *,
    incumbent: Partition | None = None,
    rng: np.random.Generator | None = None,
    evi_trace: list | None = None,
) -> Partition:
    """Best partition found by the multi-restart greedy search.

    An optional `incumbent` adds one extra restart warm-started from it, so
    the result is never worse than the incumbent on this sample set.  Ties
    across restarts go to the earliest restart.
    """
    if cfg is None:
        cfg = SearchConfig()
    if s.T == 0:
        raise ValueError("empty sample set")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n = s.n
    k_max = resolve_k_max(s, cfg.k_max)

    draws_T = np.ascontiguousarray(s.matrix.T)
    c_max = s.max_clusters()
    gtab = _gain_table(n)

    starts: list[np.ndarray | None] = []
    if incumbent is not None:
        if incumbent.n != n:
            raise ValueError("incumbent has wrong length")
        if incumbent.k <= k_max:
            starts.append(incumbent.labels)
    low = s.matrix[_lowest_evi_draw(s)]
    if low.max() < k_max:
        starts.append(low)
    n_random = cfg.runs - 1
    if not starts and n_random == 0:
        n_random = 1  # keep at least one restart when warm starts exceed k_max
    starts.extend([None] * n_random)
    restart_seeds = rng.integers(np.iinfo(np.int64).max, size=len(starts))

    k_rows = max([k_max, c_max] + [st.max() + 1 for st in starts if st is not None])

    best: tuple[float, int, Partition] | None = None
    for r, (start, rseed) in enumerate(zip(starts, restart_seeds)):
        rng_r = np.random.default_rng(int(rseed))
        sizes = np.zeros(k_rows, dtype=np.int64)
        X = np.zeros((s.T, k_rows, c_max), dtype=np.int32)
        if start is not None:
            labels = np.ascontiguousarray(start, dtype=LABEL_DTYPE).copy()
            _kernels.build_tables(labels, draws_T, X, sizes)
            k_cur = int(labels.max()) + 1
        else:
            labels = np.full(n, -1, dtype=LABEL_DTYPE)
            order = rng_r.permutation(n).astype(np.int64)
            k_cur = _kernels.alloc_pass(order, labels, sizes, X, draws_T,
                                        k_max, gtab)
        _sweeps(labels, sizes, X, draws_T, k_cur, k_max, gtab,
                cfg.max_sweeps, rng_r, evi_trace, s)
        part = canonicalize(labels)
        evi = expected_vi(part, s)
        if best is None or evi < best[0]:
            best = (evi, r, part)
    assert best is not None
    return best[2]


def _agglomerate(diss: np.ndarray, method: str):
    """Merge sequence for average/complete linkage on a dissimilarity matrix.

    Clusters are named by their smallest member index; ties in merge height
    pick the lexicographically smallest (i, j) pair.  Returns the list of
    (i, j) merges in order.
    """
    n = diss.shape[0]
    D = diss.astype(np.float64).copy()
    np.fill_diagonal(D, np.inf)
    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    # only consider i < j
    D[np.tril_indices(n)] = np.inf
    merges = []
    for _ in range(n - 1):
        flat = int(np.argmin(D))
        i, j = divmod(flat, n)
        merges.append((i, j))
        si, sj = sizes[i], sizes[j]
        for k in np.flatnonzero(active):
            if k == i or k == j:
                continue
            dik = D[min(i, k), max(i, k)]
            djk = D[min(j, k), max(j, k)]
            if method == "average":
                new = (si * dik + sj * djk) / (si + sj)
            else:
                new = max(dik, djk)
            D[min(i, k), max(i, k)] = new
        active[j] = False
        sizes[i] = si + sj
        D[j, :] = np.inf
        D[:, j] = np.inf
    return merges


def linkage_candidates(m: PSM, method: str, k_max: int) -> list[Partition]:
    """Agglomerative clustering on dissimilarity (1 - PSM), cut at every
    cluster count from 1 to k_max (ascending).  Cuts are nested by
    construction."""
    if m.level != "item":
        raise ValueError("linkage candidates need an item-level PSM")
    if method not in ("average", "complete"):
        raise ValueError(f"unknown linkage method: {method!r}")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    n = m.dim
    k_max = min(k_max, n)
    merges = _agglomerate(1.0 - m.values, method)
    labels = np.arange(n, dtype=np.int64)
    cuts: dict[int, Partition] = {}
    k = n
    if k <= k_max:
        cuts[k] = canonicalize(labels)
    for i, j in merges:
        labels[labels == j] = i
        k -= 1
        if k <= k_max:
            cuts[k] = canonicalize(labels)
    return [cuts[k] for k in sorted(cuts)]


def top_candidates_by_evi(cands: list[Partition], s: SampleSet, L: int) -> list[Partition]:
    """The L candidates with smallest expected VI, ascending; ties keep
    input order."""
    if len(cands) < L:
        raise ValueError(f"need at least {L} candidates, got {len(cands)}")
    evis = np.array([expected_vi(c, s) for c in cands])
    order = np.argsort(evis, kind="stable")[:L]
    return [cands[i] for i in order]
