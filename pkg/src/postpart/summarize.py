"""Quantize the empirical posterior over partitions into L weighted
representative partitions ("particles").

The objective is the Wasserstein distance, under the VI ground metric,
between the empirical distribution of the draws and a distribution
supported on L partitions: equivalently the mean VI from each draw to its
nearest particle.  A k-medoids-like alternation between assigning draws to
their closest particle and re-solving each region's minimum-expected-VI
partition finds a local optimum; multiple restarts and several
initialization strategies improve it.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .partition import Partition, size_log_table
from .samples import SampleSet, expected_vi, psm, subsample, vi_to_draws
from .search import SearchConfig, greedy_minvi, linkage_candidates, resolve_k_max, \
    top_candidates_by_evi

__all__ = [
    "SummaryConfig",
    "ParticleSummary",
    "initialize",
    "n_update",
    "vi_search_step",
    "run",
    "elbow",
]

INIT_METHODS = ("average", "complete", "plusplus", "topvi", "fixed")

# Full-set polish iterations after the mini-batch stage.
FULL_REFINE_ITERS = 5


class InvariantError(RuntimeError):
    """An internal consistency identity failed."""


@dataclass(frozen=True)
class SummaryConfig:
    """Settings for the particle summary.

    epsilon is the convergence threshold on the change of the objective,
    in bits; None selects 0.0001 * log2(n).  `runs` independent starts are
    executed and the lowest-objective result returned; with a deterministic
    init method the first run uses it and the remaining runs fall back to
    plusplus starts.  `minibatch` switches the iterations to subsamples of
    that size, followed by a few full-set iterations.
    """

    n_particles: int = 2
    init: str = "topvi"
    fixed: tuple[Partition, ...] | None = None
    epsilon: float | None = None
    max_iter: int = 100
    runs: int = 8
    minibatch: int | None = None
    search: SearchConfig = field(default_factory=SearchConfig)
    seed: int = 0
    init_thin: int = 10
    outlier_check: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init must be one of {INIT_METHODS}")
        if self.init == "fixed" and not self.fixed:
            raise ValueError("init='fixed' needs a fixed particle list")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.max_iter < 1 or self.runs < 1 or self.threads < 1:
            raise ValueError("max_iter, runs and threads must be >= 1")
        if self.minibatch is not None and self.minibatch < 1:
            raise ValueError("minibatch size must be >= 1")
        if self.fixed is not None:
            object.__setattr__(self, "fixed", tuple(self.fixed))


@dataclass
class ParticleSummary:
    """Weighted particle approximation of the posterior over partitions.

    weights[l] is the fraction of draws assigned to particle l and
    particle_evi[l] the mean VI of those draws to it, so
    wasserstein == weights @ particle_evi.  Particles are ordered by
    decreasing weight (ties: fewer clusters first).
    """

    particles: list[Partition]
    weights: np.ndarray
    assignments: np.ndarray
    particle_evi: np.ndarray
    wasserstein: float
    trace: list[float]
    converged: bool

    @property
    def L(self) -> int:
        return len(self.particles)

    def region_indices(self, l: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == l)


def _particle_matrix(particles: Sequence[Partition]):
    mat = np.vstack([p.labels for p in particles])
    ks = np.array([p.k for p in particles], dtype=np.int32)
    return np.ascontiguousarray(mat), ks


def _plusplus_pick(pool: SampleSet, chosen: list[Partition], count: int,
                   rng: np.random.Generator) -> list[Partition]:
    """Draw `count` additional particles from the pool, each with probability
    proportional to its VI distance to the nearest already-chosen particle.
    Stops early if every pool draw is at distance zero."""
    ftab = size_log_table(pool.n)
    mind = None
    if chosen:
        mat, ks = _particle_matrix(chosen)
        mind = _kernels.vi_cross(pool.matrix, pool.ks, mat, ks, ftab).min(axis=1)
    picks: list[Partition] = []
    for _ in range(count):
        if mind is None:
            t = int(rng.integers(pool.T))
        else:
            total = mind.sum()
            if not total > 0:
                break
            t = int(rng.choice(pool.T, p=mind / total))
        p = pool.draw(t)
        picks.append(p)
        d = _kernels.vi_to_rows(p.labels, p.k, pool.matrix, pool.ks, ftab)
        mind = d if mind is None else np.minimum(mind, d)
    return picks


def initialize(
    s: SampleSet,
    cfg: SummaryConfig,
    rng: np.random.Generator | None = None,
    *,
    item_psm=None,
) -> list[Partition]:
    """Produce the L starting particles for the configured init method."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    L = cfg.n_particles
    method = cfg.init

    if method == "fixed":
        fixed = list(cfg.fixed or ())
        if len(fixed) != L:
            raise ValueError(f"fixed init needs exactly {L} particles, got {len(fixed)}")
        if any(p.n != s.n for p in fixed):
            raise ValueError("fixed particles have wrong length")
        return fixed

    if method == "plusplus":
        pool = s.thin(cfg.init_thin)
        if pool.distinct_count() < L:
            pool = s
        if pool.distinct_count() < L:
            raise ValueError(f"only {pool.distinct_count()} distinct draws; cannot "
                             f"seed {L} particles")
        return _plusplus_pick(pool, [], L, rng)

    # linkage-based methods rank candidate cuts by EVI on a thinned sample
    ranking = s.thin(cfg.init_thin)
    k_max = resolve_k_max(s, cfg.search.k_max)
    if item_psm is None:
        item_psm = psm(s)
    if method in ("average", "complete"):
        cands = linkage_candidates(item_psm, method, k_max)
    else:  # topvi: union of both linkage families plus any fixed extras
        cands = linkage_candidates(item_psm, "average", k_max)
        cands += linkage_candidates(item_psm, "complete", k_max)
        cands += list(cfg.fixed or ())
        seen = set()
        uniq = []
        for c in cands:
            if c not in seen:
                seen.add(c)
                uniq.append(c)
        cands = uniq
    if len(cands) < L:
        raise ValueError(f"init {method!r} produced {len(cands)} candidates, "
                         f"fewer than L={L}")
    return top_candidates_by_evi(cands, ranking, L)


def n_update(
    s: SampleSet,
    particles: Sequence[Partition],
    rng: np.random.Generator,
    *,
    outlier_check: bool = True,
):
    """Assign every draw to its closest particle (exact ties broken at
    random), repairing degenerate regions.

    An empty region gets its particle replaced by a draw sampled with
    probability proportional to the distance to that particle.  A singleton
    region triggers one outlier swap attempt: a draw sampled proportionally
    to its distance to the nearest particle replaces the particle if that
    lowers the total objective, in which case all draws are reassigned.

    Returns (particles, assignments).
    """
    particles = list(particles)
    L = len(particles)
    ftab = size_log_table(s.n)
    mat, ks = _particle_matrix(particles)
    dist = _kernels.vi_cross(s.matrix, s.ks, mat, ks, ftab)

    def assign_all():
        a = np.argmin(dist, axis=1)
        row_min = dist[np.arange(s.T), a]
        ties = (dist == row_min[:, None]).sum(axis=1)
        for t in np.flatnonzero(ties > 1):
            a[t] = rng.choice(np.flatnonzero(dist[t] == row_min[t]))
        return a

    def repair_empties(assign, counts):
        # each pass fills one empty region without orphaning another, so at
        # most L passes are needed
        while True:
            empties = np.flatnonzero(counts == 0)
            if empties.size == 0:
                return
            l = int(empties[0])
            movable = counts[assign] > 1
            if not movable.any():  # only with more particles than draws
                return
            w = np.where(movable, dist[:, l], 0.0)
            total = w.sum()
            p = w / total if total > 0 else movable / movable.sum()
            t_star = int(rng.choice(s.T, p=p))
            particles[l] = s.draw(t_star)
            dist[:, l] = vi_to_draws(particles[l], s)
            counts[assign[t_star]] -= 1
            assign[t_star] = l
            counts[l] += 1

    assign = assign_all()
    counts = np.bincount(assign, minlength=L)
    repair_empties(assign, counts)

    if outlier_check and L > 1:
        for l in range(L):
            if counts[l] != 1:
                continue
            mind = dist.min(axis=1)
            total = mind.sum()
            if not total > 0:
                continue
            t_star = int(rng.choice(s.T, p=mind / total))
            if assign[t_star] == l:
                continue
            cand = s.draw(t_star)
            cand_col = vi_to_draws(cand, s)
            new_obj = np.minimum(
                np.min(np.delete(dist, l, axis=1), axis=1), cand_col
            ).sum()
            if new_obj < mind.sum():
                particles[l] = cand
                dist[:, l] = cand_col
                assign = assign_all()
                counts = np.bincount(assign, minlength=L)
                repair_empties(assign, counts)
    return particles, assign


def vi_search_step(
    s: SampleSet,
    assignments: np.ndarray,
    search: SearchConfig | None = None,
    *,
    incumbents: Sequence[Partition] | None = None,
    rng: np.random.Generator | None = None,
    n_regions: int | None = None,
    threads: int = 1,
):
    """Re-solve the center of every region of attraction.

    Each region's new particle is the greedy minimum-expected-VI partition
    of the draws assigned to it (warm-started from the incumbent particle
    when given, so a region's objective never deteriorates).  Returns
    (particles, per-particle EVI).
    """
    if search is None:
        search = SearchConfig()
    if rng is None:
        rng = np.random.default_rng(search.seed)
    L = n_regions if n_regions is not None else int(assignments.max()) + 1
    counts = np.bincount(assignments, minlength=L)
    if (counts == 0).any():
        raise InvariantError("vi_search_step called with an empty region")
    seeds = rng.integers(np.iinfo(np.int64).max, size=L)

    def solve(l: int):
        region = s.subset(np.flatnonzero(assignments == l))
        inc = incumbents[l] if incumbents is not None else None
        part = greedy_minvi(region, search, incumbent=inc,
                            rng=np.random.default_rng(int(seeds[l])))
        return part, expected_vi(part, region)

    if threads > 1 and L > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            solved = list(pool.map(solve, range(L)))
    else:
        solved = [solve(l) for l in range(L)]
    particles = [p for p, _ in solved]
    evis = np.array([e for _, e in solved])
    return particles, evis


def _single_run(s: SampleSet, cfg: SummaryConfig, particles0, rng):
    """One start of the alternating algorithm; returns the best state seen.

    The inner solver is inexact, so the objective may fluctuate upward in
    later iterations; the lowest full-set objective and its state are kept.
    """
    epsilon = cfg.epsilon if cfg.epsilon is not None else 1e-4 * np.log2(s.n)
    particles = list(particles0)
    trace: list[float] = []
    converged = False
    best = None

    def iterate(batch, parts):
        parts, assign = n_update(batch, parts, rng,
                                 outlier_check=cfg.outlier_check)
        parts, evis = vi_search_step(batch, assign, cfg.search,
                                     incumbents=parts, rng=rng,
                                     n_regions=len(parts),
                                     threads=cfg.threads)
        counts = np.bincount(assign, minlength=len(parts))
        weights = counts / batch.T
        W = float(np.dot(weights, evis))
        return parts, assign, evis, weights, W

    stages = []
    if cfg.minibatch is not None and cfg.minibatch < s.T:
        stages.append(("batch", cfg.max_iter))
        stages.append(("full", min(FULL_REFINE_ITERS, cfg.max_iter)))
    else:
        stages.append(("full", cfg.max_iter))

    for stage, max_iter in stages:
        prev_W = None
        for _ in range(max_iter):
            batch = (subsample(s, cfg.minibatch, rng) if stage == "batch" else s)
            particles, assign, evis, weights, W = iterate(batch, particles)
            trace.append(W)
            if stage == "full" and (best is None or W < best[0]):
                best = (W, list(particles), assign.copy(), evis, weights)
            if prev_W is not None and abs(W - prev_W) < epsilon:
                converged = stage == "full"
                break
            prev_W = W

    assert best is not None
    return best, trace, converged


def _starts_for_runs(s, cfg, rng_init, extra_start):
    """Initial particle lists for each run.

    A deterministic init method is only useful once; the remaining runs use
    plusplus starts (seeded independently) so the multi-start actually
    explores.  `extra_start` (used by the elbow warm start) occupies the
    first run slot.
    """
    starts: list[list[Partition]] = []
    if extra_start is not None:
        starts.append(list(extra_start))
    use_deterministic = cfg.init in ("average", "complete", "topvi", "fixed")
    while len(starts) < cfg.runs:
        if use_deterministic:
            use_deterministic = False
            if cfg.init == "fixed":
                starts.append(initialize(s, cfg, rng_init))
                continue
            try:
                starts.append(initialize(s, cfg, rng_init, item_psm=psm(s)))
                continue
            except ValueError:
                # linkage cuts cannot supply L distinct candidates (tiny n);
                # fall through to a plusplus start for this slot
                pass
        starts.append(initialize(s, replace(cfg, init="plusplus"), rng_init))
    return starts


def run(s: SampleSet, cfg: SummaryConfig, *, _extra_start=None) -> ParticleSummary:
    """Fit the particle summary: `cfg.runs` independent starts, keeping the
    one with the lowest Wasserstein objective (ties: earliest run).

    If L exceeds the number of distinct draws it is reduced with a warning,
    since surplus particles could never hold a region."""
    if s.T < 1:
        raise ValueError("empty sample set")
    cfg = _effective_config(s, cfg)

    root = np.random.SeedSequence(cfg.seed)
    init_seed, *run_seeds = root.spawn(cfg.runs + 1)
    rng_init = np.random.default_rng(init_seed)
    starts = _starts_for_runs(s, cfg, rng_init, _extra_start)

    results = []
    for r in range(cfg.runs):
        rng_r = np.random.default_rng(run_seeds[r])
        best, trace, converged = _single_run(s, cfg, starts[r], rng_r)
        results.append((best[0], r, best, trace, converged))
    W, _, best, trace, converged = min(results, key=lambda x: (x[0], x[1]))
    _, particles, assign, evis, weights = best

    order = sorted(range(len(particles)),
                   key=lambda l: (-weights[l], particles[l].k, l))
    inv = np.empty(len(order), dtype=assign.dtype)
    inv[np.array(order)] = np.arange(len(order))
    summary = ParticleSummary(
        particles=[particles[l] for l in order],
        weights=weights[order],
        assignments=inv[assign],
        particle_evi=evis[order],
        wasserstein=W,
        trace=trace,
        converged=converged,
    )
    return summary


def _effective_config(s: SampleSet, cfg: SummaryConfig) -> SummaryConfig:
    distinct = s.distinct_count()
    if cfg.n_particles > distinct:
        warnings.warn(
            f"requested {cfg.n_particles} particles but only {distinct} distinct "
            f"draws; reducing L to {distinct}",
            stacklevel=3,
        )
        fixed = cfg.fixed[:distinct] if cfg.init == "fixed" and cfg.fixed else cfg.fixed
        cfg = replace(cfg, n_particles=distinct, fixed=fixed)
    return cfg


def elbow(s: SampleSet, L_values: Sequence[int], cfg: SummaryConfig):
    """Run the summary for each L (ascending) and report (L, W, summary).

    Every step after the first adds one warm-started run seeded with the
    previous solution plus plusplus-sampled extra particles, which makes
    the best objective non-increasing in L.
    """
    L_values = list(L_values)
    if not L_values:
        raise ValueError("L_values must be nonempty")
    if any(l < 1 for l in L_values) or any(
        b <= a for a, b in zip(L_values, L_values[1:])
    ):
        raise ValueError("L_values must be positive and strictly ascending")

    results = []
    prev: ParticleSummary | None = None
    for L in L_values:
        cfg_L = replace(cfg, n_particles=L,
                        fixed=cfg.fixed if cfg.init == "fixed" else None)
        if cfg_L.init == "fixed" and (cfg_L.fixed is None or len(cfg_L.fixed) != L):
            # fixed lists are tied to one L; fall back for the other sizes
            cfg_L = replace(cfg_L, init="topvi", fixed=None)
        extra = None
        if prev is not None:
            base = list(prev.particles)
            need = L - len(base)
            if need > 0:
                rng_L = np.random.default_rng(
                    np.random.SeedSequence([cfg.seed, 7, L])
                )
                base += _plusplus_pick(s, base, need, rng_L)
            extra = base
        res = run(s, cfg_L, _extra_start=extra)
        results.append((L, res.wasserstein, res))
        prev = res
    return results
