"""Post-hoc analysis of a particle summary.

Everything revolves around the meet of the particles: the coarsest
partition whose every cluster sits inside one cluster of each particle.
Items sharing a meet cluster behave identically in all particle-level
quantities, so matrices and contribution vectors can be collapsed from n
items to the (far fewer) meet clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .partition import Partition, meet, vi_contribution, vi_contribution_by_group, \
    vi_distance
from .samples import PSM, SampleSet, psm, vi_to_draws
from .summarize import ParticleSummary

__all__ = [
    "MeetDecomposition",
    "GroupedContribution",
    "ParticleComparison",
    "DiagnosticsReport",
    "particles_meet",
    "collapsed_psm",
    "evi_contribution_particles",
    "region_psm",
    "region_evi",
    "compare_particles",
    "build_report",
]


@dataclass(frozen=True)
class MeetDecomposition:
    """The particles' meet plus, for every particle l and meet cluster m,
    the particle-l cluster containing m (``cluster_map[l, m]``)."""

    meet: Partition
    cluster_map: np.ndarray

    @property
    def meet_sizes(self) -> np.ndarray:
        return self.meet.sizes


@dataclass(frozen=True)
class GroupedContribution:
    """A per-item quantity that is constant on meet clusters, stored once
    per meet cluster."""

    meet: Partition
    values: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return self.meet.sizes

    def per_item(self) -> np.ndarray:
        return self.values[self.meet.labels]

    def total(self) -> float:
        return float(np.dot(self.values, self.sizes))


@dataclass(frozen=True)
class ParticleComparison:
    vi: float
    vic: np.ndarray
    vicg: dict[tuple[int, int], float]


def _first_members(p: Partition) -> np.ndarray:
    """Index of the first item in each cluster (canonical labels make this
    the defining occurrence)."""
    first = np.full(p.k, -1, dtype=np.int64)
    for i, lab in enumerate(p.labels):
        if first[lab] < 0:
            first[lab] = i
    return first


def particles_meet(wp: ParticleSummary) -> MeetDecomposition:
    """Meet of the particles and the containment map onto each particle."""
    m = meet(wp.particles)
    reps = _first_members(m)
    cluster_map = np.vstack([p.labels[reps] for p in wp.particles])
    return MeetDecomposition(meet=m, cluster_map=cluster_map)


def collapsed_psm(wp: ParticleSummary, decomp: MeetDecomposition | None = None) -> PSM:
    """Co-clustering probability of meet-cluster pairs under the weighted
    particle approximation: entry (a, b) sums the weights of the particles
    in which meet clusters a and b share a cluster."""
    if decomp is None:
        decomp = particles_meet(wp)
    cm = decomp.cluster_map
    mdim = decomp.meet.k
    # accumulate region counts (integers) and divide once, so the diagonal
    # is exactly 1
    T = len(wp.assignments)
    counts = np.bincount(wp.assignments, minlength=wp.L)
    acc = np.zeros((mdim, mdim), dtype=np.int64)
    for l in range(wp.L):
        same = cm[l][:, None] == cm[l][None, :]
        acc += counts[l] * same
    return PSM(values=acc / T, level="meet")


def evi_contribution_particles(p: Partition, wp: ParticleSummary) -> GroupedContribution:
    """Per-item contribution to the expected VI of ``p``, with the
    expectation taken under the weighted particle approximation.

    The value is constant on clusters of the meet of the particles and
    ``p``, so it is returned per meet cluster; the item-level expansion sums
    to sum_l w_l * VI(p, particle_l).
    """
    if p.n != wp.particles[0].n:
        raise ValueError("partition length does not match the particles")
    per_item = np.zeros(p.n)
    for w, part in zip(wp.weights, wp.particles):
        per_item += w * vi_contribution(p, part)
    grouping = meet(list(wp.particles) + [p])
    reps = _first_members(grouping)
    return GroupedContribution(meet=grouping, values=per_item[reps])


def region_psm(s: SampleSet, wp: ParticleSummary, l: int) -> PSM:
    """Item-level PSM computed from the draws assigned to region l only."""
    idx = wp.region_indices(l)
    if idx.size == 0:
        raise ValueError(f"region {l} is empty")
    return psm(s.subset(idx))


def region_evi(s: SampleSet, wp: ParticleSummary, l: int,
               normalized: bool = False) -> float:
    """Mean VI of region-l draws to their particle; optionally divided by
    log2(n) (the VI's upper bound) to land in [0, 1]."""
    idx = wp.region_indices(l)
    if idx.size == 0:
        raise ValueError(f"region {l} is empty")
    value = float(np.mean(vi_to_draws(wp.particles[l], s.subset(idx))))
    if normalized and s.n > 1:  # log2(1) = 0: everything is the sole partition
        value /= np.log2(s.n)
    return value


def compare_particles(wp: ParticleSummary, a: int, b: int) -> ParticleComparison:
    """VI distance between particles a and b together with its per-item and
    per-meet-cluster decompositions."""
    if a == b:
        raise ValueError("choose two distinct particles")
    if not (0 <= a < wp.L and 0 <= b < wp.L):
        raise ValueError(f"particle index out of range 0..{wp.L - 1}")
    pa, pb = wp.particles[a], wp.particles[b]
    return ParticleComparison(
        vi=vi_distance(pa, pb),
        vic=vi_contribution(pa, pb),
        vicg=vi_contribution_by_group(pa, pb),
    )


@dataclass
class DiagnosticsReport:
    """Bundle of the standard post-fit diagnostics."""

    decomposition: MeetDecomposition
    collapsed: PSM
    meet_evic: GroupedContribution
    region_evis: np.ndarray
    region_evis_normalized: np.ndarray
    pairwise: dict[tuple[int, int], ParticleComparison]
    region_psms: list[PSM] | None = None


def build_report(s: SampleSet, wp: ParticleSummary,
                 include_region_psms: bool = False) -> DiagnosticsReport:
    """Assemble the diagnostics, verifying the exact bookkeeping identities
    (weighted region EVIs reproduce the objective; weighted region PSMs
    reproduce the full PSM)."""
    decomp = particles_meet(wp)
    collapsed = collapsed_psm(wp, decomp)
    meet_evic = evi_contribution_particles(decomp.meet, wp)
    revis = np.array([region_evi(s, wp, l) for l in range(wp.L)])
    revis_norm = revis / np.log2(s.n) if s.n > 1 else revis.copy()
    pairwise = {
        (a, b): compare_particles(wp, a, b)
        for a in range(wp.L)
        for b in range(a + 1, wp.L)
    }
    check_identities(s, wp, region_evis=revis)
    psms = None
    if include_region_psms:
        psms = [region_psm(s, wp, l) for l in range(wp.L)]
    return DiagnosticsReport(
        decomposition=decomp,
        collapsed=collapsed,
        meet_evic=meet_evic,
        region_evis=revis,
        region_evis_normalized=revis_norm,
        pairwise=pairwise,
        region_psms=psms,
    )


def check_identities(s: SampleSet, wp: ParticleSummary, *,
                     region_evis: np.ndarray | None = None,
                     check_psm: bool = False, atol: float = 1e-9) -> None:
    """Assert the summary's internal identities; raises InvariantError."""
    from .summarize import InvariantError

    if region_evis is None:
        region_evis = np.array([region_evi(s, wp, l) for l in range(wp.L)])
    recon = float(np.dot(wp.weights, region_evis))
    if abs(recon - wp.wasserstein) > atol:
        raise InvariantError(
            f"weighted region EVIs give {recon!r}, summary objective is "
            f"{wp.wasserstein!r}"
        )
    if check_psm:
        full = psm(s).values
        mix = np.zeros_like(full)
        for l in range(wp.L):
            mix += wp.weights[l] * region_psm(s, wp, l).values
        if np.abs(mix - full).max() > atol:
            raise InvariantError("weighted region PSMs do not reproduce the full PSM")
