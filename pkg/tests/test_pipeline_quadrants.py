"""End-to-end exercise of the four-quadrant scenario.

Data from four overlapping Gaussian components at (+-m, +-m) produces a
multimodal posterior whose particles merge different pairs of quadrants.
The assertions are deliberately loose: they pin the qualitative structure
(objective drops flatten after three particles; the particles' meet is
dominated by the four quadrant clusters plus small boundary clusters), not
any point realization.
"""

import numpy as np
import pytest

from postpart import SearchConfig, SummaryConfig, simulate, summarize
from postpart.diagnostics import particles_meet, region_evi


@pytest.fixture(scope="module")
def quadrant_results():
    data, _ = simulate.gen_mixture(simulate.quadrant_spec(m=1.25, n=600, seed=5))
    hyper = simulate.default_hyper(data, alpha="1")
    draws = simulate.dpm_gibbs(data, hyper, iters=6000, burnin=3000, thin=3,
                               seed=31)
    cfg = SummaryConfig(n_particles=1, runs=3, seed=9, init="topvi",
                        search=SearchConfig(runs=2), threads=2)
    return draws, summarize.elbow(draws, [1, 2, 3, 4], cfg)


def test_elbow_flattens_after_three_particles(quadrant_results):
    _, results = quadrant_results
    ws = [w for _, w, _ in results]
    assert all(b <= a for a, b in zip(ws, ws[1:]))
    early = ws[0] - ws[2]   # objective explained by going to L = 3
    late = ws[2] - ws[3]    # additional gain from a fourth particle
    assert early > 2 * late


def test_three_particles_merge_quadrant_pairs(quadrant_results):
    _, results = quadrant_results
    res = results[2][2]
    assert res.L == 3
    assert all(2 <= p.k <= 5 for p in res.particles)
    assert (res.weights > 0.05).all()


def test_meet_recovers_quadrants_plus_boundaries(quadrant_results):
    _, results = quadrant_results
    res = results[2][2]
    decomp = particles_meet(res)
    sizes = np.sort(decomp.meet.sizes)[::-1]
    assert decomp.meet.k >= 4
    # four dominant clusters (the quadrants) carry most of the items, the
    # rest are small boundary groups
    assert sizes[:4].sum() >= 0.75 * 600
    if decomp.meet.k > 4:
        assert sizes[4] <= 0.15 * 600


def test_region_spreads_are_normalized(quadrant_results):
    draws, results = quadrant_results
    res = results[2][2]
    for l in range(res.L):
        v = region_evi(draws, res, l, normalized=True)
        assert 0.0 < v < 1.0
