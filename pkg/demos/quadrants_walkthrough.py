"""Four overlapping clusters: reading the diagnostics of a summary.

Four Gaussian components at (+-m, +-m) overlap enough that posterior draws
disagree about which quadrants merge.  After fitting a three-particle
summary, the diagnostics show where the particles agree (their meet), how
often meet clusters co-cluster (collapsed similarity matrix), and which
regions of the data drive the residual uncertainty (contributions to the
expected VI).

Run with:  python demos/quadrants_walkthrough.py   (about a minute)
"""

import numpy as np

from postpart import SearchConfig, SummaryConfig, simulate, summarize
from postpart.diagnostics import (
    build_report,
    compare_particles,
    evi_contribution_particles,
)

data, truth = simulate.gen_mixture(simulate.quadrant_spec(m=1.25, n=600, seed=5))
hyper = simulate.default_hyper(data, alpha="1")
draws = simulate.dpm_gibbs(data, hyper, iters=6000, burnin=3000, thin=3, seed=31)

res = summarize.run(draws, SummaryConfig(n_particles=3, runs=4, seed=9,
                                         init="topvi",
                                         search=SearchConfig(runs=2),
                                         threads=2))
print("three-particle summary:")
for l, (w, p) in enumerate(zip(res.weights, res.particles)):
    print(f"  particle {l}: weight {w:.3f}, {p.k} clusters, "
          f"sizes {np.sort(p.sizes)[::-1]}")

report = build_report(draws, res)
decomp = report.decomposition
order = np.argsort(decomp.meet.sizes)[::-1]
print(f"\nmeet of the particles: {decomp.meet.k} clusters")
print("  sizes:", decomp.meet.sizes[order])

print("\ncollapsed similarity of the four largest meet clusters")
print("(share of particle weight in which the pair co-clusters):")
top = order[:4]
print(np.round(report.collapsed.values[np.ix_(top, top)], 3))

evic = evi_contribution_particles(decomp.meet, res)
print("\ncontribution of each meet cluster to the meet's expected VI")
print("(larger = less stable cluster membership):")
for m in order[:6]:
    print(f"  meet cluster {m} (size {decomp.meet.sizes[m]:3d}): "
          f"{evic.values[m] * decomp.meet.sizes[m]:.4f} bits")

print("\nspread of draws around each particle (normalized to [0, 1]):")
print(" ", np.round(report.region_evis_normalized, 3))

comp = compare_particles(res, 0, 1)
print(f"\nparticles 0 vs 1: VI {comp.vi:.3f} bits; the largest cell "
      f"contributions come from the groups they allocate differently:")
for cell, v in sorted(comp.vicg.items(), key=lambda kv: -kv[1])[:3]:
    print(f"  cell {cell}: {v:.4f}")
