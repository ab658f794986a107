"""A short tour of the partition metric layer.

Run with:  python demos/metric_tour.py
"""

import numpy as np

from postpart import (
    canonicalize,
    entropy,
    meet,
    vi_contribution,
    vi_contribution_by_group,
    vi_distance,
)

# Partitions are label vectors; any ids work and are canonicalized, so two
# MCMC draws that only differ by label switching compare as equal.
a = canonicalize([7, 7, 2, 2, 2, 5])
b = canonicalize([0, 0, 0, 1, 1, 1])
print("a:", a.labels, " sizes", a.sizes)
print("b:", b.labels, " sizes", b.sizes)

print("\nentropy(a) =", round(entropy(a), 4), "bits")
print("entropy(b) =", round(entropy(b), 4), "bits")

# The variation of information is a metric on set partitions, bounded by
# log2(n).  Identical partitions sit at distance zero.
print("\nVI(a, b) =", round(vi_distance(a, b), 4), "bits",
      f"(upper bound log2(6) = {np.log2(6):.4f})")
print("VI(a, a) =", vi_distance(a, a))

# Each item carries a share of that distance: items whose cluster is the
# same set in both partitions contribute exactly zero.
vic = vi_contribution(a, b)
print("\nper-item contributions:", np.round(vic, 4), "-> sum",
      round(vic.sum(), 4))

# Aggregating the contributions over the clusters of the meet (the nonempty
# intersections of the two partitions) highlights coarse changes.
print("meet(a, b):", meet([a, b]).labels)
for cell, value in vi_contribution_by_group(a, b).items():
    print(f"  cell {cell}: {value:.4f}")
