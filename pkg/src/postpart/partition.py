"""Canonical partition labels and the pairwise partition mathematics.

A partition of n items is stored as a dense integer label vector in
*canonical form*: cluster ids are 0..k-1 in order of first occurrence, so
two label vectors describe the same set partition iff their canonical
forms are identical arrays.  All information quantities are in bits
(base-2 logarithms) and every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Partition",
    "ContingencyTable",
    "canonicalize",
    "contingency",
    "entropy",
    "vi_distance",
    "vi_contribution",
    "vi_contribution_by_group",
    "meet",
]

LABEL_DTYPE = np.int32


@lru_cache(maxsize=8)
def size_log_table(n: int) -> np.ndarray:
    """Table of z*log2(z) for z = 0..n (0*log(0) := 0).

    Entropy, mutual information and the VI are all sums of such terms over
    integer cluster/cell counts, so sharing one table keeps every code path
    bit-identical for identical counts.
    """
    z = np.arange(n + 1, dtype=np.float64)
    out = np.zeros(n + 1)
    out[1:] = z[1:] * np.log2(z[1:])
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Partition:
    """A set partition of n items in canonical label form.

    Build instances with :func:`canonicalize` unless the labels are already
    canonical (ids 0..k-1, first occurrences in increasing order).
    """

    labels: np.ndarray
    sizes: np.ndarray = field(compare=False)

    def __init__(self, labels: np.ndarray, sizes: np.ndarray | None = None):
        labels = np.ascontiguousarray(labels, dtype=LABEL_DTYPE)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a nonempty 1-d integer vector")
        if sizes is None:
            sizes = np.bincount(labels)
        sizes = np.asarray(sizes, dtype=np.int64)
        labels.setflags(write=False)
        sizes.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sizes", sizes)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def k(self) -> int:
        return self.sizes.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.labels.shape == other.labels.shape and bool(
            np.array_equal(self.labels, other.labels)
        )

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Partition(n={self.n}, k={self.k}, labels={self.labels.tolist()})"


@dataclass(frozen=True)
class ContingencyTable:
    """Cross-tabulation of two partitions over the same items."""

    counts: np.ndarray
    row_margins: np.ndarray
    col_margins: np.ndarray
    n: int


def canonicalize(raw_labels: Sequence[int] | np.ndarray) -> Partition:
    """Normalize an arbitrary label vector to canonical form.

    Cluster ids are renumbered 0..k-1 by order of first occurrence, so any
    two vectors inducing the same set partition map to the same Partition
    (this is what makes label-switching across MCMC draws harmless).
    """
    raw = np.asarray(raw_labels)
    if raw.ndim != 1 or raw.size == 0:
        raise ValueError("expected a nonempty 1-d label vector")
    _, first_index, inverse = np.unique(raw, return_index=True, return_inverse=True)
    # np.unique sorts by value; rank the unique values by first appearance.
    rank = np.empty(first_index.size, dtype=LABEL_DTYPE)
    rank[np.argsort(first_index, kind="stable")] = np.arange(
        first_index.size, dtype=LABEL_DTYPE
    )
    return Partition(rank[inverse])


def contingency(a: Partition, b: Partition) -> ContingencyTable:
    """Cell (j1, j2) counts the items in cluster j1 of ``a`` and j2 of ``b``."""
    if a.n != b.n:
        raise ValueError(f"partition lengths differ: {a.n} != {b.n}")
    counts = np.zeros((a.k, b.k), dtype=np.int64)
    np.add.at(counts, (a.labels, b.labels), 1)
    return ContingencyTable(counts=counts, row_margins=a.sizes.copy(),
                            col_margins=b.sizes.copy(), n=a.n)


def entropy(p: Partition) -> float:
    """Entropy of the cluster-size distribution, in bits."""
    ftab = size_log_table(p.n)
    return (p.n * np.log2(p.n) - float(ftab[p.sizes].sum())) / p.n


def vi_distance(a: Partition, b: Partition) -> float:
    """Variation of information between two partitions, in bits.

    Computed through the contingency table as
    (sum_j f(n_j) + sum_c f(m_c) - 2 sum_cells f(x)) / n with f(z) = z log2 z,
    which equals H(a) + H(b) - 2 MI(a, b).  A metric on partitions, bounded
    above by log2(n).
    """
    table = contingency(a, b)
    ftab = size_log_table(a.n)
    cells = table.counts[table.counts > 0]
    total = ftab[table.row_margins].sum() + ftab[table.col_margins].sum()
    return max(float(total - 2.0 * ftab[cells].sum()) / a.n, 0.0)


def _cell_contributions(a: Partition, b: Partition):
    """Per-cell VI contribution of one item in each nonempty contingency cell.

    Items in cell (j1, j2) each contribute
    (log2 n_j1 + log2 m_j2 - 2 log2 x_{j1,j2}) / n.  Keeping integer counts
    inside the logs makes the value exactly equal for items in the same cell.
    """
    table = contingency(a, b)
    rows, cols = np.nonzero(table.counts)
    x = table.counts[rows, cols]
    per_item = (
        np.log2(table.row_margins[rows])
        + np.log2(table.col_margins[cols])
        - 2.0 * np.log2(x)
    ) / a.n
    return table, rows, cols, x, per_item


def vi_contribution(a: Partition, b: Partition) -> np.ndarray:
    """Per-item decomposition of the VI: entries sum to vi_distance(a, b).

    The contribution is constant across items sharing a cluster of
    meet(a, b) and zero exactly when an item's cluster is identical in both
    partitions.
    """
    _, rows, cols, _, per_item = _cell_contributions(a, b)
    lookup = np.zeros((a.k, b.k))
    lookup[rows, cols] = per_item
    return lookup[a.labels, b.labels]


def vi_contribution_by_group(a: Partition, b: Partition) -> dict[tuple[int, int], float]:
    """Aggregate VI contribution of each nonempty contingency cell.

    The cells are exactly the clusters of meet(a, b); the values sum to
    vi_distance(a, b) and each equals the cell count times the per-item
    contribution there.
    """
    _, rows, cols, x, per_item = _cell_contributions(a, b)
    return {
        (int(j1), int(j2)): float(cnt * v)
        for j1, j2, cnt, v in zip(rows, cols, x, per_item)
    }


def meet(parts: Iterable[Partition]) -> Partition:
    """Greatest lower bound of the given partitions in the partition lattice.

    Two items share a meet cluster iff they share a cluster in every input;
    equivalently the meet's clusters are the nonempty intersections of the
    inputs' clusters.
    """
    parts = list(parts)
    if not parts:
        raise ValueError("meet of an empty collection is undefined")
    n = parts[0].n
    combined = parts[0]
    for p in parts[1:]:
        if p.n != n:
            raise ValueError(f"partition lengths differ: {p.n} != {n}")
        # Pair (current, next) cluster ids, then renumber by first occurrence.
        paired = combined.labels.astype(np.int64) * p.k + p.labels
        combined = canonicalize(paired)
    if combined is parts[0]:
        combined = Partition(parts[0].labels)
    return combined
