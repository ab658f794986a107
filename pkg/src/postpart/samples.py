"""Posterior samples of partitions and the quantities computed from them.

A :class:`SampleSet` holds T MCMC partition draws over the same n items,
stored as canonical label rows so that label-switching across draws is
invisible to every downstream computation.  Draws are unweighted: the
empirical posterior puts mass 1/T on each.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .partition import LABEL_DTYPE, Partition, canonicalize, size_log_table

__all__ = [
    "SampleSet",
    "PSM",
    "psm",
    "expected_vi",
    "vi_to_draws",
    "evi_contribution_mcmc",
    "subsample",
]


@lru_cache(maxsize=8)
def _log2_table(n: int) -> np.ndarray:
    out = np.zeros(n + 1)
    out[1:] = np.log2(np.arange(1, n + 1, dtype=np.float64))
    out.setflags(write=False)
    return out


def _canonicalize_matrix(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Canonicalize every row; returns (int32 matrix, per-row cluster counts)."""
    raw = np.atleast_2d(np.asarray(raw))
    if raw.size == 0:
        raise ValueError("sample set needs at least one draw")
    lo = raw.min()
    hi = raw.max()
    n = raw.shape[1]
    if lo >= 0 and hi <= 4 * n + 64:
        mat = np.ascontiguousarray(raw, dtype=LABEL_DTYPE).copy()
        ks = _kernels.canonicalize_rows(mat, int(hi))
    else:
        # arbitrary (sparse / negative) ids: go row by row
        mat = np.empty(raw.shape, dtype=LABEL_DTYPE)
        ks = np.empty(raw.shape[0], dtype=np.int32)
        for t in range(raw.shape[0]):
            p = canonicalize(raw[t])
            mat[t] = p.labels
            ks[t] = p.k
    return mat, ks


class SampleSet:
    """T canonical partition draws over the same n items."""

    def __init__(self, matrix: np.ndarray, ks: np.ndarray | None = None, *,
                 _trusted: bool = False):
        if _trusted:
            self.matrix = matrix
            self.ks = ks
        else:
            self.matrix, self.ks = _canonicalize_matrix(matrix)
        self.matrix.setflags(write=False)
        self.ks.setflags(write=False)

    @classmethod
    def from_labels(cls, rows) -> "SampleSet":
        return cls(np.asarray(rows))

    @classmethod
    def from_partitions(cls, parts: Sequence[Partition]) -> "SampleSet":
        if not parts:
            raise ValueError("sample set needs at least one draw")
        n = parts[0].n
        if any(p.n != n for p in parts):
            raise ValueError("all draws must cover the same items")
        mat = np.vstack([p.labels for p in parts]).astype(LABEL_DTYPE)
        ks = np.array([p.k for p in parts], dtype=np.int32)
        return cls(mat, ks, _trusted=True)

    @property
    def T(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.T

    def draw(self, t: int) -> Partition:
        return Partition(self.matrix[t])

    def __iter__(self) -> Iterator[Partition]:
        for t in range(self.T):
            yield self.draw(t)

    def subset(self, index) -> "SampleSet":
        """New SampleSet holding the selected draws (order preserved)."""
        idx = np.asarray(index, dtype=np.int64)
        mat = np.ascontiguousarray(self.matrix[idx])
        return SampleSet(mat, self.ks[idx].copy(), _trusted=True)

    def thin(self, stride: int) -> "SampleSet":
        if stride <= 1:
            return self
        return self.subset(np.arange(0, self.T, stride))

    def distinct_count(self) -> int:
        return np.unique(self.matrix, axis=0).shape[0]

    def max_clusters(self) -> int:
        return int(self.ks.max())

    def __repr__(self) -> str:  # pragma: no cover
        return f"SampleSet(T={self.T}, n={self.n})"


@dataclass(frozen=True)
class PSM:
    """Symmetric co-clustering probability matrix.

    ``level`` is "item" for the usual n x n posterior similarity matrix and
    "meet" when rows index clusters of a meet partition instead of items.
    """

    values: np.ndarray
    level: str = "item"

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def psm(s: SampleSet) -> PSM:
    """Item-level posterior similarity matrix: fraction of draws in which
    each pair of items shares a cluster."""
    counts = _kernels.coclustering_counts(s.matrix)
    return PSM(values=counts / s.T, level="item")


def vi_to_draws(p: Partition, s: SampleSet) -> np.ndarray:
    """VI distance from ``p`` to every draw, in draw order."""
    if p.n != s.n:
        raise ValueError(f"dimension mismatch: partition n={p.n}, draws n={s.n}")
    ftab = size_log_table(s.n)
    return _kernels.vi_to_rows(p.labels, p.k, s.matrix, s.ks, ftab)


def expected_vi(p: Partition, s: SampleSet) -> float:
    """Mean VI distance from ``p`` to the draws (the expected VI under the
    empirical posterior)."""
    return float(np.mean(vi_to_draws(p, s)))


def evi_contribution_mcmc(p: Partition, s: SampleSet) -> np.ndarray:
    """Per-item decomposition of expected_vi(p, s): entry i is the mean over
    draws of item i's VI contribution, and the entries sum to the EVI."""
    if p.n != s.n:
        raise ValueError(f"dimension mismatch: partition n={p.n}, draws n={s.n}")
    return _kernels.mean_vi_contribution(
        p.labels, p.k, p.sizes, s.matrix, s.ks, _log2_table(s.n)
    )


def subsample(s: SampleSet, B: int, seed) -> SampleSet:
    """B draws without replacement; deterministic for a given seed."""
    if not 1 <= B <= s.T:
        raise ValueError(f"subsample size {B} outside 1..{s.T}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return s.subset(rng.choice(s.T, size=B, replace=False))
