import numpy as np
import pytest

from postpart import Partition, SampleSet, canonicalize


def random_partition(rng: np.random.Generator, n: int) -> Partition:
    k = int(rng.integers(1, n + 1))
    labels = rng.integers(0, k, size=n)
    labels[rng.integers(0, n)] = 0  # make sure label 0 occurs
    return canonicalize(labels)


def random_sample_set(rng: np.random.Generator, n: int, T: int) -> SampleSet:
    return SampleSet.from_partitions([random_partition(rng, n) for _ in range(T)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
