import numpy as np
import pytest

from postpart import (
    PSM,
    SampleSet,
    SearchConfig,
    canonicalize,
    expected_vi,
    greedy_minvi,
    linkage_candidates,
    meet,
    psm,
    top_candidates_by_evi,
)

from conftest import random_sample_set
from oracles import all_partitions, minvi_brute


class TestGreedyMinvi:
    def test_unique_minimizer(self):
        p = canonicalize([0, 0, 1, 2])
        s = SampleSet.from_partitions([p] * 5)
        best = greedy_minvi(s, SearchConfig(seed=0))
        assert best == p
        assert expected_vi(best, s) == 0.0

    def test_all_partitions_of_five(self):
        parts = all_partitions(5)
        assert len(parts) == 52
        s = SampleSet.from_labels(np.array(parts))
        oracle_evi, _ = minvi_brute(s.matrix, 5)
        best = greedy_minvi(s, SearchConfig(runs=16, seed=1))
        assert expected_vi(best, s) == pytest.approx(oracle_evi, abs=1e-10)

    def test_majority_draw_wins(self):
        s = SampleSet.from_labels([[0, 0, 1, 1]] * 3 + [[0, 1, 2, 2]])
        oracle_evi, oracle_labels = minvi_brute(s.matrix, 4)
        assert list(oracle_labels) == [0, 0, 1, 1]
        best = greedy_minvi(s, SearchConfig(runs=8, seed=2))
        assert best.labels.tolist() == [0, 0, 1, 1]

    def test_matches_bruteforce_on_tiny_instances(self, rng):
        for trial in range(10):
            n = int(rng.integers(3, 6))
            s = random_sample_set(rng, n, int(rng.integers(2, 9)))
            oracle_evi, _ = minvi_brute(s.matrix, n)
            best = greedy_minvi(s, SearchConfig(runs=16, seed=trial))
            assert expected_vi(best, s) == pytest.approx(oracle_evi, abs=1e-10)

    def test_never_worse_than_best_draw(self, rng):
        for trial in range(10):
            n = int(rng.integers(3, 12))
            s = random_sample_set(rng, n, int(rng.integers(2, 15)))
            best_draw_evi = min(expected_vi(d, s) for d in s)
            best = greedy_minvi(s, SearchConfig(runs=2, seed=trial))
            assert expected_vi(best, s) <= best_draw_evi + 1e-12

    def test_sweeps_monotone(self, rng):
        # runs=1 gives a single restart, so the sweep trace is one run's
        s = random_sample_set(rng, 12, 10)
        trace: list = []
        greedy_minvi(s, SearchConfig(runs=1, seed=4), evi_trace=trace)
        assert trace
        assert all(b <= a + 1e-12 for a, b in zip(trace, trace[1:]))

    def test_incumbent_never_hurts(self, rng):
        s = random_sample_set(rng, 10, 8)
        incumbent = s.draw(0)
        best = greedy_minvi(s, SearchConfig(runs=1, seed=9), incumbent=incumbent)
        assert expected_vi(best, s) <= expected_vi(incumbent, s) + 1e-12

    def test_k_max_respected(self, rng):
        s = random_sample_set(rng, 10, 6)
        best = greedy_minvi(s, SearchConfig(k_max=2, runs=4, seed=3))
        assert best.k <= 2

    def test_empty_sample_set(self):
        with pytest.raises(ValueError):
            greedy_minvi(SampleSet.from_labels([[0, 1]]).subset([]),
                         SearchConfig())

    def test_deterministic(self, rng):
        s = random_sample_set(rng, 9, 7)
        a = greedy_minvi(s, SearchConfig(runs=4, seed=42))
        b = greedy_minvi(s, SearchConfig(runs=4, seed=42))
        assert a == b


class TestLinkageCandidates:
    def test_perfect_blocks(self):
        values = np.zeros((6, 6))
        values[:3, :3] = 1.0
        values[3:, 3:] = 1.0
        cuts = linkage_candidates(PSM(values=values), "average", 3)
        two = cuts[1]
        assert two.labels.tolist() == [0, 0, 0, 1, 1, 1]

    def test_k_max_one(self):
        values = np.eye(4)
        cuts = linkage_candidates(PSM(values=values), "complete", 1)
        assert len(cuts) == 1
        assert cuts[0].k == 1

    def test_single_merge_height(self):
        m = psm(SampleSet.from_labels([[0, 0], [0, 1]]))
        cuts = linkage_candidates(m, "average", 2)
        assert [c.labels.tolist() for c in cuts] == [[0, 0], [0, 1]]

    def test_cuts_are_nested(self, rng):
        s = random_sample_set(rng, 12, 15)
        for method in ("average", "complete"):
            cuts = linkage_candidates(psm(s), method, 8)
            assert [c.k for c in cuts] == list(range(1, 9))
            for coarse, fine in zip(cuts, cuts[1:]):
                assert meet([coarse, fine]) == fine

    def test_rejects_meet_level(self):
        m = PSM(values=np.eye(3), level="meet")
        with pytest.raises(ValueError):
            linkage_candidates(m, "average", 2)

    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError):
            linkage_candidates(PSM(values=np.eye(3)), "single", 2)


class TestTopCandidates:
    def test_single_best(self, rng):
        s = random_sample_set(rng, 8, 10)
        cands = [s.draw(i) for i in range(5)]
        (best,) = top_candidates_by_evi(cands, s, 1)
        evis = [expected_vi(c, s) for c in cands]
        assert expected_vi(best, s) == min(evis)

    def test_sorted_ascending(self):
        s = SampleSet.from_labels([[0, 0, 1, 1]] * 2 + [[0, 1, 2, 2]])
        cands = [canonicalize([0, 1, 2, 3]), canonicalize([0, 0, 1, 1]),
                 canonicalize([0, 0, 0, 0])]
        got = top_candidates_by_evi(cands, s, 2)
        evis = [expected_vi(c, s) for c in got]
        assert evis == sorted(evis)
        assert got[0] == canonicalize([0, 0, 1, 1])

    def test_full_list(self, rng):
        s = random_sample_set(rng, 6, 5)
        cands = [s.draw(i) for i in range(5)]
        got = top_candidates_by_evi(cands, s, 5)
        assert len(got) == 5

    def test_too_few(self, rng):
        s = random_sample_set(rng, 6, 5)
        with pytest.raises(ValueError):
            top_candidates_by_evi([s.draw(0)], s, 2)
