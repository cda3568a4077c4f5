import math

import numpy as np
import pytest

from seqsynth import (
    ClusterAssignment,
    ClusterWeights,
    ConfigError,
    Corpus,
    DataFormatError,
    DistanceMatrix,
    StateAlphabet,
    dunn_index,
    hierarchical_cluster,
    pairwise_distance,
    sample_cluster,
    select_clusters,
)
from seqsynth.clustering import Dendrogram, dunn_profile


def line_distance_matrix(points):
    pts = np.asarray(points, dtype=float)
    return DistanceMatrix(np.abs(pts[:, None] - pts[None, :]))


def brute_dunn(values, labels):
    n = len(labels)
    min_inter = math.inf
    max_diam = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] == labels[j]:
                max_diam = max(max_diam, values[i][j])
            else:
                min_inter = min(min_inter, values[i][j])
    return math.inf if max_diam == 0.0 else min_inter / max_diam


class TestPairwiseDistance:
    def test_hand_example(self):
        alphabet = StateAlphabet(("a", "b"))
        corpus = Corpus.from_arrays(alphabet, [[0, 1, 1, 0], [0, 1, 0, 1]])
        d = pairwise_distance(corpus)
        assert d.values[0, 1] == 2

    def test_identical_sequences(self):
        alphabet = StateAlphabet(("a", "b"))
        corpus = Corpus.from_arrays(alphabet, [[0, 1, 0], [0, 1, 0]])
        assert pairwise_distance(corpus).values[0, 1] == 0

    def test_symmetric_zero_diagonal(self):
        rng = np.random.default_rng(3)
        alphabet = StateAlphabet(tuple("abcd"))
        corpus = Corpus.from_arrays(alphabet, rng.integers(0, 4, (20, 60)))
        d = pairwise_distance(corpus).values
        assert np.array_equal(d, d.T)
        assert (np.diagonal(d) == 0).all()
        # spot-check against a direct positionwise count
        mat = corpus.states_matrix
        for i, j in [(0, 1), (3, 17), (5, 5)]:
            assert d[i, j] == int((mat[i] != mat[j]).sum())

    def test_needs_two_sequences(self):
        alphabet = StateAlphabet(("a",))
        corpus = Corpus.from_arrays(alphabet, [[0, 0]])
        with pytest.raises(DataFormatError):
            pairwise_distance(corpus)


class TestHierarchicalCluster:
    def test_line_merge_order(self):
        # {0,1} then {10,11} merge first under complete linkage
        dend = hierarchical_cluster(line_distance_matrix([0, 1, 10, 11]))
        assert dend.merges[0][:2] == (0, 1)
        assert dend.merges[1][:2] == (2, 3)
        assert dend.merges[2] == (4, 5, 11.0)

    def test_two_points(self):
        dend = hierarchical_cluster(line_distance_matrix([0, 5]))
        assert dend.merges == ((0, 1, 5.0),)

    def test_cut_extremes(self):
        dend = hierarchical_cluster(line_distance_matrix([0, 1, 10, 11]))
        assert dend.cut(4).tolist() == [0, 1, 2, 3]
        assert dend.cut(1).tolist() == [0, 0, 0, 0]
        assert dend.cut(2).tolist() == [0, 0, 1, 1]

    def test_average_linkage_heights(self):
        dend = hierarchical_cluster(
            line_distance_matrix([0, 1, 10, 11]), linkage="average"
        )
        heights = [h for _, _, h in dend.merges]
        assert heights == sorted(heights)
        assert heights[-1] == pytest.approx(10.0)  # mean of 9,10,10,11

    def test_monotone_heights_random(self):
        rng = np.random.default_rng(4)
        for linkage in ("complete", "average"):
            pts = rng.uniform(0, 100, 30)
            dend = hierarchical_cluster(line_distance_matrix(pts), linkage)
            heights = [h for _, _, h in dend.merges]
            assert all(a <= b + 1e-9 for a, b in zip(heights, heights[1:]))

    def test_matches_scipy_partitions(self):
        scipy_hierarchy = pytest.importorskip("scipy.cluster.hierarchy")
        squareform = pytest.importorskip("scipy.spatial.distance").squareform
        rng = np.random.default_rng(5)
        for linkage in ("complete", "average"):
            for trial in range(5):
                pts = rng.uniform(0, 1, (15, 3))
                dmat = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
                np.fill_diagonal(dmat, 0.0)
                dmat = (dmat + dmat.T) / 2
                ours = hierarchical_cluster(DistanceMatrix(dmat), linkage)
                theirs = scipy_hierarchy.linkage(squareform(dmat), method=linkage)
                for k in (2, 3, 5, 8):
                    got = ours.cut(k)
                    want = scipy_hierarchy.fcluster(theirs, k, criterion="maxclust")
                    got_parts = {frozenset(np.flatnonzero(got == c)) for c in set(got)}
                    want_parts = {
                        frozenset(np.flatnonzero(want == c)) for c in set(want)
                    }
                    assert got_parts == want_parts

    def test_single_point_rejected(self):
        with pytest.raises(DataFormatError):
            hierarchical_cluster(DistanceMatrix(np.zeros((1, 1))))


class TestDunnIndex:
    def test_line_clusters(self):
        d = line_distance_matrix([0, 1, 10, 11])
        assert dunn_index(d, ClusterAssignment([0, 0, 1, 1])) == pytest.approx(9.0)

    def test_mixed_assignment_below_one(self):
        d = line_distance_matrix([0, 1, 10, 11])
        assert dunn_index(d, ClusterAssignment([0, 1, 0, 1])) < 1.0

    def test_singletons_give_infinity(self):
        d = line_distance_matrix([0, 1, 2])
        assert dunn_index(d, ClusterAssignment([0, 1, 2])) == math.inf

    def test_requires_two_clusters(self):
        d = line_distance_matrix([0, 1])
        with pytest.raises(ConfigError):
            dunn_index(d, ClusterAssignment([0, 0]))

    def test_scale_invariant(self):
        rng = np.random.default_rng(6)
        pts = rng.uniform(0, 50, 12)
        labels = ClusterAssignment(rng.integers(0, 3, 12))
        base = line_distance_matrix(pts)
        scaled = DistanceMatrix(base.values * 7.25)
        assert dunn_index(scaled, labels) == pytest.approx(dunn_index(base, labels))

    def test_matches_brute_force_random(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(4, 11))
            pts = rng.uniform(0, 100, n)
            d = line_distance_matrix(pts)
            labels = rng.integers(0, rng.integers(2, n + 1), n)
            labels = ClusterAssignment.from_labels(labels).labels
            if labels.max() == 0:
                continue
            got = dunn_index(d, ClusterAssignment(labels))
            want = brute_dunn(d.values, labels)
            assert got == pytest.approx(want) or (
                math.isinf(got) and math.isinf(want)
            )


class TestSelectClusters:
    def test_two_blobs(self):
        d = line_distance_matrix([0, 1, 2, 100, 101, 102])
        dend = hierarchical_cluster(d)
        assignment = select_clusters(dend, d, (2, 5), min_size=1)
        assert assignment.k == 2
        assert assignment.labels.tolist() == [0, 0, 0, 1, 1, 1]

    def test_fixed_k_range(self):
        d = line_distance_matrix([0, 1, 2, 100, 101, 102])
        dend = hierarchical_cluster(d)
        assignment = select_clusters(dend, d, (2, 2), min_size=1)
        assert assignment.k == 2

    def test_small_clusters_grouped(self):
        # one big blob, two outliers: min_size larger than the outlier
        # clusters forces (largest + catch-all)
        d = line_distance_matrix([0, 1, 2, 3, 4, 50, 120])
        dend = hierarchical_cluster(d)
        assignment = select_clusters(dend, d, (3, 3), min_size=2)
        assert assignment.k == 2
        assert assignment.labels.tolist() == [0, 0, 0, 0, 0, 1, 1]

    def test_partition_preserved(self):
        rng = np.random.default_rng(8)
        pts = rng.uniform(0, 100, 40)
        d = line_distance_matrix(pts)
        dend = hierarchical_cluster(d)
        assignment = select_clusters(dend, d, (2, 8))
        assert assignment.n == 40
        assert assignment.sizes.sum() == 40

    def test_empty_k_range_rejected(self):
        d = line_distance_matrix([0, 1, 2])
        dend = hierarchical_cluster(d)
        with pytest.raises(ConfigError):
            dunn_profile(dend, d, (5, 4))


class TestSampleCluster:
    def test_size_weights_normalize(self):
        w = ClusterWeights(np.array([911.0, 808.0, 210.0]))
        assert w.normalized() == pytest.approx(
            [911 / 1929, 808 / 1929, 210 / 1929]
        )

    def test_single_cluster(self):
        rng = np.random.default_rng(9)
        w = ClusterWeights(np.ones(1))
        assert all(sample_cluster(w, rng) == 0 for _ in range(20))

    def test_degenerate_weight(self):
        rng = np.random.default_rng(10)
        w = ClusterWeights(np.array([1.0, 0.0]))
        assert all(sample_cluster(w, rng) == 0 for _ in range(50))

    def test_all_zero_rejected(self):
        with pytest.raises(DataFormatError, match="all-zero"):
            ClusterWeights(np.zeros(3))

    def test_frequencies_track_weights(self):
        rng = np.random.default_rng(11)
        w = ClusterWeights(np.array([911.0, 808.0, 210.0]))
        draws = np.array([sample_cluster(w, rng) for _ in range(20000)])
        freq = np.bincount(draws, minlength=3) / draws.size
        assert freq == pytest.approx(w.normalized(), abs=0.015)


class TestDendrogramValidation:
    def test_merge_count_enforced(self):
        with pytest.raises(DataFormatError):
            Dendrogram(((0, 1, 1.0),), 3)

    def test_height_order_enforced(self):
        with pytest.raises(DataFormatError):
            Dendrogram(((0, 1, 2.0), (2, 3, 1.0)), 3)
