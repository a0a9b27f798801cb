import itertools

import numpy as np
import pytest

from src.clustering import (
    ClusterAssignment, LoadDrivenClusterer, LoadHistory, calinski_harabasz, default_h_range, init_centroids,
    run_kmeans, select_num_clusters, sse, stage_averaged_load,
)
from src.errors import ClusteringError

FOUR = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]])


def test_stage_averaged_load():
    assert stage_averaged_load(LoadHistory([[0.2], [0.4], [0.6]])) == pytest.approx([0.4])
    assert stage_averaged_load(LoadHistory(np.full((10, 1), 0.5))) == pytest.approx([0.5])
    assert stage_averaged_load(LoadHistory([[1.0, 0.0], [0.0, 1.0]])) == pytest.approx([0.5, 0.5])


def test_stage_averaged_load_rejects_empty_history():
    with pytest.raises(ClusteringError):
        stage_averaged_load(LoadHistory(np.zeros((0, 3))))


def test_load_history_rejects_negative_loads():
    with pytest.raises(ClusteringError):
        LoadHistory([[0.1, -0.2]])


def test_init_centroids_ranks_by_load():
    pos = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    assert init_centroids([0.1, 0.9, 0.5], pos, 1).tolist() == [[2.0, 2.0]]
    assert sorted(init_centroids([0.1, 0.9, 0.5], pos, 3).tolist()) == pos.tolist()
    # equal loads: lower ids first
    assert init_centroids([0.3, 0.3, 0.3], pos, 2).tolist() == [[1.0, 1.0], [2.0, 2.0]]


@pytest.mark.parametrize("H", [0, 4])
def test_init_centroids_rejects_bad_h(H):
    with pytest.raises(ClusteringError):
        init_centroids([0.1, 0.2, 0.3], np.zeros((3, 2)), H)


def test_init_centroids_is_permutation_invariant():
    rng = np.random.default_rng(4)
    loads, pos = rng.uniform(size=8), rng.uniform(0, 300, size=(8, 2))
    perm = rng.permutation(8)
    a = init_centroids(loads, pos, 3)
    b = init_centroids(loads[perm], pos[perm], 3)
    assert a.tolist() == b.tolist()


def test_kmeans_two_groups_matches_brute_force():
    result = run_kmeans(FOUR, FOUR[[0, 2]])
    assert result.clusters() == [[0, 1], [2, 3]]
    assert result.centroids.tolist() == [[0.0, 0.5], [10.0, 0.5]]

    best = min(
        sse(FOUR, np.array(labels), np.array([FOUR[np.array(labels) == h].mean(axis=0) for h in (0, 1)]))
        for labels in itertools.product((0, 1), repeat=4) if len(set(labels)) == 2
    )
    assert result.sse == pytest.approx(best)


def test_kmeans_with_one_centroid_per_sbs_has_zero_sse():
    assert run_kmeans(FOUR, FOUR).sse == 0.0


def test_kmeans_single_cluster_centroid_is_the_mean():
    result = run_kmeans(FOUR, FOUR[:1])
    assert result.centroids[0] == pytest.approx(FOUR.mean(axis=0))


def test_kmeans_rejects_empty_centroids():
    with pytest.raises(ClusteringError):
        run_kmeans(FOUR, np.zeros((0, 2)))


def test_kmeans_sse_never_increases_and_partitions_every_sbs():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(3, 15))
        H = int(rng.integers(1, n + 1))
        pos = rng.uniform(0, 300, size=(n, 2))
        result = run_kmeans(pos, init_centroids(rng.uniform(size=n), pos, H))
        assert np.all(np.diff(result.sse_history) <= 1e-9)
        assert len(result.membership) == n
        assert set(result.membership.tolist()) == set(range(H))
        for h in range(H):
            assert np.allclose(result.centroids[h], pos[result.membership == h].mean(axis=0), atol=1e-9)


def test_kmeans_repairs_empty_clusters():
    pos = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    # the far-away centroid captures nothing on the first pass
    result = run_kmeans(pos, np.array([[1.0, 0.0], [500.0, 500.0]]))
    assert set(result.membership.tolist()) == {0, 1}


def _assignment(labels, positions):
    labels = np.asarray(labels)
    H = labels.max() + 1
    centroids = np.array([positions[labels == h].mean(axis=0) for h in range(H)])
    return ClusterAssignment(H=H, membership=labels, centroids=centroids)


def test_calinski_harabasz_hand_computed():
    pos = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0]])
    assert calinski_harabasz(_assignment([0, 0, 1, 1], pos), pos) == pytest.approx(200.0)


def test_calinski_harabasz_coincident_clusters_score_infinite():
    pos = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]])
    assert calinski_harabasz(_assignment([0, 0, 1, 1], pos), pos) == float("inf")


def test_calinski_harabasz_prefers_the_true_partition():
    pos = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [11.0, 0.0]])
    assert calinski_harabasz(_assignment([0, 1, 0, 1], pos), pos) < calinski_harabasz(_assignment([0, 0, 1, 1], pos), pos)


def test_calinski_harabasz_undefined_for_trivial_h():
    with pytest.raises(ClusteringError):
        calinski_harabasz(_assignment([0, 0, 0, 0], FOUR), FOUR)
    with pytest.raises(ClusteringError):
        calinski_harabasz(_assignment([0, 1, 2, 3], FOUR), FOUR)


TWO_GROUPS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [100.0, 100.0], [101.0, 100.0], [100.0, 101.0]])


def test_select_num_clusters_finds_two_groups():
    result = select_num_clusters(TWO_GROUPS, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6], [2, 3])
    assert result.H == 2
    assert result.clusters() in ([[0, 1, 2], [3, 4, 5]], [[3, 4, 5], [0, 1, 2]])
    assert set(result.candidate_scores) == {2, 3}


def test_select_num_clusters_single_candidate():
    assert select_num_clusters(TWO_GROUPS, np.ones(6), [3]).H == 3


def test_select_num_clusters_rejects_bad_ranges():
    with pytest.raises(ClusteringError):
        select_num_clusters(TWO_GROUPS, np.ones(6), [])
    with pytest.raises(ClusteringError):
        select_num_clusters(TWO_GROUPS, np.ones(6), [1, 2])
    with pytest.raises(ClusteringError):
        select_num_clusters(TWO_GROUPS, np.ones(6), [6])


def test_default_twelve_sbs_clustering_is_a_partition():
    rng = np.random.default_rng(12)
    pos = rng.uniform(0, 300, size=(12, 2))
    result = select_num_clusters(pos, rng.uniform(size=12), default_h_range(12))
    assert 2 <= result.H <= 6
    assert sorted(i for c in result.clusters() for i in c) == list(range(12))
    assert all(result.clusters())


def test_clusterer_falls_back_to_one_cluster_for_tiny_networks():
    pos = np.array([[0.0, 0.0], [50.0, 50.0]])
    result = LoadDrivenClusterer().cluster(pos, LoadHistory([[0.2, 0.4]]))
    assert result.H == 1 and result.clusters() == [[0, 1]]
