import itertools

import numpy as np
import pytest

from mapperstab.clustering import (ClustererConfig, canonical_labels,
                                   epsilon_cluster, kmeans_cluster,
                                   voronoi_extend)
from mapperstab.dataset import PointCloud
from mapperstab.errors import ExtensionError, ParameterError


# --- independent oracles ----------------------------------------------------

def components_oracle(points, members, eps):
    """Brute-force adjacency + DFS connected components."""
    pts = points[members]
    m = len(pts)
    adj = [[] for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            if np.linalg.norm(pts[i] - pts[j]) <= eps:
                adj[i].append(j)
                adj[j].append(i)
    comp = [-1] * m
    c = 0
    for start in range(m):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = c
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if comp[v] < 0:
                    comp[v] = c
                    stack.append(v)
        c += 1
    return comp


def partition_of(bc):
    """Clustering as a set of frozensets of member indices."""
    return {
        frozenset(bc.members[bc.labels == lab].tolist())
        for lab in range(1, bc.s + 1)
    }


def kmeans_objective(points, members, labels):
    """Mean distance to the centroid of the assigned cluster, by definition."""
    pts = points[members]
    total = 0.0
    for lab in set(labels):
        sel = pts[[l == lab for l in labels]]
        c = sel.mean(axis=0)
        total += np.linalg.norm(sel - c, axis=1).sum()
    return total / len(members)


def nearest_scan_oracle(points, sample, labels, queries):
    """Linear-scan nearest neighbour with first-wins tie-breaking."""
    out = []
    for q in queries:
        best, best_d = None, None
        for pos, s in enumerate(sample):
            d = np.linalg.norm(points[q] - points[s])
            if best_d is None or d < best_d:
                best, best_d = pos, d
        out.append(labels[best])
    return out


# --- epsilon clustering -----------------------------------------------------

def test_epsilon_forced_components():
    cloud = PointCloud([[0.0], [1.0], [10.0]])
    bc = epsilon_cluster(cloud, [0, 1, 2], epsilon=2.0)
    assert bc.s == 2
    assert partition_of(bc) == {frozenset({0, 1}), frozenset({2})}


def test_epsilon_larger_than_diameter_single_cluster():
    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.normal(size=(20, 2)))
    bc = epsilon_cluster(cloud, range(20), epsilon=100.0)
    assert bc.s == 1


def test_epsilon_against_dfs_oracle():
    rng = np.random.default_rng(123)
    cloud = PointCloud(rng.normal(size=(30, 2)))
    members = np.arange(30)
    dists = [
        np.linalg.norm(cloud.points[i] - cloud.points[j])
        for i in range(30) for j in range(i + 1, 30)
    ]
    eps = float(np.median(dists))
    bc = epsilon_cluster(cloud, members, epsilon=eps)
    comp = components_oracle(cloud.points, members, eps)
    expected = {
        frozenset(int(members[i]) for i in range(30) if comp[i] == c)
        for c in set(comp)
    }
    assert partition_of(bc) == expected


def test_epsilon_monotone_refinement():
    rng = np.random.default_rng(5)
    cloud = PointCloud(rng.normal(size=(40, 2)))
    members = np.arange(40)
    parts = [
        partition_of(epsilon_cluster(cloud, members, epsilon=e))
        for e in (0.2, 0.5, 1.0, 2.0)
    ]
    for finer, coarser in zip(parts, parts[1:]):
        for cluster in finer:
            assert any(cluster <= big for big in coarser)


def test_epsilon_empty_bin():
    cloud = PointCloud([[0.0, 0.0]])
    bc = epsilon_cluster(cloud, [], epsilon=1.0)
    assert bc.s == 0 and bc.members.size == 0


def test_epsilon_requires_positive_radius():
    cloud = PointCloud([[0.0]])
    with pytest.raises(ParameterError):
        epsilon_cluster(cloud, [0], epsilon=0.0)


# --- kmeans -----------------------------------------------------------------

def test_kmeans_two_far_pairs_matches_enumeration():
    pts = np.array([[0.0, 0.0], [0.0, 1.0], [100.0, 0.0], [100.0, 1.0]])
    cloud = PointCloud(pts)
    members = np.arange(4)
    bc = kmeans_cluster(cloud, members, K=2, seed=0)
    assert partition_of(bc) == {frozenset({0, 1}), frozenset({2, 3})}
    # oracle: enumerate every 2-labelling, take the least objective
    best = min(
        kmeans_objective(pts, members, labs)
        for labs in itertools.product([1, 2], repeat=4)
        if len(set(labs)) == 2
    )
    achieved = kmeans_objective(pts, members, list(bc.labels))
    assert achieved == pytest.approx(best)
    # two within-pair half-distances, averaged over n=4
    assert best == pytest.approx((1.0 + 1.0) / 4)


def test_kmeans_k1_objective_is_mean_distance_to_centroid():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(10, 2))
    cloud = PointCloud(pts)
    bc, info = kmeans_cluster(cloud, np.arange(10), K=1, seed=0, return_info=True)
    assert bc.s == 1
    c = pts.mean(axis=0)
    assert info["objective"] == pytest.approx(
        np.linalg.norm(pts - c, axis=1).mean())


def test_kmeans_degenerate_bin_sizes():
    cloud = PointCloud([[0.0, 0.0], [5.0, 5.0], [9.0, 1.0]])
    bc = kmeans_cluster(cloud, [1], K=2, seed=0)
    assert bc.s == 1 and list(bc.members) == [1]
    bc = kmeans_cluster(cloud, [0, 2], K=5, seed=0)
    assert bc.s == 2  # one singleton per point
    bc = kmeans_cluster(cloud, [], K=2, seed=0)
    assert bc.s == 0


def test_kmeans_k0_is_parameter_error():
    cloud = PointCloud([[0.0, 0.0]])
    with pytest.raises(ParameterError):
        kmeans_cluster(cloud, [0], K=0, seed=0)


def test_kmeans_lloyd_objective_never_increases():
    rng = np.random.default_rng(99)
    cloud = PointCloud(rng.normal(size=(200, 2)))
    for seed in range(5):
        _, info = kmeans_cluster(cloud, np.arange(200), K=4, seed=seed,
                                 restarts=1, return_info=True)
        trace = info["trace"]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(trace, trace[1:]))


def test_kmeans_deterministic_given_seed():
    rng = np.random.default_rng(4)
    cloud = PointCloud(rng.normal(size=(60, 2)))
    a = kmeans_cluster(cloud, np.arange(60), K=3, seed=7)
    b = kmeans_cluster(cloud, np.arange(60), K=3, seed=7)
    assert np.array_equal(a.labels, b.labels)


def test_kmeans_coincident_points():
    cloud = PointCloud(np.zeros((6, 2)))
    bc = kmeans_cluster(cloud, np.arange(6), K=3, seed=1)
    assert bc.members.size == 6
    assert set(bc.labels) <= {1, 2, 3}


# --- voronoi extension ------------------------------------------------------

def test_voronoi_sample_point_keeps_own_label():
    cloud = PointCloud([[0.0], [1.0], [2.0], [3.0], [4.0]])
    labels = np.array([1, 2, 1, 2, 1])
    out = voronoi_extend(cloud, [0, 1, 2, 3, 4], labels, [3])
    assert list(out) == [2]


def test_voronoi_tie_goes_to_smaller_sample_position():
    # query at 2.0 is equidistant from sample points at 1.0 and 3.0
    cloud = PointCloud([[1.0], [3.0], [2.0]])
    out = voronoi_extend(cloud, [0, 1], np.array([7, 9]), [2])
    assert list(out) == [7]


def test_voronoi_against_scan_oracle():
    rng = np.random.default_rng(21)
    cloud = PointCloud(rng.normal(size=(40, 3)))
    sample = np.arange(0, 40, 2)
    queries = np.arange(1, 40, 2)
    labels = rng.integers(1, 4, sample.size)
    out = voronoi_extend(cloud, sample, labels, queries)
    assert list(out) == nearest_scan_oracle(cloud.points, sample, labels, queries)


def test_voronoi_restricted_to_sample_is_identity():
    rng = np.random.default_rng(8)
    cloud = PointCloud(rng.normal(size=(15, 2)))
    sample = np.arange(15)
    labels = rng.integers(1, 3, 15)
    assert np.array_equal(voronoi_extend(cloud, sample, labels, sample), labels)


def test_voronoi_empty_sample_is_extension_error():
    cloud = PointCloud([[0.0]])
    with pytest.raises(ExtensionError):
        voronoi_extend(cloud, [], [], [0])


def test_voronoi_label_equivariance():
    rng = np.random.default_rng(31)
    cloud = PointCloud(rng.normal(size=(30, 2)))
    sample, queries = np.arange(15), np.arange(15, 30)
    labels = rng.integers(1, 4, 15)
    relabel = {1: 5, 2: 9, 3: 2}
    base = voronoi_extend(cloud, sample, labels, queries)
    swapped = voronoi_extend(cloud, sample,
                             np.array([relabel[l] for l in labels]), queries)
    assert [relabel[l] for l in base] == list(swapped)


def test_canonical_labels_first_occurrence():
    labels, s = canonical_labels(np.array([9, 9, 4, 9, 4, 7]))
    assert list(labels) == [1, 1, 2, 1, 2, 3]
    assert s == 3


def test_clusterer_config_validation():
    with pytest.raises(ParameterError):
        ClustererConfig(method="epsilon", epsilon=0.0)
    with pytest.raises(ParameterError):
        ClustererConfig(method="kmeans", K=0)
    with pytest.raises(ParameterError):
        ClustererConfig(method="nope")
