import json

import numpy as np
import pytest

from conftest import make_cover, make_function
from mapperstab.clustering import ClustererConfig
from mapperstab.cover import assign_bins, axis_filter, interval_cover
from mapperstab.dataset import PointCloud
from mapperstab.errors import DomainError, ParameterError
from mapperstab.mapper import (build_mapper, extend_voronoi,
                               mapper_function_from_json,
                               mapper_function_to_json, nerve, restrict)


def eps_config(eps):
    return ClustererConfig(method="epsilon", epsilon=eps)


def partitions(f):
    return [
        {frozenset(bc.members[bc.labels == lab].tolist())
         for lab in range(1, bc.s + 1)}
        for bc in f.clusterings
    ]


def loop_with_flares_cloud():
    angles = np.linspace(0, 2 * np.pi, 40, endpoint=False)
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    flare1 = np.stack([np.full(8, -0.5), np.linspace(-1.0, -2.0, 8)], axis=1)
    flare2 = np.stack([np.full(8, 0.5), np.linspace(-1.0, -2.0, 8)], axis=1)
    return PointCloud(np.concatenate([circle, flare1, flare2]))


# --- build_mapper -------------------------------------------------------------

def test_disjoint_bins_single_clusters():
    cloud = PointCloud([[0.0], [0.1], [5.0], [5.1]])
    values = axis_filter(cloud, 0)
    cover = assign_bins(interval_cover(values, t=2, gain=0.0), values)
    f = build_mapper(cloud, cover, eps_config(1.0))
    assert [bc.s for bc in f.clusterings] == [1, 1]
    for point in range(4):
        assert len(f.label_set(point)) == 1


def test_loop_and_two_flares_graph():
    cloud = loop_with_flares_cloud()
    values = axis_filter(cloud, 1)
    cover = assign_bins(interval_cover(values, t=6, gain=0.3), values)
    f = build_mapper(cloud, cover, eps_config(0.35))
    summary = nerve(f).summary()
    assert summary["components"] == 1
    assert summary["cycles"] == 1  # one independent loop


def test_shared_cluster_points_make_edge_weight():
    cover = make_cover([range(0, 8), range(3, 12)], 12)
    f = make_function(cover, [{p: 1 for p in range(0, 8)},
                              {p: 1 for p in range(3, 12)}])
    graph = nerve(f)
    assert graph.edges == [((0, 1), 5)]  # overlap {3..7}


def test_build_deterministic_given_seed():
    rng = np.random.default_rng(0)
    cloud = PointCloud(rng.normal(size=(80, 2)))
    values = axis_filter(cloud, 0)
    cover = assign_bins(interval_cover(values, t=4, gain=0.2), values)
    cfg = ClustererConfig(method="kmeans", K=2, seed=3)
    a = build_mapper(cloud, cover, cfg)
    b = build_mapper(cloud, cover, cfg)
    assert all(np.array_equal(x.labels, y.labels)
               for x, y in zip(a.clusterings, b.clusterings))


def test_label_set_size_equals_bin_count():
    rng = np.random.default_rng(9)
    cloud = PointCloud(rng.normal(size=(60, 2)))
    values = axis_filter(cloud, 1)
    cover = assign_bins(interval_cover(values, t=5, gain=0.45), values)
    f = build_mapper(cloud, cover, eps_config(0.8))
    for point in range(60):
        in_bins = sum(1 for b in cover.bins if point in b)
        assert len(f.label_set(point)) == in_bins


# --- restrict -------------------------------------------------------------------

def test_restrict_full_domain_is_identity():
    cover = make_cover([[0, 1, 2], [2, 3, 4]], 5)
    f = make_function(cover, [{0: 1, 1: 1, 2: 2}, {2: 1, 3: 1, 4: 2}])
    r = restrict(f, np.arange(5))
    assert partitions(r) == partitions(f)
    for bc_r, bc_f in zip(r.clusterings, f.clusterings):
        assert np.array_equal(bc_r.labels, bc_f.labels)


def test_restrict_to_empty_set():
    cover = make_cover([[0, 1]], 2)
    f = make_function(cover, [{0: 1, 1: 2}])
    r = restrict(f, [])
    assert r.domain.size == 0
    assert all(bc.s == 0 for bc in r.clusterings)


def test_restrict_drops_emptied_clusters():
    cover = make_cover([[0, 1, 2, 3]], 4)
    f = make_function(cover, [{0: 1, 1: 1, 2: 2, 3: 3}])
    r = restrict(f, [0, 1, 3])
    assert r.clusterings[0].s == 2  # cluster of point 2 disappeared


def test_restrict_outside_domain_rejected():
    cover = make_cover([[0, 1, 2]], 3)
    f = make_function(cover, [{0: 1, 1: 1}], domain=[0, 1])
    with pytest.raises(DomainError):
        restrict(f, [2])


def test_restrict_then_nerve_recounts_weights():
    cover = make_cover([range(0, 6), range(4, 10)], 10)
    f = make_function(cover, [{p: 1 for p in range(0, 6)},
                              {p: 1 for p in range(4, 10)}])
    subset = [0, 1, 4, 5, 6]
    graph = nerve(restrict(f, subset))
    # intersection within the subset is {4, 5}
    assert graph.edges == [((0, 1), 2)]
    sizes = {v[:2]: v[2] for v in graph.vertices}
    assert sizes[(0, 1)] == 4 and sizes[(1, 1)] == 3


# --- extend_voronoi ---------------------------------------------------------------

def test_extend_queries_inside_domain_unchanged():
    cloud = PointCloud([[float(i)] for i in range(6)])
    cover = make_cover([range(6)], 6)
    f = make_function(cover, [{i: 1 + (i >= 3) for i in range(6)}])
    e = extend_voronoi(cloud, f, [1, 2])
    assert partitions(e) == partitions(f)


def test_extend_single_cluster_bin_labels_everything():
    cloud = PointCloud([[0.0], [1.0], [2.0], [3.0]])
    cover = make_cover([range(4)], 4)
    f = make_function(cover, [{0: 1, 1: 1}], domain=[0, 1])
    e = extend_voronoi(cloud, f, [2, 3])
    assert e.clusterings[0].s == 1
    assert list(e.clusterings[0].members) == [0, 1, 2, 3]


def test_extend_between_clusters_uses_nearest_with_tie_break():
    # samples at 0 and 4 with different clusters; query at 2 is equidistant
    cloud = PointCloud([[0.0], [4.0], [2.0], [2.5]])
    cover = make_cover([range(4)], 4)
    f = make_function(cover, [{0: 1, 1: 2}], domain=[0, 1])
    e = extend_voronoi(cloud, f, [2, 3])
    bc = e.clusterings[0]
    by_point = dict(zip(bc.members.tolist(), bc.labels.tolist()))
    assert by_point[2] == by_point[0]   # tie went to the smaller sample position
    assert by_point[3] == by_point[1]   # strictly nearer to the right sample


def test_extend_then_restrict_is_identity():
    rng = np.random.default_rng(12)
    cloud = PointCloud(rng.normal(size=(30, 2)))
    values = axis_filter(cloud, 0)
    cover = assign_bins(interval_cover(values, t=3, gain=0.3), values)
    half = np.arange(0, 30, 2)
    rest = np.arange(1, 30, 2)
    f = build_mapper(cloud, cover, eps_config(0.7), domain=half)
    back = restrict(extend_voronoi(cloud, f, rest), half)
    assert partitions(back) == partitions(f)
    for bc_b, bc_f in zip(back.clusterings, f.clusterings):
        assert np.array_equal(bc_b.labels, bc_f.labels)


def test_extend_flags_sample_empty_bins():
    cloud = PointCloud([[0.0], [1.0], [10.0], [11.0]])
    cover = make_cover([[0, 1], [2, 3]], 4)
    f = make_function(cover, [{0: 1, 1: 1}, None], domain=[0, 1])
    e = extend_voronoi(cloud, f, [2, 3])
    assert e.unassigned_bins == (1,)
    assert e.clusterings[1].s == 0


# --- nerve ---------------------------------------------------------------------

def test_nerve_disjoint_bins_no_edges():
    cover = make_cover([[0, 1], [2, 3]], 4)
    f = make_function(cover, [{0: 1, 1: 1}, {2: 1, 3: 1}])
    graph = nerve(f)
    assert graph.edges == []


def test_nerve_chain_two_edges_no_triangle():
    cover = make_cover([[0, 1, 2], [2, 3, 4], [4, 5]], 6)
    f = make_function(cover, [{0: 1, 1: 1, 2: 1},
                              {2: 1, 3: 1, 4: 1},
                              {4: 1, 5: 1}])
    graph = nerve(f, max_dim=2)
    assert len(graph.edges) == 2
    assert 2 not in graph.simplices


def test_nerve_triple_overlap_triangle():
    cover = make_cover([[0, 1], [0, 2], [0, 3]], 4)
    f = make_function(cover, [{0: 1, 1: 1}, {0: 1, 2: 1}, {0: 1, 3: 1}])
    graph = nerve(f, max_dim=2)
    assert len(graph.edges) == 3
    assert graph.simplices[2] == [((0, 1, 2), 1)]


def test_nerve_face_property_and_vertex_sizes():
    rng = np.random.default_rng(77)
    cloud = PointCloud(rng.normal(size=(50, 2)))
    values = axis_filter(cloud, 0)
    cover = assign_bins(interval_cover(values, t=4, gain=0.5), values)
    f = build_mapper(cloud, cover, eps_config(0.9))
    graph = nerve(f, max_dim=2)
    weights1 = dict(graph.edges)
    for (a, b, c), w in graph.simplices.get(2, []):
        for face in [(a, b), (a, c), (b, c)]:
            assert weights1[face] >= w >= 1
    per_bin = {}
    for bin_idx, _, size in graph.vertices:
        per_bin[bin_idx] = per_bin.get(bin_idx, 0) + size
    for i, b in enumerate(cover.bins):
        assert per_bin.get(i, 0) == b.size


def test_nerve_requires_positive_max_dim():
    cover = make_cover([[0]], 1)
    f = make_function(cover, [{0: 1}])
    with pytest.raises(ParameterError):
        nerve(f, max_dim=0)


# --- serialization ----------------------------------------------------------------

def test_mapper_function_json_round_trip():
    rng = np.random.default_rng(15)
    cloud = PointCloud(rng.normal(size=(25, 2)))
    values = axis_filter(cloud, 1)
    cover = assign_bins(interval_cover(values, t=3, gain=0.25), values)
    f = build_mapper(cloud, cover, eps_config(0.6), domain=np.arange(0, 25, 2))
    text = mapper_function_to_json(f)
    back = mapper_function_from_json(text)
    assert mapper_function_to_json(back) == text
    assert partitions(back) == partitions(f)


def test_graph_json_and_dot():
    cover = make_cover([[0, 1, 2], [2, 3]], 4)
    f = make_function(cover, [{0: 1, 1: 1, 2: 1}, {2: 1, 3: 1}])
    graph = nerve(f)
    doc = json.loads(graph.to_json())
    assert doc["vertices"] == [{"bin": 0, "label": 1, "size": 3},
                               {"bin": 1, "label": 1, "size": 2}]
    dot = graph.to_dot()
    assert "v0 -- v1 [weight=1]" in dot
