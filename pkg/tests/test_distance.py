import numpy as np
import pytest

from conftest import make_cover, make_function, random_mapper_pair
from mapperstab.clustering import BinClustering, canonical_labels
from mapperstab.distance import (brute_force_mapper_distance,
                                 brute_force_mapper_mismatch, mapper_distance,
                                 mapper_distance_detailed, mapper_mismatch,
                                 mapper_mismatch_search, matching_distance,
                                 seeded_upper_bound)
from mapperstab.errors import CoverError, DomainError, GuardError


def bin_clustering(members, labels, bin_index=0):
    members = np.asarray(members, dtype=np.int64)
    canon, s = canonical_labels(np.asarray(labels))
    return BinClustering(bin_index, members, canon, s)


# --- minimal matching distance ----------------------------------------------

def test_matching_identical_labelings():
    a = bin_clustering([0, 1, 2, 3], [1, 1, 2, 2])
    value, _, mismatch = matching_distance(a, a)
    assert value == 0.0 and mismatch.size == 0


def test_matching_pure_relabeling():
    a = bin_clustering([0, 1, 2, 3], [1, 1, 2, 2])
    b = bin_clustering([0, 1, 2, 3], [2, 2, 1, 1])
    value, _, _ = matching_distance(a, b)
    assert value == 0.0


def test_matching_quarter_mismatch_derived():
    # enumerate both bijections: identity mismatches 1 point, swap 3 -> 1/4
    a = bin_clustering([0, 1, 2, 3], [1, 1, 2, 2])
    b = bin_clustering([0, 1, 2, 3], [1, 2, 2, 2])
    value, mapping, mismatch = matching_distance(a, b)
    assert value == 0.25
    assert list(mismatch) == [1]
    assert mapping == {1: 1, 2: 2}


def test_matching_needs_same_members():
    a = bin_clustering([0, 1], [1, 1])
    b = bin_clustering([0, 2], [1, 1])
    with pytest.raises(DomainError):
        matching_distance(a, b)


def test_matching_empty():
    a = bin_clustering([], [])
    assert matching_distance(a, a)[0] == 0.0


# --- mapper distance: forced cases -------------------------------------------

def test_mapper_distance_identity_is_zero():
    rng = np.random.default_rng(0)
    f, _ = random_mapper_pair(rng)
    assert mapper_distance(f, f) == 0.0
    assert mapper_mismatch(f, f) == 0


def test_single_bin_reduces_to_matching_distance():
    cover = make_cover([[0, 1, 2, 3]], 4)
    f = make_function(cover, [{0: 1, 1: 1, 2: 2, 3: 2}])
    g = make_function(cover, [{0: 1, 1: 2, 2: 2, 3: 2}])
    assert mapper_distance(f, g) == 0.25
    ub, _ = seeded_upper_bound(f, g)
    assert ub == mapper_mismatch(f, g) == 1


def test_padded_single_cluster_vs_balanced_pair():
    # one bin, two points: f constant, g split -> one point must mismatch
    cover = make_cover([[0, 1]], 2)
    f = make_function(cover, [{0: 1, 1: 1}])
    g = make_function(cover, [{0: 1, 1: 2}])
    assert mapper_distance(f, g) == 0.5


def test_remark_equal_distance_triple():
    # three bins all containing point 0; g differs from f on one bin at 0,
    # h on two bins at 0; both differ from f by exactly that one point
    pts = list(range(7))
    cover = make_cover([pts, pts, pts], 7)
    base = {1: 1, 2: 1, 3: 1, 4: 2, 5: 2, 6: 2}
    f = make_function(cover, [{**base, 0: 1}] * 3)
    g = make_function(cover, [{**base, 0: 1}, {**base, 0: 1}, {**base, 0: 2}])
    h = make_function(cover, [{**base, 0: 1}, {**base, 0: 2}, {**base, 0: 2}])
    assert mapper_mismatch(f, g) == mapper_mismatch(f, h) == 1
    assert mapper_distance(f, g) == mapper_distance(f, h) == 1 / 7


def test_empty_domain_distance_zero():
    cover = make_cover([[0, 1]], 2)
    f = make_function(cover, [{0: 1, 1: 1}], domain=[])
    g = make_function(cover, [{0: 1, 1: 2}], domain=[])
    assert mapper_distance(f, g) == 0.0


def test_unassigned_bin_counts_all_its_points():
    # f has no clusters in bin 1; g labels it -> every bin-1 point mismatches
    cover = make_cover([[0, 1, 2], [3, 4]], 5)
    f = make_function(cover, [{0: 1, 1: 1, 2: 1}, None])
    g = make_function(cover, [{0: 1, 1: 1, 2: 1}, {3: 1, 4: 2}])
    assert mapper_mismatch(f, g) == 2
    assert brute_force_mapper_mismatch(f, g) == 2


# --- seeded upper bound -------------------------------------------------------

def test_seed_zero_for_identical_functions():
    rng = np.random.default_rng(5)
    f, _ = random_mapper_pair(rng)
    ub, matching = seeded_upper_bound(f, f)
    assert ub == 0 and matching.count == 0


def test_seed_upper_bound_dominates_exact():
    rng = np.random.default_rng(17)
    for _ in range(120):
        f, g = random_mapper_pair(rng, n=16, t=3, kmax=3)
        ub, _ = seeded_upper_bound(f, g)
        exact = brute_force_mapper_mismatch(f, g)
        assert ub >= exact


def test_seed_exact_for_single_bin():
    rng = np.random.default_rng(23)
    for _ in range(60):
        f, g = random_mapper_pair(rng, n=14, t=1, kmax=4)
        ub, _ = seeded_upper_bound(f, g)
        assert ub == brute_force_mapper_mismatch(f, g)


def test_disjoint_mismatch_regions_cost_more_than_overlapping():
    # two bins overlapping on {5..9}; per-bin mismatch sets of equal size,
    # once stacked inside the overlap, once spread apart
    bins = [list(range(10)), list(range(5, 15))]
    cover = make_cover(bins, 15)
    f1 = {p: (1 if p < 5 else 2) for p in bins[0]}
    f2 = {p: (1 if p < 10 else 2) for p in bins[1]}
    g1_overlap = {**f1, 5: 1, 6: 1}
    g2_overlap = {**f2, 5: 2, 6: 2}
    g2_disjoint = {**f2, 10: 1, 11: 1}
    f = make_function(cover, [f1, f2])
    g_overlap = make_function(cover, [g1_overlap, g2_overlap])
    g_disjoint = make_function(cover, [g1_overlap, g2_disjoint])
    ub_overlap, _ = seeded_upper_bound(f, g_overlap)
    ub_disjoint, _ = seeded_upper_bound(f, g_disjoint)
    assert mapper_mismatch(f, g_overlap) == ub_overlap == 2
    assert mapper_mismatch(f, g_disjoint) == ub_disjoint == 4


def test_matching_mismatch_recount_consistent():
    rng = np.random.default_rng(40)
    for _ in range(40):
        f, g = random_mapper_pair(rng, n=15, t=2, kmax=3)
        value, matching, _ = mapper_distance_detailed(f, g)
        # recount: the mismatch set must realize the reported value
        assert matching.count / max(f.domain.size, 1) >= value
        assert (matching.count == round(value * f.domain.size)
                or matching.count >= round(value * f.domain.size))


# --- oracle equivalence and pseudometric axioms -------------------------------

def test_oracle_equivalence_random_instances():
    rng = np.random.default_rng(202)
    for _ in range(120):
        f, g = random_mapper_pair(rng, n=18, t=3, kmax=3)
        assert mapper_mismatch(f, g) == brute_force_mapper_mismatch(f, g)


def test_mapper_distance_uses_seeding_and_matches_oracle():
    rng = np.random.default_rng(303)
    for _ in range(60):
        f, g = random_mapper_pair(rng, n=20, t=2, kmax=4)
        assert mapper_distance(f, g) == brute_force_mapper_distance(f, g)


def test_pseudometric_axioms_exact():
    rng = np.random.default_rng(404)
    for _ in range(40):
        bins = [np.sort(rng.choice(15, size=rng.integers(2, 15), replace=False))
                for _ in range(2)]
        cover = make_cover(bins, 15)

        def rand_func():
            labelings = []
            for b in bins:
                k = int(rng.integers(1, 4))
                labelings.append({int(m): int(rng.integers(1, k + 1)) for m in b})
            return make_function(cover, labelings)

        f, g, h = rand_func(), rand_func(), rand_func()
        assert mapper_mismatch(f, f) == 0
        assert mapper_mismatch(f, g) == mapper_mismatch(g, f)
        assert (mapper_mismatch(f, h)
                <= mapper_mismatch(f, g) + mapper_mismatch(g, h))


def test_label_permutation_invariance():
    rng = np.random.default_rng(505)
    for _ in range(25):
        f, g = random_mapper_pair(rng, n=14, t=2, kmax=3, p_empty=0, p_partial=0)
        base = mapper_mismatch(f, g)
        # relabel one bin of g by an arbitrary permutation
        relabeled = []
        for bc in g.clusterings:
            if bc.s >= 2:
                perm = rng.permutation(bc.s) + 1
                relabeled.append({
                    int(m): int(perm[l - 1])
                    for m, l in zip(bc.members, bc.labels)
                })
            else:
                relabeled.append(
                    {int(m): int(l) for m, l in zip(bc.members, bc.labels)})
        g2 = make_function(g.cover, relabeled)
        assert mapper_mismatch(f, g2) == base


# --- search behaviour ----------------------------------------------------------

def test_seeded_search_explores_no_more_nodes_than_unseeded():
    rng = np.random.default_rng(606)
    for _ in range(60):
        f, g = random_mapper_pair(rng, n=18, t=3, kmax=3)
        ub, _ = seeded_upper_bound(f, g)
        unseeded = mapper_mismatch_search(f, g)  # bound starts at n
        seeded = mapper_mismatch_search(f, g, initial_bound=ub)
        assert seeded.mismatch == unseeded.mismatch
        assert seeded.nodes <= unseeded.nodes


def test_detailed_result_reports_attainable_value():
    rng = np.random.default_rng(707)
    for _ in range(40):
        f, g = random_mapper_pair(rng, n=16, t=2, kmax=3)
        value, matching, stats = mapper_distance_detailed(f, g)
        n = f.domain.size
        assert value * n == matching.count
        assert stats["upper_bound"] >= matching.count


# --- errors ---------------------------------------------------------------------

def test_cover_mismatch_rejected():
    cover_a = make_cover([[0, 1]], 3)
    cover_b = make_cover([[0, 2]], 3)
    f = make_function(cover_a, [{0: 1, 1: 1}])
    g = make_function(cover_b, [{0: 1, 2: 1}])
    with pytest.raises(CoverError):
        mapper_distance(f, g)


def test_domain_mismatch_rejected():
    cover = make_cover([[0, 1, 2]], 3)
    f = make_function(cover, [{0: 1, 1: 1, 2: 1}], domain=[0, 1, 2])
    g = make_function(cover, [{0: 1, 1: 1}], domain=[0, 1])
    with pytest.raises(DomainError):
        mapper_distance(f, g)


def test_brute_force_guard():
    bins = [list(range(12))] * 6
    cover = make_cover(bins, 12)
    labeling = {p: (p % 6) + 1 for p in range(12)}
    f = make_function(cover, [labeling] * 6)
    with pytest.raises(GuardError):
        brute_force_mapper_mismatch(f, f, guard=100)
