"""Distances between clusterings and between Mapper functions.

Per bin, the minimal matching distance pairs the clusters of two labelings
(padded with empty clusters up to a common count) to minimise the fraction
of disagreeing points; it is solved by optimal assignment on the label
confusion matrix. Across bins, the Mapper distance minimises, over products
of per-bin pairings, the fraction of points whose full label set differs.
The exact value is found by a recursive branch-and-bound over size-ordered
clusters, accumulating the mismatch as a set union and seeded with the
per-bin optima; a brute-force enumeration is kept as the test oracle.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .clustering import BinClustering
from .errors import CoverError, DomainError, GuardError
from .mapper import MapperFunction


@dataclass
class Matching:
    """Per-bin cluster pairing between two Mapper functions.

    bin_maps[i] sends a g-cluster label to its matched f-cluster label, or
    to None when it was paired with an empty padding cluster.
    """

    bin_maps: tuple[dict[int, int | None], ...]
    mismatch: np.ndarray  # point indices whose label sets differ under the maps

    @property
    def count(self) -> int:
        return int(self.mismatch.size)


def matching_distance(f_i: BinClustering, g_i: BinClustering):
    """Minimal matching distance between two labelings of one member set.

    Returns (value in [0, 1], optimal g-label -> f-label map, mismatch
    point indices). The optimum is an assignment on the label confusion
    matrix padded to max(s_f, s_g) clusters per side.
    """
    if not np.array_equal(f_i.members, g_i.members):
        raise DomainError("matching_distance needs identical member sets")
    m = f_i.members.size
    if m == 0:
        return 0.0, {}, f_i.members
    k = max(f_i.s, g_i.s)
    conf = np.zeros((k, k), dtype=np.int64)
    np.add.at(conf, (f_i.labels - 1, g_i.labels - 1), 1)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    mapping: dict[int, int | None] = {}
    for a, b in zip(rows, cols):
        if b < g_i.s:
            mapping[int(b + 1)] = int(a + 1) if a < f_i.s else None
    lookup = np.zeros(g_i.s + 1, dtype=np.int64)
    for b, a in mapping.items():
        lookup[b] = 0 if a is None else a
    agree = lookup[g_i.labels] == f_i.labels
    mismatch = f_i.members[~agree]
    return float((m - agree.sum()) / m), mapping, mismatch


# ---------------------------------------------------------------------------
# shared instance construction for the Mapper-level search

class _BinPair:
    __slots__ = ("index", "f_labels", "f_clusters", "g_labels", "g_clusters",
                 "all_pos", "fl", "gl")

    def __init__(self, index, f_labels, f_clusters, g_labels, g_clusters,
                 all_pos, fl, gl):
        self.index = index
        self.f_labels = f_labels      # real f-cluster labels, size-ordered
        self.f_clusters = f_clusters  # matching position arrays (into domain)
        self.g_labels = g_labels
        self.g_clusters = g_clusters
        self.all_pos = all_pos        # positions of the bin's members
        self.fl = fl                  # f label per member position (0 = absent)
        self.gl = gl

    @property
    def size(self) -> int:
        return int(self.all_pos.size)


def _check_compatible(f: MapperFunction, g: MapperFunction):
    if f.cover is not g.cover and (
        f.cover.n != g.cover.n or f.t != g.t or any(
            not np.array_equal(a, b) for a, b in zip(f.cover.bins, g.cover.bins)
        )
    ):
        raise CoverError("Mapper functions were built over different covers")
    if f.domain is not g.domain and not np.array_equal(f.domain, g.domain):
        raise DomainError("Mapper functions live on different domains")


def _size_ordered(bc: BinClustering, pos: np.ndarray):
    clusters = [(lab, pos[bc.labels == lab]) for lab in range(1, bc.s + 1)]
    clusters.sort(key=lambda item: (-item[1].size, item[0]))
    labels = [lab for lab, _ in clusters]
    arrays = [arr for _, arr in clusters]
    return labels, arrays


def _build_pairs(f: MapperFunction, g: MapperFunction) -> tuple[list[_BinPair], int]:
    _check_compatible(f, g)
    domain = f.domain
    n = domain.size
    posmap = None
    pairs = []
    for i in range(f.t):
        fc, gc = f.clusterings[i], g.clusterings[i]
        if fc.s == 0 and gc.s == 0:
            continue
        if posmap is None:
            posmap = np.full(f.cover.n, -1, dtype=np.int64)
            posmap[domain] = np.arange(n)
        fpos = posmap[fc.members]
        gpos = posmap[gc.members]
        f_labels, f_clusters = _size_ordered(fc, fpos)
        g_labels, g_clusters = _size_ordered(gc, gpos)
        if fpos.size == gpos.size and np.array_equal(fpos, gpos):
            all_pos = fpos
            fl = fc.labels.astype(np.int64)
            gl = gc.labels.astype(np.int64)
        else:
            all_pos = np.union1d(fpos, gpos)
            fl = np.zeros(all_pos.size, dtype=np.int64)
            fl[np.searchsorted(all_pos, fpos)] = fc.labels
            gl = np.zeros(all_pos.size, dtype=np.int64)
            gl[np.searchsorted(all_pos, gpos)] = gc.labels
        pairs.append(_BinPair(i, f_labels, f_clusters, g_labels, g_clusters,
                              all_pos, fl, gl))
    return pairs, n


def _assignment_agreement(fl: np.ndarray, gl: np.ndarray):
    """Max label-pairing agreement on positions labelled by both sides.

    Returns (agreement count, g-label -> f-label map for real pairings).
    """
    both = (fl > 0) & (gl > 0)
    if not both.any():
        return 0, {}
    sf, sg = int(fl.max()), int(gl.max())
    conf = np.zeros((sf, sg), dtype=np.int64)
    np.add.at(conf, (fl[both] - 1, gl[both] - 1), 1)
    k = max(sf, sg)
    padded = np.zeros((k, k), dtype=np.int64)
    padded[:sf, :sg] = conf
    rows, cols = linear_sum_assignment(padded, maximize=True)
    mapping = {int(b + 1): int(a + 1) for a, b in zip(rows, cols)
               if a < sf and b < sg}
    return int(padded[rows, cols].sum()), mapping


def _owned_masks(bins: list[_BinPair], n: int, covered=None) -> list[np.ndarray]:
    """Boolean mask per bin of the member positions it owns.

    Each point is owned by the first bin (in processing order) containing
    it, so an owned point cannot enter the mismatch union before its bin is
    processed. Points already covered (by forced pairings) are owned by
    nobody: they can add nothing new.
    """
    owner = np.full(n, -1, dtype=np.int64)
    if covered is not None:
        owner[covered] = -2
    masks = []
    for b, bp in enumerate(bins):
        owned = owner[bp.all_pos] == -1
        owner[bp.all_pos[owned]] = b
        masks.append(owned)
    return masks


def _owned_lower_bounds(bins: list[_BinPair], n: int, covered=None) -> list[int]:
    """Per-bin lower bounds that sum to a sound bound on the whole search:
    the fewest mismatches any pairing of a bin leaves on its owned points is
    new mismatch that bin must still contribute."""
    bounds = []
    for bp, owned in zip(bins, _owned_masks(bins, n, covered)):
        if not owned.any():
            bounds.append(0)
            continue
        fl, gl = bp.fl[owned], bp.gl[owned]
        agreement, _ = _assignment_agreement(fl, gl)
        bounds.append(int(owned.sum() - agreement))
    return bounds


def _mismatch_positions(pairs: list[_BinPair], bin_maps, n: int) -> np.ndarray:
    """Positions whose label sets differ under the given per-bin maps."""
    bad = np.zeros(n, dtype=bool)
    for bp in pairs:
        bmap = bin_maps[bp.index]
        sg = max([int(bp.gl.max()) if bp.gl.size else 0] + list(bmap))
        lookup = np.zeros(sg + 1, dtype=np.int64)
        for b, a in bmap.items():
            lookup[b] = 0 if a is None else a
        mapped = lookup[bp.gl]
        agree = (bp.fl > 0) & (mapped == bp.fl)
        bad[bp.all_pos[~agree]] = True
    return np.nonzero(bad)[0]


def _full_bin_maps(pairs: list[_BinPair], t: int, per_bin) -> tuple[dict, ...]:
    maps: list[dict[int, int | None]] = [dict() for _ in range(t)]
    for bp, bmap in zip(pairs, per_bin):
        maps[bp.index] = bmap
    return tuple(maps)


def seeded_upper_bound(f: MapperFunction, g: MapperFunction) -> tuple[int, Matching]:
    """Combine the per-bin optimal matchings into a global upper bound:
    the size of the union of the per-bin mismatch sets."""
    pairs, n = _build_pairs(f, g)
    per_bin = []
    for bp in pairs:
        _, mapping = _assignment_agreement(bp.fl, bp.gl)
        for lab in bp.g_labels:
            mapping.setdefault(lab, None)
        per_bin.append(mapping)
    bin_maps = _full_bin_maps(pairs, f.t, per_bin)
    positions = _mismatch_positions(pairs, bin_maps, n)
    matching = Matching(bin_maps=bin_maps, mismatch=f.domain[positions])
    return int(positions.size), matching


@dataclass
class SearchResult:
    mismatch: int
    matching: Matching | None
    nodes: int


class _FirstHit(Exception):
    """Raised to unwind the witness pass at its first complete matching."""


class _ComponentDFS:
    """Branch-and-bound over the per-bin pairings of one contested component.

    Bins keep their index order (adjacent bins share points, so owned lower
    bounds stay tight); inside a bin, f-clusters go largest first and
    candidates are the unmatched g-clusters in decreasing size plus one
    padding cluster. The running mismatch is a multiset-counted union so
    steps undo in O(|added|). A branch dies when its mismatch plus the
    owned-point lower bound of the untouched bins reaches the incumbent.
    """

    def __init__(self, bins: list[_BinPair], cover: list[int], n: int,
                 covered=None, lbs=None):
        self.bins = bins
        self.cover = cover
        if lbs is None:
            lbs = _owned_lower_bounds(bins, n, covered)
        self.suffix = [0] * (len(bins) + 1)
        for b in range(len(bins) - 1, -1, -1):
            self.suffix[b] = self.suffix[b + 1] + lbs[b]
        self.f_lists = [[c.tolist() for c in bp.f_clusters] for bp in bins]
        self.g_lists = [[c.tolist() for c in bp.g_clusters] for bp in bins]
        self.symcache: dict[tuple[int, int, int], list[int]] = {}
        # try the cheapest pairings first: candidates ordered by the size of
        # their symmetric difference with the cluster at each position
        self.order: list[list[list[int]]] = []
        for bp in bins:
            per_bin = []
            for c in bp.f_clusters:
                sizes = []
                for gi, s in enumerate(bp.g_clusters):
                    inter = np.intersect1d(c, s, assume_unique=True).size
                    sizes.append((c.size + s.size - 2 * inter, gi))
                sizes.sort()
                per_bin.append([gi for _, gi in sizes])
            self.order.append(per_bin)

    def run(self, bound: int, first_hit: bool = False):
        """Explore matchings cheaper than `bound`; returns
        (best value or None, best assignment or None, nodes)."""
        self.distinct = 0
        self.nodes = 0
        self.bound = bound
        self.best = None
        self.first_hit = first_hit
        self.avail = [[True] * len(bp.g_clusters) for bp in self.bins]
        self.chosen: list[list[tuple[int, int]]] = [[] for _ in self.bins]
        self.trail: list[list[int]] = []
        depth = sum(len(bp.f_clusters) + 1 for bp in self.bins) + 10
        limit = sys.getrecursionlimit()
        if limit < depth * 3:
            sys.setrecursionlimit(depth * 3 + 100)
        try:
            if self.suffix[0] < self.bound:
                self._descend(0, 0)
        except _FirstHit:
            while self.trail:  # unwind the interrupted path
                self._remove(self.trail.pop())
        finally:
            if limit < depth * 3:
                sys.setrecursionlimit(limit)
        value = None if self.best is None else self.best[0]
        assign = None if self.best is None else self.best[1]
        return value, assign, self.nodes

    def _try_add(self, positions: list[int], budget: int) -> bool:
        """Join positions to the union unless more than `budget` points are
        new; an abort leaves the state untouched."""
        if budget < 0:
            return False
        cover = self.cover
        added = 0
        new = 0
        for p in positions:
            c = cover[p]
            if c == 0:
                if new == budget:
                    for q in positions[:added]:
                        cover[q] -= 1
                    return False
                new += 1
            cover[p] = c + 1
            added += 1
        self.distinct += new
        self.trail.append(positions)
        return True

    def _remove(self, positions: list[int]):
        cover = self.cover
        distinct = self.distinct
        for p in positions:
            c = cover[p] - 1
            cover[p] = c
            if c == 0:
                distinct -= 1
        self.distinct = distinct

    def _symdiff(self, b: int, fi: int, gi: int) -> list[int]:
        key = (b, fi, gi)
        arr = self.symcache.get(key)
        if arr is None:
            arr = np.setxor1d(self.bins[b].f_clusters[fi],
                              self.bins[b].g_clusters[gi],
                              assume_unique=True).tolist()
            self.symcache[key] = arr
        return arr

    def _complete(self):
        if self.distinct < self.bound:
            self.bound = self.distinct
            self.best = (self.distinct, ([list(c) for c in self.chosen],
                                         [list(a) for a in self.avail]))
            if self.first_hit:
                raise _FirstHit

    def _pop_remove(self):
        self._remove(self.trail.pop())

    def _descend(self, b: int, fi: int):
        if b == len(self.bins):
            self._complete()
            return
        bp = self.bins[b]
        avail = self.avail[b]
        if fi == len(bp.f_clusters):
            left = [gi for gi, free in enumerate(avail) if free]
            if not left:
                self._descend(b + 1, 0)
                return
            rest = [p for gi in left for p in self.g_lists[b][gi]]
            self.nodes += 1
            if self._try_add(rest, self.bound - self.suffix[b + 1] - self.distinct - 1):
                self._descend(b + 1, 0)
                self._pop_remove()
            return
        for gi in self.order[b][fi]:
            if not avail[gi]:
                continue
            sym = self._symdiff(b, fi, gi)
            self.nodes += 1
            if self._try_add(sym, self.bound - self.suffix[b + 1] - self.distinct - 1):
                avail[gi] = False
                self.chosen[b].append((fi, gi))
                self._descend(b, fi + 1)
                self.chosen[b].pop()
                avail[gi] = True
                self._pop_remove()
        # pair this cluster with an empty padding cluster
        c = self.f_lists[b][fi]
        self.nodes += 1
        if self._try_add(c, self.bound - self.suffix[b + 1] - self.distinct - 1):
            self.chosen[b].append((fi, -1))
            self._descend(b, fi + 1)
            self.chosen[b].pop()
            self._pop_remove()


def _restricted_bin(bp: _BinPair, f_idx: list[int], g_idx: list[int]) -> _BinPair:
    """View of a bin keeping only the selected cluster slots."""
    f_clusters = [bp.f_clusters[i] for i in f_idx]
    f_labels = [bp.f_labels[i] for i in f_idx]
    g_clusters = [bp.g_clusters[i] for i in g_idx]
    g_labels = [bp.g_labels[i] for i in g_idx]
    parts = f_clusters + g_clusters
    all_pos = np.unique(np.concatenate(parts)) if parts else np.empty(0, np.int64)
    fl = np.zeros(all_pos.size, dtype=np.int64)
    for lab, cl in zip(f_labels, f_clusters):
        fl[np.searchsorted(all_pos, cl)] = lab
    gl = np.zeros(all_pos.size, dtype=np.int64)
    for lab, cl in zip(g_labels, g_clusters):
        gl[np.searchsorted(all_pos, cl)] = lab
    return _BinPair(bp.index, f_labels, f_clusters, g_labels, g_clusters,
                    all_pos, fl, gl)


def _identical_forcing(bins: list[_BinPair]):
    """Pre-match content-identical cluster pairs within each bin.

    Routing any other matching through an identical pair never grows the
    mismatch union, so some optimum keeps identical pairs together; they
    contribute nothing and leave the search.
    """
    forced: list[list[tuple[int, int]]] = []
    contested: list[tuple[list[int], list[int]]] = []
    for bp in bins:
        g_by_key = {c.tobytes(): gi for gi, c in enumerate(bp.g_clusters)}
        pairs_here: list[tuple[int, int]] = []
        g_taken = set()
        f_left = []
        for fi, c in enumerate(bp.f_clusters):
            gi = g_by_key.get(c.tobytes())
            if gi is not None and gi not in g_taken:
                pairs_here.append((fi, gi))
                g_taken.add(gi)
            else:
                f_left.append(fi)
        g_left = [gi for gi in range(len(bp.g_clusters)) if gi not in g_taken]
        forced.append(pairs_here)
        contested.append((f_left, g_left))
    return forced, contested


_OPTION_LIMIT = 5  # enumerate a bin's pairings up to this padded cluster count


def _bin_options(bp: _BinPair):
    """All padded pairings of one bin, deduplicated by mismatch set.

    Returns a list of (real pairs, leftover g indices, mismatch mask over
    the bin's members), or None when the bin is too large to enumerate.
    """
    kf, kg = len(bp.f_clusters), len(bp.g_clusters)
    k = max(kf, kg)
    if k > _OPTION_LIMIT:
        return None
    f_hi = max([int(bp.fl.max()) if bp.fl.size else 0] + list(bp.f_labels))
    f_lookup = np.full(f_hi + 1, -1)
    for s, lab in enumerate(bp.f_labels):
        f_lookup[lab] = s
    g_hi = max([int(bp.gl.max()) if bp.gl.size else 0] + list(bp.g_labels))
    g_lookup = np.full(g_hi + 1, -1)
    for s, lab in enumerate(bp.g_labels):
        g_lookup[lab] = s
    fs = f_lookup[bp.fl]
    gs = g_lookup[bp.gl]
    both = (fs >= 0) & (gs >= 0)
    options = []
    seen = set()
    for perm in itertools.permutations(range(k)):
        pa = np.asarray(perm)  # pa[f slot] = g slot over padded lists
        match = np.zeros(bp.all_pos.size, dtype=bool)
        match[both] = pa[fs[both]] == gs[both]
        mismatch = ~match
        key = mismatch.tobytes()
        if key in seen:
            continue
        seen.add(key)
        real = [(fi, int(pa[fi])) for fi in range(kf) if pa[fi] < kg]
        paired_g = {gi for _, gi in real}
        leftover = [gi for gi in range(kg) if gi not in paired_g]
        options.append((real, leftover, mismatch))
    return options


def _bin_components(cbins: list[_BinPair], n: int,
                    covered: np.ndarray) -> list[list[_BinPair]]:
    """Group contested bins into components sharing uncovered points.

    Clusters inside one bin always compete for the same partners, so bins
    are the unit; two bins interact only through shared points that are not
    already in the mismatch union."""
    parent = list(range(len(cbins)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    point_bin = np.full(n, -1, dtype=np.int64)
    for j, bp in enumerate(cbins):
        pts = bp.all_pos[~covered[bp.all_pos]]
        owners = point_bin[pts]
        fresh = owners == -1
        point_bin[pts[fresh]] = j
        for other in np.unique(owners[~fresh]).tolist():
            ra, rb = find(int(other)), find(j)
            if ra != rb:
                parent[ra] = rb
    groups: dict[int, list[_BinPair]] = {}
    for j, bp in enumerate(cbins):
        groups.setdefault(find(j), []).append(bp)
    return list(groups.values())


def _search(pairs: list[_BinPair], n: int, initial_bound: int, t: int,
            domain: np.ndarray) -> SearchResult:
    """Exact minimum over per-bin pairings, bounded above by initial_bound.

    Pipeline: content-identical cluster pairs are pre-matched; bins whose
    enumerable pairings keep a single option under the bound are fixed and
    their mismatch preloaded as a baseline; the remaining bins split into
    independent components, each solved by branch-and-bound under its share
    of the bound. A component whose minimum ties its cap gets a second,
    first-hit pass to recover a witness pairing.
    """
    bins = sorted(pairs, key=lambda bp: bp.index)
    ident_forced, contested = _identical_forcing(bins)
    cbins = []
    for bp, (f_idx, g_idx) in zip(bins, contested):
        if f_idx or g_idx:
            cbins.append(_restricted_bin(bp, f_idx, g_idx))

    cover = [0] * n
    covered = np.zeros(n, dtype=bool)
    baseline = 0
    option_assign: list[tuple[_BinPair, list, list]] = []
    remaining: list[_BinPair] = []
    rem_lbs: list[int] = []
    if cbins:
        all_options = [_bin_options(bp) for bp in cbins]
        surviving = [None if o is None else list(range(len(o)))
                     for o in all_options]

        def refine(exclude_covered: bool):
            """Ownership and per-bin bounds from the surviving options.

            A point is owned by the first bin that can still mismatch it, so
            each owned bound is new mismatch its bin must contribute and the
            bounds stay disjoint and summable.
            """
            owner = np.full(n, -1, dtype=np.int64)
            if exclude_covered:
                owner[covered] = -2
            masks = []
            for j, bp in enumerate(cbins):
                if all_options[j] is None:
                    poss = np.ones(bp.all_pos.size, dtype=bool)
                else:
                    poss = np.zeros(bp.all_pos.size, dtype=bool)
                    for oi in surviving[j]:
                        poss |= all_options[j][oi][2]
                pts = bp.all_pos[poss]
                fresh = owner[pts] == -1
                owner[pts[fresh]] = j
                masks.append(None)  # filled below once ownership is final
            for j, bp in enumerate(cbins):
                masks[j] = owner[bp.all_pos] == j
            lbs = []
            for j, bp in enumerate(cbins):
                owned = masks[j]
                if not owned.any():
                    lbs.append(0)
                elif all_options[j] is None:
                    agreement, _ = _assignment_agreement(bp.fl[owned], bp.gl[owned])
                    lbs.append(int(owned.sum() - agreement))
                else:
                    lbs.append(min(
                        int((all_options[j][oi][2] & owned).sum())
                        for oi in surviving[j]
                    ))
            return masks, lbs

        # drop options that cannot sit inside any pairing of cost at most
        # the bound; tightening bounds may drop more, so iterate to fixpoint
        for _ in range(8):
            masks, lbs = refine(exclude_covered=False)
            lb_total = sum(lbs)
            changed = False
            for j, bp in enumerate(cbins):
                if all_options[j] is None:
                    continue
                threshold = initial_bound - (lb_total - lbs[j])
                kept = [
                    oi for oi in surviving[j]
                    if int((all_options[j][oi][2] & masks[j]).sum()) <= threshold
                ]
                if not kept:  # only possible when the bound was unattainable
                    kept = surviving[j]
                if len(kept) != len(surviving[j]):
                    surviving[j] = kept
                    changed = True
            if not changed:
                break

        for j, bp in enumerate(cbins):
            if all_options[j] is not None and len(surviving[j]) == 1:
                real, leftover, mismatch = all_options[j][surviving[j][0]]
                for p in bp.all_pos[mismatch].tolist():
                    if cover[p] == 0:
                        baseline += 1
                    cover[p] += 1
                covered[bp.all_pos[mismatch]] = True
                option_assign.append((bp, real, leftover))
            else:
                remaining.append(bp)
                rem_lbs.append(j)

        if remaining:
            cbins_rem = remaining
            opts_rem = [all_options[j] for j in rem_lbs]
            surv_rem = [surviving[j] for j in rem_lbs]
            cbins, all_options, surviving = cbins_rem, opts_rem, surv_rem
            _, rem_lbs = refine(exclude_covered=True)
        else:
            rem_lbs = []

    components = _bin_components(remaining, n, covered)
    lb_of = {id(bp): lb for bp, lb in zip(remaining, rem_lbs)}
    searchers = [
        _ComponentDFS(comp, cover, n, covered=covered,
                      lbs=[lb_of[id(bp)] for bp in comp])
        for comp in components
    ]
    comp_lb = [s.suffix[0] for s in searchers]
    lb_rest = sum(comp_lb)

    total = baseline
    nodes = 0
    assignments: list[tuple[list[_BinPair], object]] = []
    for comp, searcher, lb in zip(components, searchers, comp_lb):
        npoints = int(sum(bp.all_pos.size for bp in comp))
        cap = min(npoints, initial_bound - baseline - (lb_rest - lb))
        value, assign, comp_nodes = searcher.run(cap)
        nodes += comp_nodes
        if value is None:
            # the minimum ties the cap: a first-hit pass recovers a witness
            value = cap
            _, assign, _ = searcher.run(cap + 1, first_hit=True)
            if assign is None:
                raise GuardError("initial_bound below the attainable minimum")
        total += value
        assignments.append((comp, assign))

    per_bin_maps: list[dict[int, int | None]] = [dict() for _ in range(t)]
    for bp, fpairs in zip(bins, ident_forced):
        for fi, gi in fpairs:
            per_bin_maps[bp.index][bp.g_labels[gi]] = bp.f_labels[fi]
    for bp, real, leftover in option_assign:
        bmap = per_bin_maps[bp.index]
        for fi, gi in real:
            bmap[bp.g_labels[gi]] = bp.f_labels[fi]
        for gi in leftover:
            bmap[bp.g_labels[gi]] = None
    for comp, assign in assignments:
        chosen, avail = assign
        for cb, bp in enumerate(comp):
            bmap = per_bin_maps[bp.index]
            for fi, gi in chosen[cb]:
                if gi >= 0:
                    bmap[bp.g_labels[gi]] = bp.f_labels[fi]
            for gi, free in enumerate(avail[cb]):
                if free:
                    bmap[bp.g_labels[gi]] = None
    bin_maps = tuple(per_bin_maps)
    positions = _mismatch_positions(bins, bin_maps, n)
    matching = Matching(bin_maps=bin_maps, mismatch=domain[positions])
    return SearchResult(mismatch=total, matching=matching, nodes=nodes)


def mapper_mismatch(f: MapperFunction, g: MapperFunction,
                    initial_bound: int | None = None) -> int:
    """n times the Mapper distance: the least number of points whose label
    sets differ, over all products of per-bin cluster pairings.

    initial_bound must be an attainable upper bound (default: the domain
    size); the search only improves on it.
    """
    res = mapper_mismatch_search(f, g, initial_bound)
    return res.mismatch


def mapper_mismatch_search(f: MapperFunction, g: MapperFunction,
                           initial_bound: int | None = None) -> SearchResult:
    """As mapper_mismatch, additionally reporting the best pairing found and
    the number of search nodes explored."""
    pairs, n = _build_pairs(f, g)
    if n == 0:
        return SearchResult(0, Matching(tuple({} for _ in range(f.t)),
                                        np.empty(0, dtype=np.int64)), 0)
    bound = n if initial_bound is None else int(initial_bound)
    return _search(pairs, n, bound, f.t, f.domain)


def mapper_distance_detailed(f: MapperFunction, g: MapperFunction):
    """Mapper distance with its witness: (value, Matching, stats)."""
    if f.domain.size == 0:
        _check_compatible(f, g)
        empty = Matching(tuple({} for _ in range(f.t)), np.empty(0, dtype=np.int64))
        return 0.0, empty, {"upper_bound": 0, "nodes": 0}
    ub, seed = seeded_upper_bound(f, g)
    if ub == 0:
        return 0.0, seed, {"upper_bound": 0, "nodes": 0}
    res = mapper_mismatch_search(f, g, initial_bound=ub)
    matching = res.matching if res.matching is not None else seed
    value = res.mismatch / f.domain.size
    return value, matching, {"upper_bound": ub, "nodes": res.nodes}


def mapper_distance(f: MapperFunction, g: MapperFunction) -> float:
    """Mapper distance in [0, 1]: seeded upper bound, then exact search."""
    value, _, _ = mapper_distance_detailed(f, g)
    return value


def brute_force_mapper_mismatch(f: MapperFunction, g: MapperFunction,
                                guard: int = 10 ** 7) -> int:
    """Exhaustive minimum over all products of padded per-bin bijections.

    Independent of the branch-and-bound path; intended as a test oracle.
    """
    pairs, n = _build_pairs(f, g)
    if n == 0:
        return 0
    total = 1
    perm_lists = []
    for bp in pairs:
        k = max(len(bp.f_labels), len(bp.g_labels))
        total *= math.factorial(k)
        if total > guard:
            raise GuardError(f"search space exceeds guard ({guard})")
        perm_lists.append(list(itertools.permutations(range(k))))
    best = n + 1
    for combo in itertools.product(*perm_lists):
        agree = np.ones(n, dtype=bool)
        for bp, perm in zip(pairs, combo):
            # perm[f slot] = g slot over padded slot lists (size-ordered)
            pa = np.asarray(perm)
            flab = np.asarray(bp.f_labels)
            glab = np.asarray(bp.g_labels)
            fslot = np.full(int(bp.fl.max()) + 1 if bp.fl.size else 1, -1)
            for s, lab in enumerate(flab):
                fslot[lab] = s
            gslot = np.full(int(bp.gl.max()) + 1 if bp.gl.size else 1, -1)
            for s, lab in enumerate(glab):
                gslot[lab] = s
            ok = (bp.fl > 0) & (bp.gl > 0)
            match = np.zeros(bp.all_pos.size, dtype=bool)
            match[ok] = pa[fslot[bp.fl[ok]]] == gslot[bp.gl[ok]]
            agree[bp.all_pos] &= match
        best = min(best, int(n - agree.sum()))
    return best


def brute_force_mapper_distance(f: MapperFunction, g: MapperFunction,
                                guard: int = 10 ** 7) -> float:
    n = f.domain.size
    if n == 0:
        _check_compatible(f, g)
        return 0.0
    return brute_force_mapper_mismatch(f, g, guard=guard) / n
