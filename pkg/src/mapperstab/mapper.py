"""Mapper functions (per-bin clusterings over a cover) and their nerve.

A Mapper function assigns to each point of its domain the set of cluster
labels it receives from the bins containing it. The nerve turns those
clusters into a weighted simplicial complex: vertices are clusters, a
simplex joins clusters from distinct bins that share points, and the weight
is the size of the shared intersection.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .clustering import (BinClustering, ClustererConfig, canonical_labels,
                         cluster_bin, voronoi_extend)
from .cover import Cover, CoverSpec
from .dataset import PointCloud, index_subset
from .errors import DomainError, ParameterError

SCHEMA_VERSION = 1

_EMPTY = np.empty(0, dtype=np.int64)
_EMPTY.setflags(write=False)


@dataclass(frozen=True)
class MapperFunction:
    """Per-bin clusterings of a sample over a fixed cover."""

    cover: Cover
    clusterings: tuple[BinClustering, ...]
    domain: np.ndarray                 # sorted point indices the function is defined on
    unassigned_bins: tuple[int, ...] = ()  # bins with domain points but no labels

    @property
    def t(self) -> int:
        return len(self.clusterings)

    @property
    def n(self) -> int:
        return int(self.domain.size)

    def label_set(self, point: int) -> frozenset:
        """The set of (bin, label) pairs the function assigns to a point."""
        out = []
        for bc in self.clusterings:
            pos = np.searchsorted(bc.members, point)
            if pos < bc.members.size and bc.members[pos] == point:
                out.append((bc.bin_index, int(bc.labels[pos])))
        return frozenset(out)


def _members_in(sorted_universe: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Boolean mask of `members` contained in a sorted unique universe."""
    if sorted_universe.size == 0 or members.size == 0:
        return np.zeros(members.size, dtype=bool)
    pos = np.searchsorted(sorted_universe, members)
    pos_c = np.minimum(pos, sorted_universe.size - 1)
    return (pos < sorted_universe.size) & (sorted_universe[pos_c] == members)


def _unassigned(cover: Cover, domain: np.ndarray,
                clusterings: tuple[BinClustering, ...]) -> tuple[int, ...]:
    out = []
    for i, bc in enumerate(clusterings):
        in_bin = int(_members_in(domain, cover.bins[i]).sum())
        if in_bin > bc.members.size:
            out.append(i)
    return tuple(out)


def build_mapper(cloud: PointCloud, cover: Cover, clusterer: ClustererConfig,
                 domain=None) -> MapperFunction:
    """Cluster every bin of the cover independently over the given domain.

    The cover is taken on the full cloud; the domain (default: all points)
    selects the sample actually clustered, so subsamples reuse one cover.
    """
    if cover.n != cloud.n:
        raise DomainError(f"cover taken on {cover.n} points, cloud has {cloud.n}")
    if domain is None:
        domain = np.arange(cloud.n, dtype=np.int64)
    domain = index_subset(domain, cloud.n)
    clusterings = []
    for i, bin_idx in enumerate(cover.bins):
        members = bin_idx[_members_in(domain, bin_idx)]
        clusterings.append(cluster_bin(cloud, members, clusterer, bin_index=i))
    clusterings = tuple(clusterings)
    return MapperFunction(cover=cover, clusterings=clusterings, domain=domain,
                          unassigned_bins=_unassigned(cover, domain, clusterings))


def restrict(f: MapperFunction, subset) -> MapperFunction:
    """Restrict a Mapper function to a subset of its domain.

    Clusters emptied by the restriction are dropped from the canonical form.
    """
    subset = index_subset(subset, f.cover.n)
    if not np.all(_members_in(f.domain, subset)):
        raise DomainError("subset is not contained in the function's domain")
    clusterings = []
    for bc in f.clusterings:
        keep = _members_in(subset, bc.members)
        members = bc.members[keep]
        labels, s = canonical_labels(bc.labels[keep])
        clusterings.append(BinClustering(bc.bin_index, members, labels, s))
    clusterings = tuple(clusterings)
    return MapperFunction(cover=f.cover, clusterings=clusterings, domain=subset,
                          unassigned_bins=_unassigned(f.cover, subset, clusterings))


def extend_voronoi(cloud: PointCloud, f: MapperFunction, queries) -> MapperFunction:
    """Extend a Mapper function to extra points of the same cloud.

    Per bin, queries falling in the bin take the label of their nearest
    sample member (ties to the smaller member position). Bins without sample
    members leave their queries unlabelled and are flagged.
    """
    queries = index_subset(queries, f.cover.n)
    domain = np.union1d(f.domain, queries)
    clusterings = []
    for i, bc in enumerate(f.clusterings):
        bin_domain = f.cover.bins[i][_members_in(domain, f.cover.bins[i])]
        if bc.members.size == 0:
            clusterings.append(BinClustering(i, _EMPTY, _EMPTY, 0))
            continue
        new_members = bin_domain[~_members_in(bc.members, bin_domain)]
        if new_members.size == 0:
            clusterings.append(bc)
            continue
        new_labels = voronoi_extend(cloud, bc.members, bc.labels, new_members)
        members = np.concatenate([bc.members, new_members])
        order = np.argsort(members, kind="stable")
        members = members[order]
        raw = np.concatenate([bc.labels, new_labels])[order]
        labels, s = canonical_labels(raw)
        members.setflags(write=False)
        clusterings.append(BinClustering(i, members, labels, s))
    clusterings = tuple(clusterings)
    return MapperFunction(cover=f.cover, clusterings=clusterings, domain=domain,
                          unassigned_bins=_unassigned(f.cover, domain, clusterings))


@dataclass
class MapperGraph:
    """Nerve of a Mapper function: weighted vertices and simplices."""

    vertices: list[tuple[int, int, int]]          # (bin, label, size)
    simplices: dict[int, list[tuple[tuple[int, ...], int]]]  # dim -> [(vertex ids, weight)]

    @property
    def edges(self) -> list[tuple[tuple[int, ...], int]]:
        return self.simplices.get(1, [])

    def components(self) -> int:
        parent = list(range(len(self.vertices)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for (u, v), _ in self.edges:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
        return len({find(i) for i in range(len(self.vertices))})

    def summary(self) -> dict:
        v = len(self.vertices)
        e = len(self.edges)
        c = self.components()
        return {"vertices": v, "edges": e, "components": c,
                "cycles": e - v + c if v else 0}

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "vertices": [
                {"bin": b, "label": lab, "size": size}
                for b, lab, size in self.vertices
            ],
            "simplices": {
                str(dim): [{"vertices": list(vs), "weight": w} for vs, w in items]
                for dim, items in sorted(self.simplices.items())
            },
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def to_dot(self) -> str:
        lines = ["graph mapper {"]
        for vid, (b, lab, size) in enumerate(self.vertices):
            lines.append(f'  v{vid} [label="{b}:{lab}", size={size}];')
        for (u, v), w in self.edges:
            lines.append(f"  v{u} -- v{v} [weight={w}];")
        lines.append("}")
        return "\n".join(lines) + "\n"


def nerve(f: MapperFunction, max_dim: int = 2) -> MapperGraph:
    """Weighted nerve of the clusters, up to simplices of dimension max_dim."""
    if max_dim < 1:
        raise ParameterError(f"max_dim must be >= 1, got {max_dim}")
    vertices: list[tuple[int, int, int]] = []
    vid: dict[tuple[int, int], int] = {}
    for bc in f.clusterings:
        sizes = np.bincount(bc.labels, minlength=bc.s + 1)
        for lab in range(1, bc.s + 1):
            vid[(bc.bin_index, lab)] = len(vertices)
            vertices.append((bc.bin_index, lab, int(sizes[lab])))
    incident: dict[int, list[int]] = {}
    for bc in f.clusterings:
        for point, lab in zip(bc.members.tolist(), bc.labels.tolist()):
            incident.setdefault(point, []).append(vid[(bc.bin_index, lab)])
    counters: dict[int, Counter] = {d: Counter() for d in range(1, max_dim + 1)}
    for vids in incident.values():
        if len(vids) < 2:
            continue
        vids = sorted(vids)
        for d in range(1, min(max_dim, len(vids) - 1) + 1):
            counters[d].update(itertools.combinations(vids, d + 1))
    simplices = {
        d: sorted((tup, int(w)) for tup, w in counters[d].items())
        for d in range(1, max_dim + 1) if counters[d]
    }
    return MapperGraph(vertices=vertices, simplices=simplices)


def mapper_function_to_json(f: MapperFunction) -> str:
    """Serialize the combinatorial content of a Mapper function."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "n": f.cover.n,
        "cover": {
            "spec": json.loads(f.cover.spec.to_json()),
            "bins": [b.tolist() for b in f.cover.bins],
            "out_of_range": f.cover.out_of_range.tolist(),
        },
        "domain": f.domain.tolist(),
        "clusterings": [
            {"bin": bc.bin_index, "members": bc.members.tolist(),
             "labels": bc.labels.tolist(), "s": bc.s}
            for bc in f.clusterings
        ],
        "unassigned_bins": list(f.unassigned_bins),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def mapper_function_from_json(text: str) -> MapperFunction:
    doc = json.loads(text)
    spec = CoverSpec.from_json(json.dumps(doc["cover"]["spec"]))
    bins = tuple(np.asarray(b, dtype=np.int64) for b in doc["cover"]["bins"])
    for b in bins:
        b.setflags(write=False)
    oor = np.asarray(doc["cover"]["out_of_range"], dtype=np.int64)
    oor.setflags(write=False)
    cover = Cover(spec=spec, bins=bins, out_of_range=oor, n=int(doc["n"]))
    clusterings = []
    for item in doc["clusterings"]:
        members = np.asarray(item["members"], dtype=np.int64)
        labels = np.asarray(item["labels"], dtype=np.int64)
        members.setflags(write=False)
        labels.setflags(write=False)
        clusterings.append(BinClustering(int(item["bin"]), members, labels,
                                         int(item["s"])))
    domain = np.asarray(doc["domain"], dtype=np.int64)
    domain.setflags(write=False)
    return MapperFunction(cover=cover, clusterings=tuple(clusterings),
                          domain=domain,
                          unassigned_bins=tuple(doc["unassigned_bins"]))
