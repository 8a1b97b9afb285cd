"""Per-bin clustering procedures and nearest-neighbour label extension.

Two procedures are shipped: neighbourhood clustering (connected components of
the graph joining points at distance <= epsilon) and K-means (seeded
restarts of Lloyd iterations, best run kept by its empirical objective).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .dataset import PointCloud, index_subset
from .errors import ExtensionError, ParameterError

_MINKOWSKI_P = {"euclidean": 2.0, "manhattan": 1.0, "chebyshev": np.inf}
_CDIST = {"euclidean": "euclidean", "manhattan": "cityblock", "chebyshev": "chebyshev"}


def canonical_labels(raw) -> tuple[np.ndarray, int]:
    """Renumber labels to 1..s in order of first occurrence."""
    raw = np.asarray(raw)
    if raw.size == 0:
        return np.empty(0, dtype=np.int64), 0
    uniq, inv = np.unique(raw, return_inverse=True)
    first = np.full(uniq.size, raw.size, dtype=np.int64)
    np.minimum.at(first, inv, np.arange(raw.size))
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(uniq.size)
    labels = (rank[inv] + 1).astype(np.int64)
    labels.setflags(write=False)
    return labels, int(uniq.size)


@dataclass(frozen=True)
class BinClustering:
    """Labelling of the points of one bin into clusters 1..s."""

    bin_index: int
    members: np.ndarray   # sorted point indices into the cloud
    labels: np.ndarray    # label in 1..s per member, first-occurrence order
    s: int                # number of clusters

    def __post_init__(self):
        if self.members.shape != self.labels.shape:
            raise ParameterError("members and labels must have equal length")

    def cluster_members(self) -> list[np.ndarray]:
        """Point indices of each cluster, by label 1..s."""
        return [self.members[self.labels == lab] for lab in range(1, self.s + 1)]


@dataclass(frozen=True)
class ClustererConfig:
    """Which per-bin clustering procedure to run, and with what parameters."""

    method: str                      # "epsilon" | "kmeans"
    epsilon: float | None = None
    K: int | None = None
    restarts: int = 4
    max_iter: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.method == "epsilon":
            if self.epsilon is None or self.epsilon <= 0:
                raise ParameterError("epsilon method needs epsilon > 0")
        elif self.method == "kmeans":
            if self.K is None or self.K < 1:
                raise ParameterError("kmeans method needs K >= 1")
            if self.restarts < 1:
                raise ParameterError("restarts must be >= 1")
        else:
            raise ParameterError(f"unknown clustering method: {self.method!r}")

    def to_dict(self) -> dict:
        return {
            "method": self.method, "epsilon": self.epsilon, "K": self.K,
            "restarts": self.restarts, "max_iter": self.max_iter, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ClustererConfig":
        return cls(method=doc["method"], epsilon=doc.get("epsilon"),
                   K=doc.get("K"), restarts=doc.get("restarts", 4),
                   max_iter=doc.get("max_iter", 100), seed=doc.get("seed", 0))


def _empty_clustering(bin_index: int) -> BinClustering:
    empty = np.empty(0, dtype=np.int64)
    empty.setflags(write=False)
    return BinClustering(bin_index, empty, empty, 0)


def epsilon_cluster(cloud: PointCloud, members, epsilon: float,
                    bin_index: int = 0) -> BinClustering:
    """Connected components of the graph with an edge between members at
    distance <= epsilon. Every point is labelled; an empty bin gives s=0."""
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    members = index_subset(members, cloud.n)
    if members.size == 0:
        return _empty_clustering(bin_index)
    pts = cloud.points[members]
    tree = cKDTree(pts)
    pairs = tree.query_pairs(r=epsilon, p=_MINKOWSKI_P[cloud.metric_id],
                             output_type="ndarray")
    m = members.size
    graph = coo_matrix(
        (np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])),
        shape=(m, m),
    )
    _, comp = connected_components(graph, directed=False)
    labels, s = canonical_labels(comp)
    return BinClustering(bin_index, members, labels, s)


def _kmeanspp_init(pts: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = pts.shape[0]
    centers = np.empty((K, pts.shape[1]))
    centers[0] = pts[int(rng.integers(n))]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0.0:  # remaining points coincide with a centre
            centers[k] = pts[int(rng.integers(n))]
            continue
        cum = np.cumsum(d2 / total)
        j = min(int(np.searchsorted(cum, rng.random(), side="right")), n - 1)
        centers[k] = pts[j]
        d2 = np.minimum(d2, ((pts - pts[j]) ** 2).sum(axis=1))
    return centers


def _lloyd(pts: np.ndarray, K: int, rng: np.random.Generator, max_iter: int):
    """One Lloyd run. Returns (labels, centers, plain-distance objective,
    per-iteration trace of the summed squared distances)."""
    n = pts.shape[0]
    centers = _kmeanspp_init(pts, K, rng)
    labels = None
    trace: list[float] = []
    x2 = (pts ** 2).sum(axis=1)
    for _ in range(max_iter):
        # squared distances via the expansion |x|^2 - 2 x.c + |c|^2
        d2 = x2[:, None] - 2.0 * (pts @ centers.T) + (centers ** 2).sum(axis=1)
        new = d2.argmin(axis=1)
        counts = np.bincount(new, minlength=K)
        for k in range(K):
            if counts[k] == 0:
                # hand the empty slot the farthest point whose cluster survives
                movable = counts[new] >= 2
                cand = np.where(movable, d2[np.arange(n), new], -1.0)
                far = int(np.argmax(cand))
                counts[new[far]] -= 1
                new[far] = k
                counts[k] += 1
                centers[k] = pts[far]
                d2[:, k] = ((pts - centers[k]) ** 2).sum(axis=1)
        changed = labels is None or not np.array_equal(new, labels)
        labels = new
        for k in range(K):
            centers[k] = pts[labels == k].mean(axis=0)
        trace.append(float(((pts - centers[labels]) ** 2).sum()))
        if not changed:
            break
    objective = float(np.sqrt(((pts - centers[labels]) ** 2).sum(axis=1)).sum() / n)
    return labels, centers, objective, trace


def kmeans_cluster(cloud: PointCloud, members, K: int, seed,
                   restarts: int = 4, max_iter: int = 100, bin_index: int = 0,
                   return_info: bool = False):
    """Best-of-restarts K-means labelling of one bin.

    The run kept is the one with the lowest empirical objective: the mean
    distance between the points and their cluster centroid. A bin with fewer
    than K points falls back to one singleton cluster per point.
    """
    if K < 1:
        raise ParameterError(f"K must be >= 1, got {K}")
    if restarts < 1:
        raise ParameterError(f"restarts must be >= 1, got {restarts}")
    if cloud.metric_id != "euclidean":
        raise ParameterError("kmeans requires the euclidean metric")
    members = index_subset(members, cloud.n)
    m = members.size
    if m == 0:
        bc = _empty_clustering(bin_index)
        return (bc, {"objective": 0.0, "trace": []}) if return_info else bc
    if m < K:
        labels = np.arange(1, m + 1, dtype=np.int64)
        labels.setflags(write=False)
        bc = BinClustering(bin_index, members, labels, m)
        return (bc, {"objective": 0.0, "trace": []}) if return_info else bc
    pts = cloud.points[members]
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    best = None
    for r in range(restarts):
        ss = np.random.SeedSequence(entropy=root.entropy,
                                    spawn_key=tuple(root.spawn_key) + (r,))
        rng = np.random.Generator(np.random.PCG64(ss))
        labels, centers, objective, trace = _lloyd(pts, K, rng, max_iter)
        if best is None or objective < best[2]:
            best = (labels, centers, objective, trace)
    canon, s = canonical_labels(best[0])
    bc = BinClustering(bin_index, members, canon, s)
    if return_info:
        return bc, {"objective": best[2], "trace": best[3], "centers": best[1]}
    return bc


def voronoi_extend(cloud: PointCloud, sample, labels, queries,
                   chunk: int = 2048) -> np.ndarray:
    """Label each query with the label of its nearest sample point.

    Distance ties go to the sample point at the smaller position, so a query
    coinciding with a sample point receives that point's own label.
    """
    sample = index_subset(sample, cloud.n)
    queries = index_subset(queries, cloud.n)
    if sample.size == 0:
        raise ExtensionError("cannot extend from an empty sample")
    labels = np.asarray(labels)
    if labels.shape[0] != sample.size:
        raise ParameterError("one label per sample point required")
    out = np.empty(queries.size, dtype=labels.dtype)
    spts = cloud.points[sample]
    metric = _CDIST[cloud.metric_id]
    for start in range(0, queries.size, chunk):
        block = queries[start:start + chunk]
        d = cdist(cloud.points[block], spts, metric=metric)
        out[start:start + chunk] = labels[d.argmin(axis=1)]
    return out


def cluster_bin(cloud: PointCloud, members, config: ClustererConfig,
                bin_index: int = 0) -> BinClustering:
    """Run the configured procedure on one bin, with a per-bin RNG stream."""
    if config.method == "epsilon":
        return epsilon_cluster(cloud, members, config.epsilon, bin_index=bin_index)
    seed = np.random.SeedSequence(entropy=config.seed, spawn_key=(bin_index,))
    return kmeans_cluster(cloud, members, config.K, seed,
                          restarts=config.restarts, max_iter=config.max_iter,
                          bin_index=bin_index)
