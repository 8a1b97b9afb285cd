"""Subsampling estimators of Mapper instability.

Two estimators are provided. The k-fold estimator shuffles the data,
removes one of k contiguous blocks at a time, builds a Mapper function per
subsample over the cover of the full dataset, and averages the Mapper
distances between subsample pairs restricted to their intersection. The
paired estimator splits the data into halves, extends each half's Mapper
function to the union by nearest-neighbour labels, and takes the distance
over all points.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .clustering import BinClustering, ClustererConfig
from .cover import Cover
from .dataset import PointCloud
from .distance import mapper_distance
from .errors import ParameterError
from .mapper import MapperFunction, build_mapper, extend_voronoi
from .rng import as_seed_sequence, child, generator


@dataclass
class InstabilityEstimate:
    """One instability estimate with its provenance."""

    value: float
    per_pair_distances: list[float]
    k: int
    m: int
    normalization: str          # "paper": k(k+1)/2, "pairs": number of pairs
    estimator: str              # "kfold" | "paired"
    seed_key: tuple[int, ...]   # spawn key of the shuffle stream
    truncated: int = 0          # trailing shuffled points dropped to reach k*m
    empty_bin_events: int = 0   # (subsample, bin) pairs left without points
    degenerate: bool = False    # some subsample produced an all-empty cover

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "per_pair_distances": list(self.per_pair_distances),
            "k": self.k, "m": self.m,
            "normalization": self.normalization,
            "estimator": self.estimator,
            "seed_key": list(self.seed_key),
            "truncated": self.truncated,
            "empty_bin_events": self.empty_bin_events,
            "degenerate": self.degenerate,
        }


def _restrict_by_mask(f: MapperFunction, keep: np.ndarray,
                      domain: np.ndarray) -> MapperFunction:
    """Cheap restriction for the pair loop: labels keep their names (the
    distance is label-name invariant and tolerates emptied clusters), and
    bins left without points are not re-flagged."""
    clusterings = []
    for bc in f.clusterings:
        m = keep[bc.members]
        clusterings.append(BinClustering(bc.bin_index, bc.members[m],
                                         bc.labels[m], bc.s))
    return MapperFunction(cover=f.cover, clusterings=tuple(clusterings),
                          domain=domain)


def _normalizer(k: int, n_pairs: int, normalization: str) -> float:
    if normalization == "paper":
        return k * (k + 1) / 2
    if normalization == "pairs":
        return float(n_pairs)
    raise ParameterError(f"unknown normalization: {normalization!r}")


def _count_empty_bins(cover: Cover, funcs: list[MapperFunction]) -> int:
    nonempty_full = [b.size > 0 for b in cover.bins]
    events = 0
    for f in funcs:
        for i, bc in enumerate(f.clusterings):
            if nonempty_full[i] and bc.members.size == 0:
                events += 1
    return events


def kfold_instability(cloud: PointCloud, cover: Cover, clusterer: ClustererConfig,
                      k: int, seed, normalization: str = "paper") -> InstabilityEstimate:
    """k-fold subsampling estimate of Mapper instability.

    The data order is shuffled by the seed; at most k-1 trailing shuffled
    points are dropped so that n = k*m. Subsample i omits block i; every
    unordered pair of subsamples contributes one Mapper distance on the
    (k-2)*m points of its intersection. The cover is the one taken on the
    full dataset, so bins stay comparable across subsamples.
    """
    n = cloud.n
    if k < 3:
        raise ParameterError(f"k must be >= 3, got {k}")
    if k > n:
        raise ParameterError(f"k={k} exceeds the sample size n={n}")
    ss = as_seed_sequence(seed)
    m = n // k
    used = k * m
    perm = generator(ss).permutation(n)[:used]
    blocks = [np.sort(perm[i * m:(i + 1) * m]) for i in range(k)]
    all_used = np.sort(perm)
    subsamples = [
        np.setdiff1d(all_used, blocks[i], assume_unique=True) for i in range(k)
    ]
    funcs = [build_mapper(cloud, cover, clusterer, domain=sub) for sub in subsamples]
    degenerate = any(all(bc.members.size == 0 for bc in f.clusterings) for f in funcs)
    block_mask = np.zeros(n, dtype=bool)
    distances = []
    for i in range(k):
        block_mask[blocks[i]] = True
        for j in range(i + 1, k):
            block_mask[blocks[j]] = True
            keep = ~block_mask
            inter = subsamples[i][keep[subsamples[i]]]
            d = mapper_distance(_restrict_by_mask(funcs[i], keep, inter),
                                _restrict_by_mask(funcs[j], keep, inter))
            block_mask[blocks[j]] = False
            distances.append(d)
        block_mask[blocks[i]] = False
    norm = _normalizer(k, len(distances), normalization)
    return InstabilityEstimate(
        value=float(sum(distances) / norm),
        per_pair_distances=distances,
        k=k, m=m, normalization=normalization, estimator="kfold",
        seed_key=tuple(ss.spawn_key),
        truncated=n - used,
        empty_bin_events=_count_empty_bins(cover, funcs),
        degenerate=degenerate,
    )


def paired_instability(cloud: PointCloud, cover: Cover, clusterer: ClustererConfig,
                       trials: int, seed) -> InstabilityEstimate:
    """Two-sample estimate of Mapper instability.

    Per trial, the shuffled data is split into halves; each half's Mapper
    function is extended to all points by per-bin nearest-neighbour labels
    and the Mapper distance is taken over the full point set. The estimate
    is the mean over trials.
    """
    n = cloud.n
    if n % 2 != 0:
        raise ParameterError(f"paired estimator needs an even n, got {n}")
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    ss = as_seed_sequence(seed)
    half = n // 2
    distances = []
    empty_events = 0
    degenerate = False
    for trial in range(trials):
        perm = generator(child(ss, trial)).permutation(n)
        first = np.sort(perm[:half])
        second = np.sort(perm[half:])
        fa = build_mapper(cloud, cover, clusterer, domain=first)
        fb = build_mapper(cloud, cover, clusterer, domain=second)
        empty_events += _count_empty_bins(cover, [fa, fb])
        degenerate |= any(
            all(bc.members.size == 0 for bc in f.clusterings) for f in (fa, fb)
        )
        ea = extend_voronoi(cloud, fa, second)
        eb = extend_voronoi(cloud, fb, first)
        distances.append(mapper_distance(ea, eb))
    return InstabilityEstimate(
        value=float(sum(distances) / len(distances)),
        per_pair_distances=distances,
        k=2, m=half, normalization="pairs", estimator="paired",
        seed_key=tuple(ss.spawn_key),
        truncated=0,
        empty_bin_events=empty_events,
        degenerate=degenerate,
    )


def _one_estimate(args) -> InstabilityEstimate:
    cloud, cover, clusterer, k, seed, normalization, estimator, trials = args
    if estimator == "kfold":
        return kfold_instability(cloud, cover, clusterer, k, seed, normalization)
    if estimator == "paired":
        return paired_instability(cloud, cover, clusterer, trials, seed)
    raise ParameterError(f"unknown estimator: {estimator!r}")


def averaged_instability(cloud: PointCloud, cover: Cover, clusterer: ClustererConfig,
                         k: int, repeats: int, seed,
                         normalization: str = "paper", estimator: str = "kfold",
                         trials: int = 10, jobs: int = 1):
    """Mean and spread of the estimator over independently shuffled copies.

    Returns (mean, std, estimates); std is the sample standard deviation
    (0.0 for a single repeat). Results do not depend on the worker count.
    """
    if repeats < 1:
        raise ParameterError(f"repeats must be >= 1, got {repeats}")
    ss = as_seed_sequence(seed)
    tasks = [
        (cloud, cover, clusterer, k, child(ss, r), normalization, estimator, trials)
        for r in range(repeats)
    ]
    if jobs > 1 and repeats > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            estimates = list(pool.map(_one_estimate, tasks))
    else:
        estimates = [_one_estimate(t) for t in tasks]
    values = np.array([e.value for e in estimates])
    std = float(values.std(ddof=1)) if repeats > 1 else 0.0
    return float(values.mean()), std, estimates
