import numpy as np

from mapperstab.clustering import BinClustering, canonical_labels
from mapperstab.cover import Cover, explicit_cover
from mapperstab.mapper import MapperFunction

_EMPTY = np.empty(0, dtype=np.int64)
_EMPTY.setflags(write=False)


def make_cover(bins, n):
    """Cover over n points from explicit index sets (dummy unit boxes)."""
    spec = explicit_cover(np.array([[[0.0, 1.0]]] * len(bins)))
    arrays = []
    covered = np.zeros(n, dtype=bool)
    for b in bins:
        arr = np.asarray(sorted(b), dtype=np.int64)
        arr.setflags(write=False)
        arrays.append(arr)
        covered[arr] = True
    out = np.nonzero(~covered)[0].astype(np.int64)
    out.setflags(write=False)
    return Cover(spec=spec, bins=tuple(arrays), out_of_range=out, n=n)


def make_function(cover, labelings, domain=None):
    """Mapper function from per-bin {point: label} dicts (None = empty bin)."""
    n = cover.n
    if domain is None:
        domain = np.arange(n, dtype=np.int64)
    else:
        domain = np.asarray(sorted(domain), dtype=np.int64)
    domain.setflags(write=False)
    clusterings = []
    for i, lab in enumerate(labelings):
        if not lab:
            clusterings.append(BinClustering(i, _EMPTY, _EMPTY, 0))
            continue
        members = np.asarray(sorted(lab), dtype=np.int64)
        raw = np.asarray([lab[int(m)] for m in members])
        labels, s = canonical_labels(raw)
        members.setflags(write=False)
        clusterings.append(BinClustering(i, members, labels, s))
    return MapperFunction(cover=cover, clusterings=tuple(clusterings),
                          domain=domain)


def random_mapper_pair(rng, n=20, t=3, kmax=4, p_empty=0.08, p_partial=0.15):
    """Two random Mapper functions on one cover/domain, with occasional
    empty or partially labelled bins (as nearest-neighbour extensions give)."""
    bins = []
    for _ in range(t):
        size = int(rng.integers(1, n + 1))
        bins.append(np.sort(rng.choice(n, size=size, replace=False)))
    cover = make_cover(bins, n)

    def rand_func():
        labelings = []
        for b in bins:
            if rng.random() < p_empty:
                labelings.append(None)
                continue
            members = b
            if rng.random() < p_partial and b.size > 1:
                keep = rng.random(b.size) < 0.7
                if not keep.any():
                    keep[0] = True
                members = b[keep]
            k = int(rng.integers(1, kmax + 1))
            labelings.append(
                {int(m): int(rng.integers(1, k + 1)) for m in members})
        return make_function(cover, labelings)

    return rand_func(), rand_func()
