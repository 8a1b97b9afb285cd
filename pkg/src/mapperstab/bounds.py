"""Empirical estimators for decision-boundary geometry in two dimensions.

A BoundaryField is a labelling per bin evaluable at arbitrary 2-D points
(either the nearest-sample-point extension of a bin clustering or an
analytic labelling). Decision boundaries are located on a raster by label
changes, plus the bin's own box boundary. On top of that sit a Monte-Carlo
tube-mass estimator, the interleaving-style boundary distance between two
fields, and the scenario-driven check that measured instability stays below
its tube/boundary/empty-bin bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .clustering import ClustererConfig
from .cover import Cover, CoverSpec, assign_bins, interval_cover
from .dataset import PointCloud
from .errors import (ComputationError, CoverError, DimensionError,
                     ParameterError)
from .instability import averaged_instability, paired_instability
from .mapper import MapperFunction, build_mapper
from .rng import as_seed_sequence, child, generator


def _nearest_labeler(anchors: np.ndarray, labels: np.ndarray, chunk: int = 4096):
    """Labeling by nearest anchor, ties to the smaller anchor position."""
    anchors = np.asarray(anchors, dtype=np.float64)
    labels = np.asarray(labels)

    def evaluate(pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        out = np.empty(pts.shape[0], dtype=labels.dtype)
        for start in range(0, pts.shape[0], chunk):
            d = cdist(pts[start:start + chunk], anchors)
            out[start:start + chunk] = labels[d.argmin(axis=1)]
        return out

    return evaluate


def halfplane_labeler(axis: int = 0, threshold: float = 0.0):
    """Analytic two-cluster labelling split by one coordinate."""

    def evaluate(pts: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(pts)[:, axis] < threshold, 1, 2)

    return evaluate


def _bin_boxes(spec: CoverSpec, filter_axis: int | None, clip) -> list[np.ndarray]:
    """Geometric 2-D box of each bin: the cover box on the filter axis,
    the clip rectangle on the remaining axes."""
    clip = np.asarray(clip, dtype=np.float64)
    if clip.shape != (2, 2):
        raise DimensionError("clip must be a (2, 2) array of per-axis [lo, hi]")
    boxes = []
    for box in spec.boxes:
        if spec.dim == 2:
            boxes.append(np.asarray(box, dtype=np.float64))
        elif spec.dim == 1:
            if filter_axis is None:
                raise ParameterError("filter_axis needed for a 1-D cover spec")
            full = clip.copy()
            full[filter_axis] = box[0]
            boxes.append(full)
        else:
            raise DimensionError("boundary fields are 2-D only")
    return boxes


class BoundaryField:
    """Per bin: a closed 2-D box and a labelling evaluable inside it."""

    def __init__(self, boxes, labelers):
        self.boxes = [np.asarray(b, dtype=np.float64) for b in boxes]
        for b in self.boxes:
            if b.shape != (2, 2):
                raise DimensionError("each bin box must be a (2, 2) array")
        self.labelers = list(labelers)
        self._boundary_cache: dict[tuple[int, int], cKDTree | None] = {}

    @property
    def t(self) -> int:
        return len(self.boxes)

    @classmethod
    def from_mapper(cls, cloud: PointCloud, f: MapperFunction,
                    filter_axis: int | None = None, clip=None) -> "BoundaryField":
        """Field of a Mapper function: per bin, the nearest-member extension
        of its clustering. Every bin needs at least one sample member."""
        if cloud.dim != 2:
            raise DimensionError("boundary fields are 2-D only")
        if clip is None:
            clip = np.stack([cloud.points.min(axis=0), cloud.points.max(axis=0)],
                            axis=1)
        boxes = _bin_boxes(f.cover.spec, filter_axis, clip)
        labelers = []
        for i, bc in enumerate(f.clusterings):
            if bc.members.size == 0:
                raise ComputationError(f"bin {i} has no sample members")
            labelers.append(_nearest_labeler(cloud.points[bc.members], bc.labels))
        return cls(boxes, labelers)

    @classmethod
    def from_analytic(cls, boxes, labelers) -> "BoundaryField":
        return cls(boxes, labelers)

    def label(self, b: int, pts: np.ndarray) -> np.ndarray:
        return self.labelers[b](pts)

    def raster_centers(self, b: int, raster: int) -> np.ndarray:
        box = self.boxes[b]
        xs = box[0, 0] + (np.arange(raster) + 0.5) * (box[0, 1] - box[0, 0]) / raster
        ys = box[1, 0] + (np.arange(raster) + 0.5) * (box[1, 1] - box[1, 0]) / raster
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def _label_boundary_tree(self, b: int, raster: int) -> cKDTree | None:
        key = (b, raster)
        if key not in self._boundary_cache:
            pts = self.raster_centers(b, raster)
            lab = self.label(b, pts).reshape(raster, raster)
            grid = pts.reshape(raster, raster, 2)
            mids = []
            dx = lab[1:, :] != lab[:-1, :]
            if dx.any():
                mids.append((grid[1:, :][dx] + grid[:-1, :][dx]) / 2.0)
            dy = lab[:, 1:] != lab[:, :-1]
            if dy.any():
                mids.append((grid[:, 1:][dy] + grid[:, :-1][dy]) / 2.0)
            if mids:
                self._boundary_cache[key] = cKDTree(np.concatenate(mids))
            else:
                self._boundary_cache[key] = None
        return self._boundary_cache[key]

    def dist_to_boundary(self, b: int, pts: np.ndarray, raster: int) -> np.ndarray:
        """Distance to the bin's decision boundary: label-change locus plus
        the box boundary. Points outside the box get +inf (not in the bin)."""
        box = self.boxes[b]
        pts = np.asarray(pts, dtype=np.float64)
        inside = np.ones(pts.shape[0], dtype=bool)
        edge = np.full(pts.shape[0], np.inf)
        for axis in range(2):
            lo, hi = box[axis]
            inside &= (pts[:, axis] >= lo) & (pts[:, axis] <= hi)
            edge = np.minimum(edge, np.minimum(pts[:, axis] - lo, hi - pts[:, axis]))
        tree = self._label_boundary_tree(b, raster)
        if tree is not None:
            edge = np.minimum(edge, tree.query(pts)[0])
        edge[~inside] = np.inf
        return edge


@dataclass
class TubeEstimate:
    gamma: float
    mass: float                # Monte-Carlo mass of the union tube
    mc_points: int
    stderr: float
    per_bin: list[float]       # mass of each bin's own tube
    per_bin_stderr: list[float]


def _binom_se(p: float, m: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / m)


def tube_mass(field: BoundaryField, gamma: float, sampler, mc_points: int,
              seed, raster: int = 64) -> TubeEstimate:
    """Monte-Carlo mass of the set of points within gamma of a decision
    boundary of some bin containing them."""
    if gamma < 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    if mc_points < 1:
        raise ParameterError(f"mc_points must be >= 1, got {mc_points}")
    pts = sampler.sample(generator(seed), mc_points)
    min_d = np.full(mc_points, np.inf)
    per_bin = []
    per_bin_se = []
    for b in range(field.t):
        d = field.dist_to_boundary(b, pts, raster)
        p = float((d <= gamma).mean())
        per_bin.append(p)
        per_bin_se.append(_binom_se(p, mc_points))
        min_d = np.minimum(min_d, d)
    mass = float((min_d <= gamma).mean())
    return TubeEstimate(gamma=float(gamma), mass=mass, mc_points=mc_points,
                        stderr=_binom_se(mass, mc_points),
                        per_bin=per_bin, per_bin_stderr=per_bin_se)


def _partitions_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Do two labelings of the same points induce the same partition?"""
    if a.size == 0:
        return True
    a = a.astype(np.int64)
    b = b.astype(np.int64)
    pairs = a * (b.max() + 1) + b
    return len(np.unique(pairs)) == len(np.unique(a)) == len(np.unique(b))


@dataclass
class BoundaryDistanceResult:
    value: float
    per_bin: list[float]
    indeterminate: bool        # some bin had no raster cell outside the tubes


def boundary_distance_2d(field_f: BoundaryField, field_g: BoundaryField,
                         raster: int = 64) -> BoundaryDistanceResult:
    """Smallest gamma (per bin, on the raster) such that each labelling
    matches the other's partition outside the other's gamma-tube; the
    overall value is the max over bins.

    A positive per-bin value is padded by half a raster cell diagonal (the
    locating error of the raster), so the estimate errs on the large side
    and converges from above as the raster refines. Identical labelings
    still give exactly zero.
    """
    if field_f.t != field_g.t or any(
        not np.array_equal(a, b) for a, b in zip(field_f.boxes, field_g.boxes)
    ):
        raise CoverError("boundary distance needs fields over the same bins")
    per_bin = []
    indeterminate = False
    for b in range(field_f.t):
        box = field_f.boxes[b]
        half_diag = 0.5 * math.hypot(
            (box[0, 1] - box[0, 0]) / raster, (box[1, 1] - box[1, 0]) / raster)
        pts = field_f.raster_centers(b, raster)
        fl = field_f.label(b, pts)
        gl = field_g.label(b, pts)
        df = field_f.dist_to_boundary(b, pts, raster)
        dg = field_g.dist_to_boundary(b, pts, raster)
        cand = np.unique(np.concatenate([[0.0], df, dg]))
        cand = cand[np.isfinite(cand)]

        def ok(gamma: float) -> bool:
            out_f = df > gamma
            out_g = dg > gamma
            return (_partitions_equal(fl[out_f], gl[out_f])
                    and _partitions_equal(fl[out_g], gl[out_g]))

        lo, hi = 0, len(cand) - 1
        if not ok(cand[hi]):
            # cannot happen: at the largest distance both complements are empty
            per_bin.append(float(cand[hi]))
            indeterminate = True
            continue
        while lo < hi:
            mid = (lo + hi) // 2
            if ok(cand[mid]):
                hi = mid
            else:
                lo = mid + 1
        gamma = float(cand[lo])
        if not (df > gamma).any() or not (dg > gamma).any():
            indeterminate = True
        if gamma > 0.0:
            gamma += half_diag
        per_bin.append(gamma)
    return BoundaryDistanceResult(value=float(max(per_bin)) if per_bin else 0.0,
                                  per_bin=per_bin, indeterminate=indeterminate)


# ---------------------------------------------------------------------------
# samplers and scenarios

@dataclass(frozen=True)
class UniformBoxSampler:
    lo: tuple[float, float]
    hi: tuple[float, float]

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        return rng.uniform(np.asarray(self.lo), np.asarray(self.hi), (m, 2))


@dataclass(frozen=True)
class GaussianMixtureSampler:
    means: tuple[tuple[float, float], ...]
    sigma: float

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        centers = np.asarray(self.means, dtype=np.float64)
        comp = rng.integers(0, len(centers), m)
        return centers[comp] + self.sigma * rng.standard_normal((m, 2))


@dataclass(frozen=True)
class Scenario:
    """A synthetic 2-D setup whose population-optimal labelling is known."""

    name: str
    n: int
    sampler: object
    spec: CoverSpec
    filter_axis: int | None
    clip: tuple
    clusterer: ClustererConfig
    analytic_field: BoundaryField
    separation: float
    diameter: float

    def draw(self, seed) -> PointCloud:
        return PointCloud(self.sampler.sample(generator(seed), self.n))

    def filter_values(self, cloud: PointCloud) -> np.ndarray:
        if self.filter_axis is None:
            return cloud.points.copy()
        return cloud.points[:, self.filter_axis]

    def make_cover(self, cloud: PointCloud) -> Cover:
        return assign_bins(self.spec, self.filter_values(cloud))


def scenario_separated_gaussians(n: int = 400) -> Scenario:
    """Two unit Gaussians 10 sigma apart, one bin, K-means K=2; the optimal
    decision boundary is the vertical bisector."""
    clip = np.array([[-10.0, 10.0], [-5.0, 5.0]])
    spec = interval_cover(np.empty(0), t=1, gain=0.0, range_override=(-10.0, 10.0))
    boxes = _bin_boxes(spec, 0, clip)
    analytic = BoundaryField.from_analytic(boxes, [halfplane_labeler(0, 0.0)])
    return Scenario(
        name="separated_gaussians", n=n,
        sampler=GaussianMixtureSampler(means=((-5.0, 0.0), (5.0, 0.0)), sigma=1.0),
        spec=spec, filter_axis=0, clip=tuple(map(tuple, clip)),
        clusterer=ClustererConfig(method="kmeans", K=2, seed=0),
        analytic_field=analytic, separation=10.0,
        diameter=float(np.hypot(20.0, 10.0)),
    )


def scenario_gaussian_quad(n: int = 512) -> Scenario:
    """Four unit Gaussians at (+-4, +-4), two bins on the y axis with 15%
    overlap, K-means K=2 per bin; both optimal boundaries are the vertical
    bisector."""
    clip = np.array([[-9.0, 9.0], [-8.0, 8.0]])
    spec = interval_cover(np.empty(0), t=2, gain=0.15, range_override=(-8.0, 8.0))
    boxes = _bin_boxes(spec, 1, clip)
    analytic = BoundaryField.from_analytic(
        boxes, [halfplane_labeler(0, 0.0), halfplane_labeler(0, 0.0)])
    return Scenario(
        name="gaussian_quad", n=n,
        sampler=GaussianMixtureSampler(
            means=((-4.0, -4.0), (4.0, -4.0), (-4.0, 4.0), (4.0, 4.0)), sigma=1.0),
        spec=spec, filter_axis=1, clip=tuple(map(tuple, clip)),
        clusterer=ClustererConfig(method="kmeans", K=2, seed=0),
        analytic_field=analytic, separation=8.0,
        diameter=float(np.hypot(18.0, 16.0)),
    )


def scenario_uniform_rect(n: int = 400) -> Scenario:
    """Uniform density on a wide rectangle, one bin, K-means K=2; the unique
    optimal split is the vertical bisector."""
    clip = np.array([[-1.0, 1.0], [-0.4, 0.4]])
    spec = interval_cover(np.empty(0), t=1, gain=0.0, range_override=(-1.0, 1.0))
    boxes = _bin_boxes(spec, 0, clip)
    analytic = BoundaryField.from_analytic(boxes, [halfplane_labeler(0, 0.0)])
    return Scenario(
        name="uniform_rect", n=n,
        sampler=UniformBoxSampler(lo=(-1.0, -0.4), hi=(1.0, 0.4)),
        spec=spec, filter_axis=0, clip=tuple(map(tuple, clip)),
        clusterer=ClustererConfig(method="kmeans", K=2, seed=0),
        analytic_field=analytic, separation=1.0,
        diameter=float(np.hypot(2.0, 0.8)),
    )


def builtin_scenarios() -> dict:
    return {
        "separated_gaussians": scenario_separated_gaussians,
        "gaussian_quad": scenario_gaussian_quad,
        "uniform_rect": scenario_uniform_rect,
    }


def theorem1_bound(scenario: Scenario, gammas, trials: int, seed,
                   mc_points: int = 20000, raster: int = 64,
                   instability_k: int = 8, instability_repeats: int = 3) -> dict:
    """Estimate, per gamma, the three summands of the instability bound
    (tube mass of the optimal labelling, probability the empirical boundary
    strays beyond gamma, probability of an empty bin), compare the bound
    against measured instability, and report each verdict.

    The instability side uses the per-pair mean ("pairs" normalization),
    the estimator of the expectation the bound controls.
    """
    ss = as_seed_sequence(seed)
    gammas = [float(g) for g in np.atleast_1d(gammas)]
    d_values: list[float | None] = []
    empty = 0
    for trial in range(trials):
        cloud = scenario.draw(child(ss, 0, trial))
        cover = scenario.make_cover(cloud)
        if any(b.size == 0 for b in cover.bins):
            empty += 1
            d_values.append(None)
            continue
        f_n = build_mapper(cloud, cover, scenario.clusterer)
        field_n = BoundaryField.from_mapper(
            cloud, f_n, filter_axis=scenario.filter_axis,
            clip=np.asarray(scenario.clip))
        d_values.append(boundary_distance_2d(field_n, scenario.analytic_field,
                                             raster=raster).value)

    inst_cloud = scenario.draw(child(ss, 2))
    inst_cover = scenario.make_cover(inst_cloud)
    kfold_mean, kfold_std, _ = averaged_instability(
        inst_cloud, inst_cover, scenario.clusterer, instability_k,
        instability_repeats, child(ss, 3), normalization="pairs")
    if inst_cloud.n % 2 == 0:
        paired_value = paired_instability(inst_cloud, inst_cover,
                                          scenario.clusterer,
                                          instability_repeats, child(ss, 4)).value
    else:
        paired_value = None

    p_empty = empty / trials
    se_empty = _binom_se(p_empty, trials)
    per_gamma = []
    for i, gamma in enumerate(gammas):
        tube = tube_mass(scenario.analytic_field, gamma, scenario.sampler,
                         mc_points, child(ss, 1), raster=raster)
        exceed = sum(1 for d in d_values if d is not None and d > gamma)
        p_bd = exceed / trials
        se_bd = _binom_se(p_bd, trials)
        bound = 2.0 * (tube.mass + p_bd + p_empty)
        se = 2.0 * math.sqrt(tube.stderr ** 2 + se_bd ** 2 + se_empty ** 2)
        per_gamma.append({
            "gamma": gamma,
            "tube_mass": tube.mass, "tube_stderr": tube.stderr,
            "tube_per_bin": tube.per_bin,
            "boundary_exceed": p_bd, "boundary_stderr": se_bd,
            "empty_bin": p_empty, "empty_bin_stderr": se_empty,
            "bound": bound, "bound_stderr": se,
            "holds_kfold": bool(kfold_mean <= bound + 3.0 * se),
            "holds_paired": (None if paired_value is None
                             else bool(paired_value <= bound + 3.0 * se)),
        })
    return {
        "scenario": scenario.name,
        "n": scenario.n,
        "trials": trials,
        "raster": raster,
        "mc_points": mc_points,
        "boundary_distances": [d for d in d_values if d is not None],
        "per_gamma": per_gamma,
        "instability_kfold_mean": kfold_mean,
        "instability_kfold_std": kfold_std,
        "instability_paired": paired_value,
    }
