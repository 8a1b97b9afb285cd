"""Covers of a point cloud: interval covers from a 1-D filter, grid covers
for d-dimensional filters, and explicit user-supplied boxes.

All boxes are closed on every axis, so a filter value sitting exactly on a
joint belongs to every touching bin. Generated covers are ordered
lexicographically by box origin.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .dataset import PointCloud
from .errors import DimensionError, ParameterError, RangeError

SCHEMA_VERSION = 1


def axis_filter(cloud: PointCloud, axis: int) -> np.ndarray:
    """Coordinate-projection filter: value of each point on one axis."""
    if not 0 <= axis < cloud.dim and cloud.n > 0:
        raise DimensionError(f"axis {axis} out of range for dim {cloud.dim}")
    return cloud.points[:, axis].copy() if cloud.n else np.empty(0)


def identity_filter(cloud: PointCloud) -> np.ndarray:
    """Identity filter: each point filters to its own coordinates."""
    return cloud.points.copy()


@dataclass(frozen=True)
class CoverSpec:
    """Geometry of a cover: t boxes in filter space plus its provenance."""

    kind: str                              # "intervals" | "grid" | "explicit"
    boxes: np.ndarray                      # (t, d, 2): [lo, hi] per axis
    resolution: tuple[int, ...]            # per-axis interval count (generated kinds)
    gain: float
    ranges: tuple[tuple[float, float], ...]  # per-axis anchor [lo, hi]

    @property
    def t(self) -> int:
        return self.boxes.shape[0]

    @property
    def dim(self) -> int:
        return self.boxes.shape[1]

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "resolution": list(self.resolution),
            "gain": self.gain,
            "ranges": [list(r) for r in self.ranges],
            "boxes": self.boxes.tolist(),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "CoverSpec":
        doc = json.loads(text)
        return cls(
            kind=doc["kind"],
            boxes=np.asarray(doc["boxes"], dtype=np.float64),
            resolution=tuple(int(t) for t in doc["resolution"]),
            gain=float(doc["gain"]),
            ranges=tuple((float(lo), float(hi)) for lo, hi in doc["ranges"]),
        )


@dataclass(frozen=True)
class Cover:
    """A CoverSpec restricted to a cloud: per-bin point-index sets."""

    spec: CoverSpec
    bins: tuple[np.ndarray, ...]     # sorted point indices per box
    out_of_range: np.ndarray         # points inside no box (reported, never dropped)
    n: int                           # size of the cloud the cover was taken on

    @property
    def t(self) -> int:
        return len(self.bins)


def _axis_intervals(lo: float, hi: float, t: int, gain: float) -> np.ndarray:
    """t closed intervals covering [lo, hi], consecutive ones overlapping by
    `gain` of the interval length: L = (hi - lo) / (t - (t - 1) * gain)."""
    if t < 1:
        raise ParameterError(f"interval count must be >= 1, got {t}")
    if not 0.0 <= gain < 1.0:
        raise ParameterError(f"gain must lie in [0, 1), got {gain}")
    if hi < lo:
        raise RangeError(f"empty range [{lo}, {hi}]")
    length = (hi - lo) / (t - (t - 1) * gain)
    starts = lo + np.arange(t) * (1.0 - gain) * length
    ivals = np.stack([starts, starts + length], axis=1)
    # snap the outer endpoints so no in-range value is lost to rounding
    ivals[0, 0] = lo
    ivals[-1, 1] = hi
    return ivals


def _resolve_range(values: np.ndarray, override) -> tuple[float, float]:
    if override is not None:
        lo, hi = float(override[0]), float(override[1])
    else:
        if values.size == 0:
            raise RangeError("empty filter and no range override")
        lo, hi = float(values.min()), float(values.max())
    if hi < lo:
        raise RangeError(f"empty range [{lo}, {hi}]")
    return lo, hi


def interval_cover(values, t: int, gain: float, range_override=None) -> CoverSpec:
    """Classical-Mapper interval cover of a 1-D filter."""
    values = np.asarray(values, dtype=np.float64).ravel()
    lo, hi = _resolve_range(values, range_override)
    ivals = _axis_intervals(lo, hi, t, gain)
    return CoverSpec(
        kind="intervals",
        boxes=ivals[:, None, :],
        resolution=(t,),
        gain=float(gain),
        ranges=((lo, hi),),
    )


def grid_cover(values, t_per_axis, gain: float, range_override=None) -> CoverSpec:
    """Box cover of a d-dimensional filter: Cartesian product of per-axis
    interval covers, ordered lexicographically by box origin."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    d = values.shape[1] if values.size else len(t_per_axis)
    t_per_axis = tuple(int(t) for t in np.atleast_1d(t_per_axis))
    if len(t_per_axis) == 1 and d > 1:
        t_per_axis = t_per_axis * d
    if len(t_per_axis) != d:
        raise DimensionError(
            f"{len(t_per_axis)} axis resolutions for a {d}-dimensional filter")
    per_axis = []
    ranges = []
    for k in range(d):
        ov = None if range_override is None else range_override[k]
        col = values[:, k] if values.size else values.ravel()
        lo, hi = _resolve_range(col, ov)
        per_axis.append(_axis_intervals(lo, hi, t_per_axis[k], gain))
        ranges.append((lo, hi))
    boxes = np.array([np.stack(combo) for combo in itertools.product(*per_axis)])
    return CoverSpec(
        kind="grid",
        boxes=boxes,
        resolution=t_per_axis,
        gain=float(gain),
        ranges=tuple(ranges),
    )


def explicit_cover(boxes) -> CoverSpec:
    """Cover from user-supplied closed boxes, kept in the given order."""
    arr = np.asarray(boxes, dtype=np.float64)
    if arr.ndim == 2:  # 1-D intervals given as (t, 2)
        arr = arr[:, None, :]
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] < 1:
        raise ParameterError(f"boxes must have shape (t, d, 2), got {arr.shape}")
    if np.any(arr[:, :, 1] < arr[:, :, 0]):
        raise ParameterError("box with hi < lo")
    ranges = tuple(
        (float(arr[:, k, 0].min()), float(arr[:, k, 1].max()))
        for k in range(arr.shape[1])
    )
    return CoverSpec(kind="explicit", boxes=arr, resolution=(), gain=0.0,
                     ranges=ranges)


def build_cover(values, resolution, gain: float, range_override=None) -> Cover:
    """Interval cover for 1-D filter values, grid cover for d-D values,
    assigned to the values that induced it."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1 or values.shape[1] == 1:
        spec = interval_cover(values.ravel(), int(np.atleast_1d(resolution)[0]),
                              gain, range_override)
        return assign_bins(spec, values.ravel())
    t = np.atleast_1d(resolution)
    t = tuple(int(x) for x in (t if t.size > 1 else [int(t[0])] * values.shape[1]))
    spec = grid_cover(values, t, gain, range_override)
    return assign_bins(spec, values)


def assign_bins(spec: CoverSpec, values) -> Cover:
    """Restrict a cover to a cloud through its filter values.

    A point lands in every box whose closed extent contains its filter value;
    points inside no box are collected in `out_of_range`.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    if n > 0 and values.shape[1] != spec.dim:
        raise DimensionError(
            f"filter dimension {values.shape[1]} != cover dimension {spec.dim}")
    bins = []
    covered = np.zeros(n, dtype=bool)
    for box in spec.boxes:
        inside = np.ones(n, dtype=bool)
        for k in range(spec.dim):
            col = values[:, k] if n else values.ravel()
            inside &= (col >= box[k, 0]) & (col <= box[k, 1])
        idx = np.nonzero(inside)[0].astype(np.int64)
        idx.setflags(write=False)
        bins.append(idx)
        covered |= inside
    out = np.nonzero(~covered)[0].astype(np.int64)
    out.setflags(write=False)
    return Cover(spec=spec, bins=tuple(bins), out_of_range=out, n=n)
