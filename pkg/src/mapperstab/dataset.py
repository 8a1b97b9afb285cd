"""Point-cloud storage, metric evaluation and file ingestion."""

from __future__ import annotations

import io
import json
import os
from typing import IO, Iterable, Union

import numpy as np
from scipy.spatial.distance import cdist

from .errors import FormatError, ParameterError, ParseError

# metric_id -> scipy cdist metric name
_METRICS = {
    "euclidean": "euclidean",
    "manhattan": "cityblock",
    "chebyshev": "chebyshev",
}

Source = Union[str, bytes, os.PathLike, IO]


class PointCloud:
    """A finite ordered sample of n points in R^a.

    Immutable after construction; point order is significant because
    nearest-neighbour ties are broken toward the smaller point index.
    """

    __slots__ = ("points", "metric_id")

    def __init__(self, points, metric_id: str = "euclidean"):
        if metric_id not in _METRICS:
            raise ParameterError(f"unknown metric_id: {metric_id!r}")
        pts = np.asarray(points, dtype=np.float64)
        if pts.size == 0:
            pts = pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
        if pts.ndim != 2:
            raise FormatError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] > 0 and pts.shape[1] < 1:
            raise FormatError("points must have dimension >= 1")
        if not np.all(np.isfinite(pts)):
            raise ParseError("points contain non-finite coordinates")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "metric_id", metric_id)

    def __setattr__(self, name, value):
        raise AttributeError("PointCloud is immutable")

    def __getstate__(self):
        return {"points": self.points, "metric_id": self.metric_id}

    def __setstate__(self, state):
        pts = state["points"]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "metric_id", state["metric_id"])

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def distance(self, i: int, j: int) -> float:
        """Metric distance between points i and j."""
        pts = self.points
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError(f"point index out of range: ({i}, {j}), n={self.n}")
        return float(
            cdist(pts[i : i + 1], pts[j : j + 1], metric=_METRICS[self.metric_id])[0, 0]
        )

    def cross_distances(self, rows, cols) -> np.ndarray:
        """Distance matrix between two index lists (rows x cols)."""
        pts = self.points
        return cdist(pts[np.asarray(rows)], pts[np.asarray(cols)],
                     metric=_METRICS[self.metric_id])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PointCloud)
            and self.metric_id == other.metric_id
            and self.points.shape == other.points.shape
            and bool(np.all(self.points == other.points))
        )

    def __repr__(self) -> str:
        return f"PointCloud(n={self.n}, dim={self.dim}, metric={self.metric_id!r})"


def index_subset(indices: Iterable[int], n: int | None = None) -> np.ndarray:
    """Validate and canonicalize a set of point indices.

    Returns a read-only, strictly increasing int64 array. Raises on
    duplicates, negatives, or indices >= n (when n is given).
    """
    idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices,
                     dtype=np.int64).ravel()
    idx = np.sort(idx)
    if idx.size:
        if idx[0] < 0:
            raise ParameterError("negative point index")
        if np.any(idx[1:] == idx[:-1]):
            raise ParameterError("duplicate point index")
        if n is not None and idx[-1] >= n:
            raise ParameterError(f"point index {int(idx[-1])} out of range (n={n})")
    idx.setflags(write=False)
    return idx


def _read_text(source: Source) -> str:
    if hasattr(source, "read"):
        data = source.read()
    elif isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def load_point_cloud(source: Source, format: str = "csv",
                     header: bool = False) -> PointCloud:
    """Load a point cloud from CSV (one point per line) or JSON (array of arrays).

    Row order is preserved as point order. An empty file yields an empty cloud.
    """
    text = _read_text(source)
    if format == "csv":
        rows = []
        lines = text.splitlines()
        if header and lines:
            lines = lines[1:]
        for lineno, line in enumerate(lines, start=1 + int(header)):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise ParseError(f"non-numeric field on line {lineno}: {line!r}") from exc
        return _cloud_from_rows(rows)
    if format == "json":
        try:
            rows = json.loads(text) if text.strip() else []
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
        if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
            raise FormatError("JSON point cloud must be an array of arrays")
        for r in rows:
            for v in r:
                if not isinstance(v, (int, float)) or isinstance(v, bool):
                    raise ParseError(f"non-numeric JSON value: {v!r}")
        return _cloud_from_rows(rows)
    raise ParameterError(f"unknown format: {format!r}")


def _cloud_from_rows(rows) -> PointCloud:
    if not rows:
        return PointCloud(np.empty((0, 0)))
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise FormatError(f"ragged rows: widths {sorted(widths)}")
    return PointCloud(np.array(rows, dtype=np.float64))


def dump_point_cloud_json(cloud: PointCloud) -> str:
    """Canonical JSON form: array of arrays of numbers."""
    return json.dumps([list(row) for row in cloud.points.tolist()],
                      separators=(",", ":"))


def dump_point_cloud_csv(cloud: PointCloud) -> str:
    lines = [",".join(repr(v) for v in row) for row in cloud.points.tolist()]
    return "\n".join(lines) + ("\n" if lines else "")
