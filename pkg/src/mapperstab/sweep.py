"""Parameter sweeps over instability, and local-minimum detection.

Every cell of a sweep is evaluated with the same estimator configuration
and the same root seed, so values are comparable across the grid. Each
cell also records a summary of the full-data Mapper graph (vertex, edge,
component and independent-cycle counts) so structural changes can be read
off next to instability jumps.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import ClustererConfig
from .cover import build_cover
from .dataset import PointCloud
from .errors import ParameterError
from .instability import averaged_instability
from .mapper import build_mapper, nerve

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SweepConfig:
    """Shared per-cell evaluation setup."""

    clusterer: ClustererConfig
    resolution: int = 10
    gain: float = 0.25
    range_override: tuple | None = None
    estimator: str = "kfold"        # "kfold" | "paired"
    k: int = 10
    trials: int = 10                # paired estimator only
    repeats: int = 10
    normalization: str = "paper"
    seed: int = 0
    max_dim: int = 2

    def to_dict(self) -> dict:
        doc = {
            "clusterer": self.clusterer.to_dict(),
            "resolution": self.resolution,
            "gain": self.gain,
            "range_override": self.range_override,
            "estimator": self.estimator,
            "k": self.k, "trials": self.trials, "repeats": self.repeats,
            "normalization": self.normalization,
            "seed": self.seed, "max_dim": self.max_dim,
        }
        return doc


@dataclass
class SweepCell:
    params: dict                  # the axis values this cell was evaluated at
    value: float                  # mean instability over repeats
    std: float
    values: list[float]           # per-repeat estimates
    graph: dict                   # full-data Mapper graph summary

    def as_dict(self) -> dict:
        return {"params": self.params, "value": self.value, "std": self.std,
                "values": self.values, "graph": self.graph}


@dataclass
class SweepGrid:
    axes: dict[str, list]         # ordered axis name -> values
    cells: list[SweepCell]        # row-major in axis order
    config: dict

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(v) for v in self.axes.values())

    def cell(self, *idx) -> SweepCell:
        shape = self.shape
        flat = 0
        for i, s in zip(idx, shape):
            flat = flat * s + i
        return self.cells[flat]

    def value_matrix(self) -> np.ndarray:
        return np.array([c.value for c in self.cells]).reshape(self.shape)

    def to_json(self) -> str:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "axes": self.axes,
            "cells": [c.as_dict() for c in self.cells],
            "config": self.config,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def to_csv(self) -> str:
        """2-D grids: rows = first axis (resolution), cols = second (gain)."""
        names = list(self.axes)
        out = io.StringIO()
        writer = csv.writer(out)
        if len(names) == 1:
            writer.writerow([names[0], "instability"])
            for v, cell in zip(self.axes[names[0]], self.cells):
                writer.writerow([v, repr(cell.value)])
        else:
            writer.writerow([f"{names[0]}\\{names[1]}"] + list(self.axes[names[1]]))
            mat = self.value_matrix()
            for i, v in enumerate(self.axes[names[0]]):
                writer.writerow([v] + [repr(x) for x in mat[i]])
        return out.getvalue()


def _apply_axis(base: SweepConfig, name: str, value) -> SweepConfig:
    if name == "resolution":
        return replace(base, resolution=int(value))
    if name == "gain":
        return replace(base, gain=float(value))
    if name == "epsilon":
        return replace(base, clusterer=replace(base.clusterer, epsilon=float(value)))
    if name == "K":
        return replace(base, clusterer=replace(base.clusterer, K=int(value)))
    raise ParameterError(f"unknown sweep axis: {name!r}")


def evaluate_cell(cloud: PointCloud, filter_values, params: dict,
                  base: SweepConfig) -> SweepCell:
    """Instability estimate plus Mapper-graph summary at one parameter tuple."""
    cfg = base
    for name, value in params.items():
        cfg = _apply_axis(cfg, name, value)
    cover = build_cover(filter_values, cfg.resolution, cfg.gain, cfg.range_override)
    mean, std, estimates = averaged_instability(
        cloud, cover, cfg.clusterer, cfg.k, cfg.repeats, cfg.seed,
        normalization=cfg.normalization, estimator=cfg.estimator,
        trials=cfg.trials, jobs=1,
    )
    graph = nerve(build_mapper(cloud, cover, cfg.clusterer),
                  max_dim=cfg.max_dim).summary()
    return SweepCell(params=dict(params), value=mean, std=std,
                     values=[e.value for e in estimates], graph=graph)


def _cell_task(args):
    return evaluate_cell(*args)


def sweep_1d(cloud: PointCloud, filter_values, axis_name: str, values,
             base: SweepConfig, jobs: int = 1) -> SweepGrid:
    """One estimate per axis value, sharing seeds across values."""
    values = list(values)
    if not values:
        raise ParameterError("empty sweep axis")
    tasks = [(cloud, filter_values, {axis_name: v}, base) for v in values]
    cells = _run(tasks, jobs)
    return SweepGrid(axes={axis_name: values}, cells=cells,
                     config=base.to_dict())


def sweep_2d(cloud: PointCloud, filter_values, res_values, gain_values,
             base: SweepConfig, jobs: int = 1) -> SweepGrid:
    """Rectangular resolution x gain grid of estimates."""
    res_values = list(res_values)
    gain_values = list(gain_values)
    if not res_values or not gain_values:
        raise ParameterError("empty sweep axis")
    tasks = [
        (cloud, filter_values, {"resolution": r, "gain": g}, base)
        for r in res_values for g in gain_values
    ]
    cells = _run(tasks, jobs)
    return SweepGrid(axes={"resolution": res_values, "gain": gain_values},
                     cells=cells, config=base.to_dict())


def _run(tasks, jobs: int) -> list[SweepCell]:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_cell_task, tasks))
    return [_cell_task(t) for t in tasks]


def local_minima(grid: SweepGrid) -> list[dict]:
    """Cells no worse than any of their 8 neighbours.

    Equal-valued adjacent minima form a plateau reported once, by its
    lexicographically smallest (row, col) index. Boundary cells compare
    against existing neighbours only.
    """
    if len(grid.axes) != 2:
        raise ParameterError("local_minima needs a 2-D grid")
    mat = grid.value_matrix()
    rows, cols = mat.shape
    neigh = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]

    def neighbours(i, j):
        for di, dj in neigh:
            a, b = i + di, j + dj
            if 0 <= a < rows and 0 <= b < cols:
                yield a, b

    candidate = np.zeros_like(mat, dtype=bool)
    for i in range(rows):
        for j in range(cols):
            candidate[i, j] = all(mat[i, j] <= mat[a, b] for a, b in neighbours(i, j))

    # plateau deduplication: flood equal-valued adjacent candidates
    seen = np.zeros_like(candidate)
    reps = []
    for i in range(rows):
        for j in range(cols):
            if not candidate[i, j] or seen[i, j]:
                continue
            stack = [(i, j)]
            seen[i, j] = True
            component = [(i, j)]
            while stack:
                a, b = stack.pop()
                for c, d in neighbours(a, b):
                    if candidate[c, d] and not seen[c, d] and mat[c, d] == mat[a, b]:
                        seen[c, d] = True
                        stack.append((c, d))
                        component.append((c, d))
            reps.append(min(component))
    names = list(grid.axes)
    out = []
    for i, j in sorted(reps):
        cell = grid.cell(i, j)
        out.append({"index": [i, j],
                    names[0]: grid.axes[names[0]][i],
                    names[1]: grid.axes[names[1]][j],
                    "value": cell.value,
                    "graph": cell.graph})
    return out
