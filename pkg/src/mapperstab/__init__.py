"""Mapper outputs from point clouds, a combinatorial distance between them,
and subsampling instability estimates for locating reliable parameters."""

from .bounds import (BoundaryField, Scenario, boundary_distance_2d,
                     builtin_scenarios, theorem1_bound, tube_mass)
from .clustering import (BinClustering, ClustererConfig, epsilon_cluster,
                         kmeans_cluster, voronoi_extend)
from .cover import (Cover, CoverSpec, assign_bins, axis_filter, build_cover,
                    grid_cover, identity_filter, interval_cover)
from .datagen import SyntheticSpec, generate
from .dataset import PointCloud, index_subset, load_point_cloud
from .distance import (Matching, brute_force_mapper_distance,
                       mapper_distance, mapper_mismatch, matching_distance,
                       seeded_upper_bound)
from .errors import MapperStabError
from .instability import (InstabilityEstimate, averaged_instability,
                          kfold_instability, paired_instability)
from .mapper import (MapperFunction, MapperGraph, build_mapper,
                     extend_voronoi, nerve, restrict)
from .sweep import SweepConfig, SweepGrid, local_minima, sweep_1d, sweep_2d

__version__ = "0.1.0"

__all__ = [
    "BinClustering", "BoundaryField", "ClustererConfig", "Cover", "CoverSpec",
    "InstabilityEstimate", "MapperFunction", "MapperGraph", "MapperStabError",
    "Matching", "PointCloud", "Scenario", "SweepConfig", "SweepGrid",
    "SyntheticSpec", "assign_bins", "averaged_instability", "axis_filter",
    "boundary_distance_2d", "brute_force_mapper_distance", "build_cover",
    "build_mapper", "builtin_scenarios", "epsilon_cluster", "extend_voronoi",
    "generate", "grid_cover", "identity_filter", "index_subset",
    "interval_cover", "kfold_instability", "kmeans_cluster",
    "load_point_cloud", "local_minima", "mapper_distance", "mapper_mismatch",
    "matching_distance", "nerve", "paired_instability", "restrict",
    "seeded_upper_bound", "sweep_1d", "sweep_2d", "theorem1_bound",
    "tube_mass", "voronoi_extend",
]
