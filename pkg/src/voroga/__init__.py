"""Voronoi-seeded genetic coverage optimization with a simulated
island-model deployment protocol."""

from .geometry import (
    Disk,
    Point,
    RegionOfInterest,
    VoronoiCell,
    cell_centroid,
    coverage_fraction,
    disk_union_area_analytic,
    pair_overlap,
    voronoi,
)
from .optimizer import Chromosome, FitnessReport, GaConfig, GaRun, Population, evaluate, run
from .seeding import initial_population, partition, voronoi_individual

__all__ = [
    "Disk",
    "Point",
    "RegionOfInterest",
    "VoronoiCell",
    "cell_centroid",
    "coverage_fraction",
    "disk_union_area_analytic",
    "pair_overlap",
    "voronoi",
    "Chromosome",
    "FitnessReport",
    "GaConfig",
    "GaRun",
    "Population",
    "evaluate",
    "run",
    "initial_population",
    "partition",
    "voronoi_individual",
]
