"""Voronoi-based initial populations and round-robin island partitioning.

An individual is produced by sampling uniform seed points, building their
Voronoi diagram and taking the cell centroids (one Lloyd relaxation step),
which spreads nodes across the region far better than a raw uniform draw.
"""

from __future__ import annotations

import numpy as np

from .geometry import Point, RegionOfInterest, cell_centroid, voronoi
from .optimizer import COORD_QUANTUM, Chromosome, GaConfig, Population, random_point, snap_coord, _grid_units


def sample_seeds(n: int, roi: RegionOfInterest, rng: np.random.Generator) -> list[Point]:
    """n uniform points, strictly inside the region and pairwise distinct."""
    pts: list[Point] = []
    while len(pts) < n:
        p = Point(float(rng.uniform(0.0, roi.width)), float(rng.uniform(0.0, roi.height)))
        if not roi.contains(p, strict=True):
            continue
        if any(p.distance_to(q) <= 1e-9 for q in pts):
            continue
        pts.append(p)
    return pts


def centroid_relaxation(seeds: list[Point], roi: RegionOfInterest) -> list[Point]:
    """Move each seed to the centroid of its Voronoi cell (one Lloyd step)."""
    return [cell_centroid(cell) for cell in voronoi(seeds, roi)]


def _snap_inside(p: Point, roi: RegionOfInterest) -> Point:
    # quantize to the wire grid but keep strictly inside the rectangle
    hi_x = (_grid_units(roi.width) - 1) / 100.0
    hi_y = (_grid_units(roi.height) - 1) / 100.0
    x = min(max(snap_coord(p.x), COORD_QUANTUM), hi_x)
    y = min(max(snap_coord(p.y), COORD_QUANTUM), hi_y)
    return Point(x, y)


def voronoi_individual(cfg: GaConfig, roi: RegionOfInterest,
                       rng: np.random.Generator) -> Chromosome:
    """One chromosome whose positions are Voronoi cell centroids."""
    seeds = sample_seeds(cfg.n_objects, roi, rng)
    return Chromosome(tuple(_snap_inside(c, roi) for c in centroid_relaxation(seeds, roi)))


def initial_population(cfg: GaConfig, roi: RegionOfInterest,
                       rng: np.random.Generator) -> Population:
    """pop_size independent Voronoi-seeded individuals."""
    return Population(tuple(voronoi_individual(cfg, roi, rng) for _ in range(cfg.pop_size)))


def random_individual(cfg: GaConfig, roi: RegionOfInterest,
                      rng: np.random.Generator) -> Chromosome:
    """Uniform-random baseline individual (no Voronoi spreading)."""
    return Chromosome(tuple(random_point(roi, rng) for _ in range(cfg.n_objects)))


def random_population(cfg: GaConfig, roi: RegionOfInterest,
                      rng: np.random.Generator) -> Population:
    return Population(tuple(random_individual(cfg, roi, rng) for _ in range(cfg.pop_size)))


def partition(pop: Population, g_nodes: int) -> list[Population]:
    """Round-robin split into g_nodes sub-populations (sizes differ by <= 1).

    Island j receives individuals j, j + g, j + 2g, ...; the multiset union
    of the islands equals the input population exactly.
    """
    if g_nodes < 1:
        raise ValueError("g_nodes must be >= 1")
    subs = []
    for j in range(g_nodes):
        individuals = pop.individuals[j::g_nodes]
        coverages = pop.coverages[j::g_nodes] if pop.coverages is not None else None
        subs.append(Population(individuals, pop.generation, coverages))
    return subs
