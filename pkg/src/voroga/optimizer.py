"""Steady-state genetic optimizer over node deployments.

One generation mates a single tournament-selected pair: single-point
crossover, then per-offspring mutation that repositions one or two genes
uniformly in the region.  The offspring pair replaces its parents only if
its best coverage strictly beats the parents' best, so the population's
best coverage never decreases.

Fitness is raster coverage (equivalently, ranking by uncovered area).
Pairwise overlap is reported for diagnostics, never penalized.

All positions live on a 0.01 m grid (the wire codec's fixed-point quantum)
so chromosomes survive encode/decode round trips bit-for-bit.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Disk, Point, RegionOfInterest, coverage_fraction, pair_overlap

# Fixed-point quantum shared with the wire codec: 0.01 m.
COORD_QUANTUM = 0.01


class PopulationTooSmall(ValueError):
    """Selection needs at least two individuals."""


class LengthMismatch(ValueError):
    """Crossover parents must have the same gene count (>= 2)."""


def snap_coord(v: float) -> float:
    """Round a coordinate to the 0.01 m grid, matching wire decode exactly."""
    return round(v * 100.0) / 100.0


def _grid_units(extent: float) -> int:
    return int(math.floor(extent * 100.0 + 1e-9))


def random_point(roi: RegionOfInterest, rng: np.random.Generator) -> Point:
    """Uniform draw from the 0.01 m grid covering the closed rectangle."""
    x = int(rng.integers(0, _grid_units(roi.width) + 1)) / 100.0
    y = int(rng.integers(0, _grid_units(roi.height) + 1)) / 100.0
    return Point(x, y)


@dataclass(frozen=True)
class Chromosome:
    """One candidate deployment: an ordered tuple of node positions."""

    positions: tuple[Point, ...]

    def __len__(self) -> int:
        return len(self.positions)


@dataclass(frozen=True)
class GaConfig:
    pop_size: int
    n_objects: int
    radius: float
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    mutation_points: int = 1
    coverage_target: float = 0.94
    max_generations: int = 1500
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.pop_size < 1:
            raise ValueError("pop_size must be >= 1")
        if self.n_objects < 1:
            raise ValueError("n_objects must be >= 1")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must be in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if self.mutation_points not in (1, 2):
            raise ValueError("mutation_points must be 1 or 2")
        if not 0.0 < self.coverage_target <= 1.0:
            raise ValueError("coverage_target must be in (0, 1]")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")


@dataclass(frozen=True)
class FitnessReport:
    coverage: float
    uncovered_area: float
    total_overlap: float


@dataclass(frozen=True)
class Population:
    """Fixed-size set of individuals plus an optional fitness cache.

    ``coverages`` is parallel to ``individuals``; operators that need
    fitness require it (fill via :func:`evaluate_population`).
    """

    individuals: tuple[Chromosome, ...]
    generation: int = 0
    coverages: tuple[float, ...] | None = None

    def __len__(self) -> int:
        return len(self.individuals)

    def best_index(self) -> int:
        if self.coverages is None:
            raise ValueError("population has no fitness cache")
        best = 0
        for i, c in enumerate(self.coverages):
            if c > self.coverages[best]:
                best = i
        return best


def evaluate(chromosome: Chromosome, cfg: GaConfig, roi: RegionOfInterest) -> FitnessReport:
    """Coverage, uncovered area and total pairwise overlap of one individual."""
    disks = [Disk(p, cfg.radius) for p in chromosome.positions]
    cov = coverage_fraction(disks, roi)
    overlap = 0.0
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            overlap += pair_overlap(disks[i], disks[j])
    return FitnessReport(coverage=cov,
                         uncovered_area=roi.area * (1.0 - cov),
                         total_overlap=overlap)


def evaluate_population(pop: Population, cfg: GaConfig, roi: RegionOfInterest) -> Population:
    if pop.coverages is not None:
        return pop
    cov = tuple(evaluate(c, cfg, roi).coverage for c in pop.individuals)
    return replace(pop, coverages=cov)


def _tournament(candidates: list[int], coverages: tuple[float, ...],
                rng: np.random.Generator) -> int:
    # size-2 tournament; higher coverage wins, ties to the lower index
    if len(candidates) == 1:
        return candidates[0]
    picks = rng.choice(len(candidates), size=2, replace=False)
    a = candidates[int(picks[0])]
    b = candidates[int(picks[1])]
    if coverages[a] > coverages[b]:
        return a
    if coverages[b] > coverages[a]:
        return b
    return min(a, b)


def select_indices(pop: Population, rng: np.random.Generator) -> tuple[int, int]:
    n = len(pop.individuals)
    if n < 2:
        raise PopulationTooSmall(f"selection needs >= 2 individuals, got {n}")
    if pop.coverages is None:
        raise ValueError("population must be evaluated before selection")
    first = _tournament(list(range(n)), pop.coverages, rng)
    second = _tournament([i for i in range(n) if i != first], pop.coverages, rng)
    return first, second


def select(pop: Population, rng: np.random.Generator) -> tuple[Chromosome, Chromosome]:
    """Two distinct parents by independent size-2 tournaments on coverage."""
    i, j = select_indices(pop, rng)
    return pop.individuals[i], pop.individuals[j]


def crossover(p1: Chromosome, p2: Chromosome,
              rng: np.random.Generator) -> tuple[Chromosome, Chromosome]:
    """Single-point crossover: genes after a uniform cut in 1..n-1 are swapped."""
    n = len(p1)
    if n != len(p2):
        raise LengthMismatch(f"parent lengths differ: {n} vs {len(p2)}")
    if n < 2:
        raise LengthMismatch("crossover needs chromosomes of length >= 2")
    k = int(rng.integers(1, n))
    o1 = Chromosome(p1.positions[:k] + p2.positions[k:])
    o2 = Chromosome(p2.positions[:k] + p1.positions[k:])
    return o1, o2


def mutate(chromosome: Chromosome, cfg: GaConfig, roi: RegionOfInterest,
           rng: np.random.Generator) -> Chromosome:
    """With probability mutation_rate, replace mutation_points distinct genes
    by fresh uniform positions; otherwise return the input unchanged."""
    if rng.random() >= cfg.mutation_rate:
        return chromosome
    n = len(chromosome)
    k = min(cfg.mutation_points, n)
    indices = rng.choice(n, size=k, replace=False)
    positions = list(chromosome.positions)
    for i in indices:
        positions[int(i)] = random_point(roi, rng)
    return Chromosome(tuple(positions))


def step(pop: Population, cfg: GaConfig, roi: RegionOfInterest,
         rng: np.random.Generator) -> Population:
    """One generation: select a pair, maybe crossover, mutate, then elitist
    pairwise replacement.

    The mated family competes for the two parent slots: the best two of
    {parent1, parent2, offspring1, offspring2} survive (ties keep the
    earlier entrant, parents first).  Offspring therefore enter only by
    strictly improving on a family member, the best individual can never
    be lost, and a rejected mating leaves the population identical.
    """
    pop = evaluate_population(pop, cfg, roi)
    i, j = select_indices(pop, rng)
    p1, p2 = pop.individuals[i], pop.individuals[j]
    if len(p1) >= 2 and rng.random() < cfg.crossover_rate:
        c1, c2 = crossover(p1, p2, rng)
    else:
        c1, c2 = p1, p2
    c1 = mutate(c1, cfg, roi, rng)
    c2 = mutate(c2, cfg, roi, rng)
    cov1 = pop.coverages[i] if c1.positions == p1.positions else evaluate(c1, cfg, roi).coverage
    cov2 = pop.coverages[j] if c2.positions == p2.positions else evaluate(c2, cfg, roi).coverage
    family = sorted([(pop.coverages[i], 0, p1), (pop.coverages[j], 1, p2),
                     (cov1, 2, c1), (cov2, 3, c2)],
                    key=lambda entry: (-entry[0], entry[1]))
    keep = family[:2]
    if keep[0][1] <= 1 and keep[1][1] <= 1:
        return replace(pop, generation=pop.generation + 1)
    individuals = list(pop.individuals)
    coverages = list(pop.coverages)
    individuals[i], coverages[i] = keep[0][2], keep[0][0]
    individuals[j], coverages[j] = keep[1][2], keep[1][0]
    return Population(tuple(individuals), pop.generation + 1, tuple(coverages))


@dataclass(frozen=True)
class GenerationStat:
    generation: int
    best_coverage: float
    mean_coverage: float


@dataclass(frozen=True)
class GaRun:
    best: Chromosome
    best_coverage: float
    history: tuple[GenerationStat, ...]
    generations: int
    generations_to_target: int | None


def _stat(pop: Population) -> GenerationStat:
    assert pop.coverages is not None
    return GenerationStat(generation=pop.generation,
                          best_coverage=max(pop.coverages),
                          mean_coverage=sum(pop.coverages) / len(pop.coverages))


def run(initial: Population, cfg: GaConfig, roi: RegionOfInterest,
        rng: np.random.Generator) -> GaRun:
    """Iterate generations until coverage_target is met or max_generations pass.

    Populations of fewer than two individuals cannot evolve and return
    their (evaluated) initial best immediately.
    """
    pop = evaluate_population(initial, cfg, roi)
    base = pop.generation
    history = [_stat(pop)]
    while (history[-1].best_coverage < cfg.coverage_target
           and pop.generation - base < cfg.max_generations
           and len(pop) >= 2):
        pop = step(pop, cfg, roi, rng)
        history.append(_stat(pop))
    best_idx = pop.best_index()
    to_target = None
    for st in history:
        if st.best_coverage >= cfg.coverage_target:
            to_target = st.generation - base
            break
    return GaRun(best=pop.individuals[best_idx],
                 best_coverage=pop.coverages[best_idx],
                 history=tuple(history),
                 generations=pop.generation - base,
                 generations_to_target=to_target)


def history_csv(history: tuple[GenerationStat, ...]) -> str:
    """Convergence history as CSV (generation, best_coverage, mean_coverage)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["generation", "best_coverage", "mean_coverage"])
    for st in history:
        writer.writerow([st.generation, f"{st.best_coverage:.6f}", f"{st.mean_coverage:.6f}"])
    return buf.getvalue()
