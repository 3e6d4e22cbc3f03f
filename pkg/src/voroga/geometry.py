"""Planar geometry for coverage problems: bounded Voronoi cells and disk unions.

Coordinates are meters in an axis-aligned rectangle with the origin at the
lower-left corner.  Polygons are convex and stored counterclockwise.

Two routes to covered area exist on purpose:

* ``coverage_fraction`` -- the production estimator, counting raster
  cell-centers inside at least one disk;
* ``disk_union_area_analytic`` -- a closed-form inclusion-exclusion oracle
  for up to three disks, kept independent of the raster path so tests can
  check one against the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Vertices closer than this are merged and corners flatter than this are
# dropped; seeds closer than this count as duplicates.
GEOM_EPS = 1e-9


class DuplicateSeeds(ValueError):
    """Two Voronoi seeds coincide within tolerance."""


class SeedOutOfBounds(ValueError):
    """A Voronoi seed is not strictly inside the region."""


class DegeneratePolygon(ValueError):
    """Polygon area is too small for centroid computation."""


class MixedRadii(ValueError):
    """Pairwise overlap is defined for equal-radius disks only."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RegionOfInterest:
    """Rectangle [0, width] x [0, height] with a raster of square cells.

    The raster has ceil(width/raster_step) x ceil(height/raster_step) cells;
    cell (i, j) has its center at ((i + 0.5) * step, (j + 0.5) * step).
    """

    width: float
    height: float
    raster_step: float = 0.25

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("region dimensions must be positive")
        if self.raster_step <= 0:
            raise ValueError("raster_step must be positive")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def raster_shape(self) -> tuple[int, int]:
        return (math.ceil(self.width / self.raster_step),
                math.ceil(self.height / self.raster_step))

    def contains(self, p: Point, strict: bool = False) -> bool:
        if strict:
            return 0.0 < p.x < self.width and 0.0 < p.y < self.height
        return 0.0 <= p.x <= self.width and 0.0 <= p.y <= self.height


@dataclass(frozen=True)
class Disk:
    center: Point
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("disk radius must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius * self.radius


def polygon_area(vertices: tuple[Point, ...]) -> float:
    """Signed shoelace area; positive for counterclockwise polygons."""
    total = 0.0
    n = len(vertices)
    for i in range(n):
        a = vertices[i]
        b = vertices[(i + 1) % n]
        total += a.x * b.y - b.x * a.y
    return 0.5 * total


@dataclass(frozen=True)
class VoronoiCell:
    """Convex cell of one seed, clipped to the region rectangle."""

    seed: Point
    vertices: tuple[Point, ...]

    def area(self) -> float:
        return polygon_area(self.vertices)

    def contains(self, p: Point, tol: float = 1e-7) -> bool:
        """Half-plane membership test (vertices are counterclockwise)."""
        n = len(self.vertices)
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
            if cross < -tol:
                return False
        return True


# ---------------------------------------------------------------------------
# Voronoi construction: per-seed half-plane clipping of the rectangle.
# ---------------------------------------------------------------------------

def _clip_halfplane(poly: list[tuple[float, float]], a: float, b: float,
                    c: float) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of a convex polygon to a*x + b*y <= c."""
    out: list[tuple[float, float]] = []
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        d1 = a * x1 + b * y1 - c
        d2 = a * x2 + b * y2 - c
        if d1 <= 0.0:
            out.append((x1, y1))
        if (d1 < 0.0 < d2) or (d2 < 0.0 < d1):
            t = d1 / (d1 - d2)
            out.append((x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
    return out


def _tidy_polygon(poly: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Drop near-duplicate vertices and collinear corners; force CCW order."""
    pts: list[tuple[float, float]] = []
    for v in poly:
        if not pts or math.hypot(v[0] - pts[-1][0], v[1] - pts[-1][1]) > GEOM_EPS:
            pts.append(v)
    if len(pts) > 1 and math.hypot(pts[0][0] - pts[-1][0], pts[0][1] - pts[-1][1]) <= GEOM_EPS:
        pts.pop()
    out: list[tuple[float, float]] = []
    m = len(pts)
    for k in range(m):
        ax, ay = pts[k - 1]
        bx, by = pts[k]
        cx, cy = pts[(k + 1) % m]
        ux, uy = bx - ax, by - ay
        vx, vy = cx - bx, cy - by
        cross = ux * vy - uy * vx
        norm = math.hypot(ux, uy) * math.hypot(vx, vy)
        if norm > 0.0 and abs(cross) > GEOM_EPS * max(1.0, norm):
            out.append(pts[k])
    area2 = 0.0
    for k in range(len(out)):
        x1, y1 = out[k]
        x2, y2 = out[(k + 1) % len(out)]
        area2 += x1 * y2 - x2 * y1
    if area2 < 0.0:
        out.reverse()
    return out


def voronoi(seeds: list[Point], roi: RegionOfInterest) -> list[VoronoiCell]:
    """Voronoi cells of the seeds, clipped to the region rectangle.

    Each cell is the intersection of the rectangle with the half-planes
    {x : ||x - p|| <= ||x - q||} over all other seeds q.  Cells tile the
    rectangle: interiors are disjoint and areas sum to width * height.
    """
    if not seeds:
        raise ValueError("seeds must be nonempty")
    for s in seeds:
        if not roi.contains(s, strict=True):
            raise SeedOutOfBounds(
                f"seed ({s.x}, {s.y}) is not strictly inside the "
                f"{roi.width} x {roi.height} region")
    n = len(seeds)
    for i in range(n):
        for j in range(i + 1, n):
            if seeds[i].distance_to(seeds[j]) <= GEOM_EPS:
                raise DuplicateSeeds(f"seeds {i} and {j} coincide within {GEOM_EPS} m")

    rect = [(0.0, 0.0), (roi.width, 0.0), (roi.width, roi.height), (0.0, roi.height)]
    cells = []
    for i, p in enumerate(seeds):
        poly = rect
        for j, q in enumerate(seeds):
            if i == j:
                continue
            # ||x-p|| <= ||x-q||  <=>  2(q-p).x <= |q|^2 - |p|^2
            a = 2.0 * (q.x - p.x)
            b = 2.0 * (q.y - p.y)
            c = (q.x * q.x + q.y * q.y) - (p.x * p.x + p.y * p.y)
            poly = _clip_halfplane(poly, a, b, c)
        poly = _tidy_polygon(poly)
        cells.append(VoronoiCell(seed=p, vertices=tuple(Point(x, y) for x, y in poly)))
    return cells


def cell_centroid(cell: VoronoiCell) -> Point:
    """Area-weighted centroid of the cell polygon."""
    verts = cell.vertices
    if len(verts) < 3:
        raise DegeneratePolygon("polygon needs at least 3 vertices")
    a = 0.0
    cx = 0.0
    cy = 0.0
    n = len(verts)
    for i in range(n):
        p = verts[i]
        q = verts[(i + 1) % n]
        cross = p.x * q.y - q.x * p.y
        a += cross
        cx += (p.x + q.x) * cross
        cy += (p.y + q.y) * cross
    a *= 0.5
    if abs(a) < 1e-12:
        raise DegeneratePolygon(f"polygon area {a} below 1e-12 m^2")
    return Point(cx / (6.0 * a), cy / (6.0 * a))


# ---------------------------------------------------------------------------
# Disk coverage: raster estimator plus the small-instance analytic oracle.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _raster_axes(width: float, height: float, step: float):
    nx = math.ceil(width / step)
    ny = math.ceil(height / step)
    xs = (np.arange(nx) + 0.5) * step
    ys = (np.arange(ny) + 0.5) * step
    xs.setflags(write=False)
    ys.setflags(write=False)
    return xs, ys


def coverage_fraction(disks: list[Disk], roi: RegionOfInterest) -> float:
    """Fraction of raster cell-centers inside at least one disk.

    Deterministic for a fixed raster_step; an empty disk list covers nothing.
    Only cell-centers of the region's raster are counted, so disk area
    outside the rectangle never contributes.
    """
    xs, ys = _raster_axes(roi.width, roi.height, roi.raster_step)
    nx = xs.size
    ny = ys.size
    if not disks:
        return 0.0
    covered = np.zeros((ny, nx), dtype=bool)
    step = roi.raster_step
    for d in disks:
        cx, cy, r = d.center.x, d.center.y, d.radius
        i0 = max(0, int((cx - r) / step) - 1)
        i1 = min(nx, int((cx + r) / step) + 2)
        j0 = max(0, int((cy - r) / step) - 1)
        j1 = min(ny, int((cy + r) / step) + 2)
        if i0 >= i1 or j0 >= j1:
            continue
        dx = xs[i0:i1] - cx
        dy = ys[j0:j1] - cy
        covered[j0:j1, i0:i1] |= (dx * dx)[None, :] + (dy * dy)[:, None] <= r * r
    return float(covered.sum()) / float(nx * ny)


def pair_overlap(a: Disk, b: Disk) -> float:
    """Linear overlap measure max(0, 2r - distance) for equal-radius disks.

    Zero exactly when the disks are tangent or apart; 2r when coincident.
    """
    if abs(a.radius - b.radius) > 1e-12:
        raise MixedRadii(f"overlap assumes one node type; got radii {a.radius} and {b.radius}")
    return max(0.0, 2.0 * a.radius - a.center.distance_to(b.center))


def circle_lens_area(r1: float, r2: float, d: float) -> float:
    """Exact intersection area of two circles with center distance d."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        rmin = min(r1, r2)
        return math.pi * rmin * rmin
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
    s = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return a1 + a2 - 0.5 * math.sqrt(max(0.0, s))


def _arc_integral(cx: float, cy: float, r: float, t1: float, t2: float) -> float:
    """Green's-theorem term for a CCW arc of circle (cx, cy, r) over [t1, t2]:
    integral of (x dy - y dx) = r^2 (t2-t1) + cx r (sin t2 - sin t1) - cy r (cos t2 - cos t1).
    """
    return (r * r * (t2 - t1)
            + cx * r * (math.sin(t2) - math.sin(t1))
            - cy * r * (math.cos(t2) - math.cos(t1)))


def disk_intersection_area(disks: list[Disk]) -> float:
    """Exact area of the common intersection of the disks (arc decomposition).

    The boundary of the intersection consists of arcs of the circles that lie
    inside every other disk; the enclosed area follows from Green's theorem.
    """
    ds = list(disks)
    if not ds:
        raise ValueError("need at least one disk")
    if len(ds) == 1:
        return ds[0].area

    centers = [(d.center.x, d.center.y) for d in ds]
    radii = [d.radius for d in ds]
    n = len(ds)
    for i in range(n):
        for j in range(i + 1, n):
            d = math.hypot(centers[i][0] - centers[j][0], centers[i][1] - centers[j][1])
            if d >= radii[i] + radii[j]:
                return 0.0

    def inside_all_but(i: int, x: float, y: float) -> bool:
        for j in range(n):
            if j == i:
                continue
            dx = x - centers[j][0]
            dy = y - centers[j][1]
            if math.hypot(dx, dy) > radii[j] + 1e-9:
                return False
        return True

    total = 0.0
    for i in range(n):
        cx, cy = centers[i]
        r = radii[i]
        cuts: list[float] = []
        outside_some = False
        for j in range(n):
            if j == i:
                continue
            ox, oy = centers[j]
            rj = radii[j]
            d = math.hypot(ox - cx, oy - cy)
            if d + rj <= r:
                # disk j sits inside disk i, so circle i never bounds the
                # intersection
                outside_some = True
                break
            if d + r <= rj:
                continue  # circle i entirely inside disk j: no cut from j
            alpha = math.atan2(oy - cy, ox - cx)
            gamma = math.acos((d * d + r * r - rj * rj) / (2.0 * d * r))
            cuts.extend((alpha - gamma, alpha + gamma))
        if outside_some:
            continue
        if not cuts:
            if inside_all_but(i, cx + r, cy):
                total += _arc_integral(cx, cy, r, 0.0, 2.0 * math.pi)
            continue
        cuts = sorted(t % (2.0 * math.pi) for t in cuts)
        for k in range(len(cuts)):
            t1 = cuts[k]
            t2 = cuts[(k + 1) % len(cuts)]
            if k == len(cuts) - 1:
                t2 += 2.0 * math.pi
            tm = 0.5 * (t1 + t2)
            if inside_all_but(i, cx + r * math.cos(tm), cy + r * math.sin(tm)):
                total += _arc_integral(cx, cy, r, t1, t2)
    return 0.5 * total


def disk_union_area_analytic(disks: list[Disk]) -> float:
    """Inclusion-exclusion union area; supported for at most three disks.

    Retained as a test oracle for the raster estimator, never used in the
    optimization path.
    """
    ds = list(disks)
    if len(ds) > 3:
        raise ValueError("analytic union oracle supports at most 3 disks")
    if not ds:
        return 0.0
    total = sum(d.area for d in ds)
    n = len(ds)
    for i in range(n):
        for j in range(i + 1, n):
            d = ds[i].center.distance_to(ds[j].center)
            total -= circle_lens_area(ds[i].radius, ds[j].radius, d)
    if n == 3:
        total += disk_intersection_area(ds)
    return total
