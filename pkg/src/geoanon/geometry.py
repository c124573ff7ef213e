"""Planar Voronoi diagrams clipped to a finite box, plus point location.

Cells are built by intersecting the clipping box with the bisector
half-planes of each site's Delaunay neighbours. Each polygon edge remembers
which constraint produced it, so adjacency ("cells share a positive-length
edge") falls out of the clipping without a second geometric pass.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import Delaunay, QhullError, cKDTree

from geoanon.model import DegenerateInputError, Point, ValidationError

log = logging.getLogger(__name__)

BOX_EXPANSION = 0.10

XY = tuple[float, float]


@dataclass(frozen=True)
class Rect:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @classmethod
    def bounding(cls, points: Iterable[Point | XY]) -> Rect:
        arr = np.asarray([tuple(p) for p in points], dtype=float)
        if arr.size == 0:
            raise ValidationError("cannot bound an empty point set")
        return cls(float(arr[:, 0].min()), float(arr[:, 1].min()), float(arr[:, 0].max()), float(arr[:, 1].max()))

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def area(self) -> float:
        return self.width * self.height

    def union(self, other: Rect) -> Rect:
        return Rect(
            min(self.xmin, other.xmin),
            min(self.ymin, other.ymin),
            max(self.xmax, other.xmax),
            max(self.ymax, other.ymax),
        )

    def expanded(self, fraction: float = BOX_EXPANSION) -> Rect:
        # A zero-extent axis borrows the other axis's size (or 1 unit) so the box stays 2-D.
        span = max(self.width, self.height) or 1.0
        dx = fraction * (self.width or span)
        dy = fraction * (self.height or span)
        return Rect(self.xmin - dx, self.ymin - dy, self.xmax + dx, self.ymax + dy)

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    def corners(self) -> list[XY]:
        return [(self.xmin, self.ymin), (self.xmax, self.ymin), (self.xmax, self.ymax), (self.xmin, self.ymax)]


# --------------------------------------------------------------------------
# polygon utilities


def polygon_area(polygon: Sequence[Point | XY]) -> float:
    """Signed shoelace area; positive for counter-clockwise vertex order."""
    pts = [tuple(p) for p in polygon]
    n = len(pts)
    acc = 0.0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        acc += x0 * y1 - x1 * y0
    return acc / 2.0


def polygon_centroid(polygon: Sequence[Point | XY]) -> Point:
    """Area-weighted centroid, falling back to the vertex mean for zero-area input."""
    pts = [tuple(p) for p in polygon]
    if len(pts) < 3:
        raise ValidationError("a polygon needs at least 3 vertices")
    n = len(pts)
    a = cx = cy = 0.0
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        cross = x0 * y1 - x1 * y0
        a += cross
        cx += (x0 + x1) * cross
        cy += (y0 + y1) * cross
    if abs(a) <= 1e-15 * max(1.0, max(abs(c) for p in pts for c in p) ** 2):
        return Point(sum(p[0] for p in pts) / n, sum(p[1] for p in pts) / n)
    a /= 2.0
    return Point(cx / (6.0 * a), cy / (6.0 * a))


def _on_segment(px: float, py: float, a: XY, b: XY, tol: float) -> bool:
    (ax, ay), (bx, by) = a, b
    dx, dy = bx - ax, by - ay
    length2 = dx * dx + dy * dy
    if length2 == 0.0:
        return math.hypot(px - ax, py - ay) <= tol
    t = ((px - ax) * dx + (py - ay) * dy) / length2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy)) <= tol


def point_in_polygon(x: float, y: float, polygon: Sequence[XY], tol: float = 1e-9) -> bool:
    """Even-odd test that also accepts points on the boundary (within ``tol``)."""
    n = len(polygon)
    if n < 3:
        return False
    inside = False
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        if _on_segment(x, y, a, b, tol):
            return True
        (ax, ay), (bx, by) = a, b
        if (ay > y) != (by > y):
            xcross = ax + (y - ay) * (bx - ax) / (by - ay)
            if x < xcross:
                inside = not inside
    return inside


def _clip_halfplane(
    poly: list[XY], labels: list[int], a: XY, b: float, label: int
) -> tuple[list[XY], list[int]]:
    """Keep the part of a convex polygon where a . p <= b.

    ``labels[i]`` names the constraint that produced the edge poly[i] -> poly[i+1].
    """
    out: list[XY] = []
    out_labels: list[int] = []
    n = len(poly)
    ax, ay = a
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        dp = ax * p[0] + ay * p[1] - b
        dq = ax * q[0] + ay * q[1] - b
        if dp <= 0.0:
            out.append(p)
            out_labels.append(labels[i])
            if dq > 0.0:
                t = dp / (dp - dq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
                out_labels.append(label)
        elif dq <= 0.0:
            t = dp / (dp - dq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
            out_labels.append(labels[i])
    return out, out_labels


# --------------------------------------------------------------------------
# point location


class SiteLocator:
    """Nearest-site queries with deterministic ties (lowest site index wins).

    Squared distances are compared exactly as ``dx*dx + dy*dy`` in float64;
    the KD-tree only narrows the candidate set.
    """

    def __init__(self, sites: np.ndarray | Sequence[Point | XY]):
        xy = np.asarray([tuple(s) for s in sites], dtype=float) if not isinstance(sites, np.ndarray) else sites
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if len(xy) == 0:
            raise ValidationError("at least one site is required")
        self.xy = xy
        self._tree = cKDTree(xy)

    def _sqd(self, q: np.ndarray, idx: np.ndarray) -> np.ndarray:
        dx = q[:, None, 0] - self.xy[idx, 0]
        dy = q[:, None, 1] - self.xy[idx, 1]
        return dx * dx + dy * dy

    def nearest(self, x: float, y: float) -> int:
        return int(self.nearest_many(np.array([[x, y]], dtype=float))[0])

    def nearest_many(self, query: np.ndarray | Sequence[Point | XY]) -> np.ndarray:
        q = np.asarray([tuple(p) for p in query], dtype=float) if not isinstance(query, np.ndarray) else query
        q = np.asarray(q, dtype=float).reshape(-1, 2)
        n = len(self.xy)
        if len(q) == 0:
            return np.zeros(0, dtype=np.int64)
        if n == 1:
            return np.zeros(len(q), dtype=np.int64)
        kk = min(n, 8)
        _, idx = self._tree.query(q, k=kk)
        idx = np.asarray(idx, dtype=np.int64).reshape(len(q), kk)
        sqd = self._sqd(q, idx)
        best = sqd.min(axis=1)
        # among exact-minimum candidates pick the lowest site index
        masked = np.where(sqd == best[:, None], idx, np.iinfo(np.int64).max)
        result = masked.min(axis=1)
        if kk < n:
            # candidates beyond the k nearest may tie within rounding: re-check with a ball query
            worst = sqd.max(axis=1)
            risky = np.nonzero(worst <= best * (1 + 1e-9) + 1e-300)[0]
            for row in risky:
                radius = math.sqrt(best[row]) * (1 + 1e-7) + 1e-12
                cand = np.asarray(self._tree.query_ball_point(q[row], radius), dtype=np.int64)
                d = self._sqd(q[row : row + 1], cand[None, :])[0]
                result[row] = cand[d == d.min()].min()
        return result


# --------------------------------------------------------------------------
# Voronoi diagram


@dataclass(frozen=True, eq=False)
class VoronoiDiagram:
    """Voronoi diagram of distinct sites clipped to ``bounding_box``.

    ``source_indices[i]`` is the position in the caller's site list of
    diagram site ``i`` (the first occurrence when duplicates were collapsed).
    """

    sites: tuple[Point, ...]
    cells: tuple[tuple[XY, ...], ...]
    adjacency: tuple[frozenset[int], ...]
    bounding_box: Rect
    source_indices: tuple[int, ...]
    warnings: tuple[str, ...] = ()
    _locator: SiteLocator = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.sites)

    def adjacent(self, i: int, j: int) -> bool:
        return j in self.adjacency[i]

    def cell_area(self, i: int) -> float:
        return abs(polygon_area(self.cells[i]))

    def nearest(self, x: float, y: float) -> int:
        return self._locator.nearest(x, y)

    def nearest_many(self, query) -> np.ndarray:
        return self._locator.nearest_many(query)


def _dedupe(sites: Sequence[Point]) -> tuple[list[Point], list[int]]:
    seen: dict[tuple[float, float], int] = {}
    unique: list[Point] = []
    source: list[int] = []
    for i, s in enumerate(sites):
        key = (float(s.x), float(s.y))
        if key in seen:
            continue
        seen[key] = len(unique)
        unique.append(Point(*key))
        source.append(i)
    return unique, source


def _candidate_neighbors(xy: np.ndarray) -> list[set[int]]:
    n = len(xy)
    everyone = [set(range(n)) - {i} for i in range(n)]
    if n <= 3:
        return everyone
    try:
        tri = Delaunay(xy)
    except QhullError:
        return everyone
    if len(getattr(tri, "coplanar", ())) > 0:
        return everyone
    indptr, indices = tri.vertex_neighbor_vertices
    return [set(indices[indptr[i] : indptr[i + 1]].tolist()) for i in range(n)]


def build_voronoi(sites: Sequence[Point | XY], extent: Rect | None = None) -> VoronoiDiagram:
    """Build the clipped Voronoi diagram of ``sites``.

    The clipping box is ``extent`` (grown to include every site) expanded by
    10% per side. Duplicate sites collapse onto their first occurrence.
    """
    pts = [s if isinstance(s, Point) else Point(float(s[0]), float(s[1])) for s in sites]
    if not pts:
        raise ValidationError("at least one site is required")
    for s in pts:
        if not (math.isfinite(s.x) and math.isfinite(s.y)):
            raise ValidationError(f"site {s} has non-finite coordinates")
    unique, source = _dedupe(pts)
    warnings: list[str] = []
    if len(unique) < len(pts):
        if len(unique) == 1:
            raise DegenerateInputError(f"all {len(pts)} requested sites coincide at {unique[0]}")
        msg = f"collapsed {len(pts) - len(unique)} duplicate site(s)"
        log.warning(msg)
        warnings.append(msg)

    bounds = Rect.bounding(unique)
    if extent is not None:
        bounds = bounds.union(extent)
    box = bounds.expanded()

    xy = np.asarray([(s.x, s.y) for s in unique], dtype=float)
    neighbors = _candidate_neighbors(xy)
    n = len(unique)
    diag = math.hypot(box.width, box.height)
    edge_tol = 1e-9 * diag

    cells: list[tuple[XY, ...]] = []
    adjacency: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        poly = box.corners()
        labels = [-1, -2, -3, -4]
        sx, sy = xy[i]
        # sort for deterministic floating-point results
        for j in sorted(neighbors[i]):
            tx, ty = xy[j]
            a = (tx - sx, ty - sy)
            b = (tx * tx + ty * ty - sx * sx - sy * sy) / 2.0
            poly, labels = _clip_halfplane(poly, labels, a, b, j)
            if not poly:
                break
        cells.append(tuple(poly))
        m = len(poly)
        for e in range(m):
            j = labels[e]
            if j < 0:
                continue
            (x0, y0), (x1, y1) = poly[e], poly[(e + 1) % m]
            if math.hypot(x1 - x0, y1 - y0) > edge_tol:
                adjacency[i].add(j)
    for i in range(n):
        for j in adjacency[i]:
            adjacency[j].add(i)

    return VoronoiDiagram(
        sites=tuple(unique),
        cells=tuple(cells),
        adjacency=tuple(frozenset(a) for a in adjacency),
        bounding_box=box,
        source_indices=tuple(source),
        warnings=tuple(warnings),
        _locator=SiteLocator(xy),
    )


def nearest_site(q: Point | XY, diagram: VoronoiDiagram) -> int:
    """Index of the diagram site closest to ``q``; ties go to the lowest index."""
    x, y = tuple(q)
    return diagram.nearest(float(x), float(y))


# --------------------------------------------------------------------------
# neighbourhoods


@dataclass(frozen=True)
class NeighborhoodPolygon:
    own_cell: tuple[XY, ...]
    adjacent_ring: tuple[XY, ...]

    @property
    def ring_is_degenerate(self) -> bool:
        return len(self.adjacent_ring) < 3

    def contains(self, x: float, y: float, tol: float = 1e-9) -> bool:
        if point_in_polygon(x, y, self.own_cell, tol):
            return True
        return not self.ring_is_degenerate and point_in_polygon(x, y, self.adjacent_ring, tol)


def neighborhood(diagram: VoronoiDiagram, site_index: int) -> NeighborhoodPolygon:
    """Own cell plus the ring through the adjacent sites, ordered by angle.

    The ring is listed clockwise around the cluster's site to mirror the
    traversal direction; membership is orientation independent.
    """
    if not 0 <= site_index < len(diagram):
        raise ValidationError(f"site index {site_index} out of range")
    c = diagram.sites[site_index]
    adj = sorted(
        diagram.adjacency[site_index],
        key=lambda j: (-math.atan2(diagram.sites[j].y - c.y, diagram.sites[j].x - c.x), j),
    )
    ring = tuple((diagram.sites[j].x, diagram.sites[j].y) for j in adj)
    return NeighborhoodPolygon(own_cell=diagram.cells[site_index], adjacent_ring=ring)
