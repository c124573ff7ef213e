"""Balanced-density site placement.

Region points are cut into horizontal rows of roughly equal population, each
row into cells of roughly equal population, and one site goes to the mean
of each cell's points. The cells are conceptual; no boundaries are drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from geoanon.model import InitialRegion, Point, ValidationError
from geoanon.sitecount import round_half_up


@dataclass(frozen=True)
class WeightedPoint:
    x: float
    y: float
    population: int
    region_id: str = ""


@dataclass(frozen=True)
class RowPartition:
    rows: tuple[tuple[WeightedPoint, ...], ...]

    @property
    def populations(self) -> tuple[int, ...]:
        return tuple(_pop(r) for r in self.rows)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class CellPartition:
    cells: tuple[tuple[WeightedPoint, ...], ...]

    @property
    def populations(self) -> tuple[int, ...]:
        return tuple(_pop(c) for c in self.cells)

    def __len__(self) -> int:
        return len(self.cells)


def _pop(points: Sequence[WeightedPoint]) -> int:
    return sum(p.population for p in points)


def weighted_points(regions: Sequence[InitialRegion]) -> list[WeightedPoint]:
    return [WeightedPoint(r.location.x, r.location.y, r.population, r.region_id) for r in regions]


def initial_row_count(s: int) -> int:
    if s < 1:
        raise ValidationError("site count must be at least 1")
    return max(1, round_half_up(math.sqrt(s)))


def _walk(
    points: Sequence[WeightedPoint], target: int, limit: int | None = None
) -> tuple[list[list[WeightedPoint]], bool]:
    """Greedy population walk.

    A group closes once its population reaches ``target``; the point that
    crosses the target stays in the group when that leaves the sum at least
    as close to the target as leaving it out (ties keep the point). With
    ``limit`` set, the last group takes every point left once limit-1
    groups are closed. The flag reports whether the final group is a
    remainder that never reached the target.
    """
    groups: list[list[WeightedPoint]] = []
    cur: list[WeightedPoint] = []
    acc = 0
    i, n = 0, len(points)
    while i < n:
        if limit is not None and len(groups) == limit - 1:
            groups.append(list(points[i:]))
            return groups, False
        pt = points[i]
        after = acc + pt.population
        if after >= target:
            if cur and after - target > target - acc:
                groups.append(cur)
            else:
                cur.append(pt)
                groups.append(cur)
                i += 1
            cur, acc = [], 0
        else:
            cur.append(pt)
            acc = after
            i += 1
    if cur:
        groups.append(cur)
        return groups, True
    return groups, False


def partition_rows(points: Sequence[WeightedPoint], s: int) -> RowPartition:
    total = _pop(points)
    if total <= 0:
        raise ValidationError("balanced placement needs a positive total population")
    r = initial_row_count(s)
    target = max(1, round_half_up(total / r))
    ordered = sorted(points, key=lambda p: (p.y, p.x, p.region_id))
    rows, tail_partial = _walk(ordered, target)
    if tail_partial and len(rows) > 1:
        tail = _pop(rows[-1])
        # not enough population left for another row: fold it into the previous one
        if tail < target - tail:
            rows[-2].extend(rows.pop())
    # every row needs at least one cell
    while len(rows) > s:
        pair = min(range(len(rows) - 1), key=lambda i: (_pop(rows[i]) + _pop(rows[i + 1]), i))
        rows[pair].extend(rows.pop(pair + 1))
    return RowPartition(tuple(tuple(r) for r in rows))


def cells_per_row(rows: RowPartition, s: int, p: int) -> list[int]:
    """Cells for each row, proportional to row population, summing to ``s``.

    Rows are capped at their point count so that every cell is non-empty.
    """
    sizes = [len(r) for r in rows.rows]
    if len(sizes) > s:
        raise ValidationError(f"{len(sizes)} rows cannot share {s} cells")
    if sum(sizes) < s:
        raise ValidationError(f"{sum(sizes)} points cannot fill {s} cells")
    raw = [s * rp / p for rp in rows.populations]
    counts = [min(max(1, round_half_up(x)), n) for x, n in zip(raw, sizes)]
    while sum(counts) < s:
        i = max(
            (i for i in range(len(counts)) if counts[i] < sizes[i]),
            key=lambda i: (raw[i] - counts[i], -i),
        )
        counts[i] += 1
    while sum(counts) > s:
        i = min(
            (i for i in range(len(counts)) if counts[i] > 1),
            key=lambda i: (raw[i] - counts[i], i),
        )
        counts[i] -= 1
    return counts


def _split_in_half(cell: list[WeightedPoint]) -> tuple[list[WeightedPoint], list[WeightedPoint]]:
    total = _pop(cell)
    if total == 0:
        mid = len(cell) // 2
        return cell[:mid], cell[mid:]
    groups, _ = _walk(cell, max(1, round_half_up(total / 2)), limit=2)
    if len(groups) < 2:
        # the first point alone crosses the midpoint
        return cell[:1], cell[1:]
    return groups[0], groups[1]


def _row_cells(row: Sequence[WeightedPoint], count: int) -> list[list[WeightedPoint]]:
    ordered = sorted(row, key=lambda p: (p.x, p.y, p.region_id))
    if count == 1:
        return [ordered]
    target = max(1, round_half_up(_pop(ordered) / count))
    cells, _ = _walk(ordered, target, limit=count)
    while len(cells) < count:
        splittable = [i for i, c in enumerate(cells) if len(c) > 1]
        i = max(splittable, key=lambda i: (_pop(cells[i]), len(cells[i]), -i))
        left, right = _split_in_half(cells[i])
        cells[i : i + 1] = [left, right]
    return cells


def partition_cells(rows: RowPartition, s: int, p: int | None = None) -> CellPartition:
    if p is None:
        p = sum(rows.populations)
    counts = cells_per_row(rows, s, p)
    cells: list[tuple[WeightedPoint, ...]] = []
    for row, count in zip(rows.rows, counts):
        cells.extend(tuple(c) for c in _row_cells(row, count))
    if len(cells) != s:
        raise AssertionError(f"cell partition produced {len(cells)} cells, expected {s}")
    return CellPartition(tuple(cells))


def place_sites(cells: CellPartition) -> list[Point]:
    sites = []
    for cell in cells.cells:
        if not cell:
            raise AssertionError("balanced placement produced an empty cell")
        sites.append(Point(sum(p.x for p in cell) / len(cell), sum(p.y for p in cell) / len(cell)))
    return sites


def balanced_sites(points: Sequence[WeightedPoint], s: int) -> list[Point]:
    if s > len(points):
        raise ValidationError(f"cannot place {s} sites over {len(points)} points")
    rows = partition_rows(points, s)
    return place_sites(partition_cells(rows, s, _pop(points)))
