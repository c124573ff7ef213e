import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoanon.balanced import (
    CellPartition,
    RowPartition,
    WeightedPoint,
    balanced_sites,
    initial_row_count,
    partition_cells,
    partition_rows,
    place_sites,
)
from geoanon.model import Point


def wp(x, y, pop=1, rid=""):
    return WeightedPoint(float(x), float(y), pop, rid or f"{x}_{y}")


def random_points(rng, n, max_pop=700):
    xy = rng.uniform(0, 1000, size=(n, 2))
    pops = rng.integers(0, max_pop + 1, size=n)
    pops[0] = max(pops[0], 1)
    return [WeightedPoint(float(x), float(y), int(p), f"r{i}") for i, ((x, y), p) in enumerate(zip(xy, pops))]


@pytest.mark.parametrize("s,r", [(9, 3), (1, 1), (10, 3), (2, 1), (3, 2), (12, 3), (13, 4)])
def test_initial_row_count(s, r):
    assert initial_row_count(s) == r


def test_four_equal_points_two_rows():
    pts = [wp(0, 0), wp(1, 0), wp(0, 1), wp(1, 1)]
    rows = partition_rows(pts, 4)
    assert len(rows) == 2
    assert [len(r) for r in rows.rows] == [2, 2]
    assert {p.y for p in rows.rows[0]} == {0.0}


def test_same_y_ordered_by_x_then_region():
    pts = [wp(3, 5, rid="c"), wp(1, 5, rid="b"), wp(1, 5, rid="a")]
    rows = partition_rows(pts, 1)
    assert [p.region_id for p in rows.rows[0]] == ["a", "b", "c"]


def test_boundary_tie_keeps_point():
    # target 5: before=4 (distance 1), after=6 (distance 1) -> keep
    pts = [wp(0, 0, 4), wp(0, 1, 2), wp(0, 2, 4)]
    rows = partition_rows(pts, 4)
    assert rows.populations == (6, 4)


def test_boundary_defers_point_when_closer_without():
    # target 5: before=4 (distance 1), after=8 (distance 3) -> defer
    pts = [wp(0, 0, 4), wp(0, 1, 4), wp(0, 2, 2)]
    rows = partition_rows(pts, 4)
    assert rows.populations == (4, 6)


def test_row_populations_within_max_point_of_target(rng):
    for _ in range(50):
        n = int(rng.integers(20, 500))
        pts = random_points(rng, n)
        s = int(rng.integers(1, min(n, 200) + 1))
        rows = partition_rows(pts, s)
        total = sum(p.population for p in pts)
        target = max(1, int(np.floor(total / initial_row_count(s) + 0.5)))
        biggest = max(p.population for p in pts)
        for pop in rows.populations[:-1]:
            assert abs(pop - target) <= biggest


def test_one_row_three_equal_cells():
    pts = [wp(x, 0) for x in range(9)]
    cells = partition_cells(RowPartition((tuple(pts),)), 3, 9)
    assert [len(c) for c in cells.cells] == [3, 3, 3]
    assert [p.x for p in cells.cells[0]] == [0, 1, 2]


def test_one_cell_per_point_when_s_equals_n():
    pts = [wp(x, y) for x in range(4) for y in range(4)]
    cells = partition_cells(partition_rows(pts, 16), 16)
    assert sorted(len(c) for c in cells.cells) == [1] * 16


def test_deficit_splits_largest_cell():
    # one huge point on the left swallows the target of two cells
    pts = [wp(0, 0, 100), wp(1, 0, 1), wp(2, 0, 1), wp(3, 0, 1)]
    cells = partition_cells(RowPartition((tuple(pts),)), 4, 103)
    assert len(cells) == 4
    assert all(len(c) == 1 for c in cells.cells)


def test_place_sites_means():
    cells = CellPartition(
        (
            (wp(0, 0), wp(2, 0)),
            (wp(5, 7),),
            (wp(0, 0), wp(0, 3), wp(3, 0), wp(3, 3)),
        )
    )
    assert place_sites(cells) == [Point(1, 0), Point(5, 7), Point(1.5, 1.5)]


def test_place_sites_unweighted():
    cells = CellPartition(((wp(0, 0, 1000), wp(4, 0, 1)),))
    assert place_sites(cells) == [Point(2, 0)]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cell_count_exact_and_partition(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 400))
    pts = random_points(rng, n, max_pop=int(rng.choice([1, 10, 700, 5000])))
    s = int(rng.integers(1, n + 1))
    rows = partition_rows(pts, s)
    cells = partition_cells(rows, s)
    assert len(cells) == s
    flat = [p.region_id for c in cells.cells for p in c]
    assert sorted(flat) == sorted(p.region_id for p in pts)
    assert all(cells.cells)


def test_cells_near_ideal_population(rng):
    # equal populations: every non-adjusted cell within one point of ideal
    pts = [WeightedPoint(float(x), float(y), 10, f"{x}-{y}") for x, y in rng.uniform(0, 1, size=(600, 2))]
    s = 25
    cells = partition_cells(partition_rows(pts, s), s)
    ideal = 6000 / s
    assert all(abs(pop - ideal) <= 10 for pop in cells.populations)


def test_deterministic(rng):
    pts = random_points(rng, 300)
    assert balanced_sites(pts, 17) == balanced_sites(list(reversed(pts)), 17)
