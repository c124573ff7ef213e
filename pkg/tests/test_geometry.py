import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_nearest

from geoanon.geometry import (
    Rect,
    SiteLocator,
    build_voronoi,
    nearest_site,
    neighborhood,
    point_in_polygon,
    polygon_area,
    polygon_centroid,
)
from geoanon.model import DegenerateInputError, Point, ValidationError


def unit_extent():
    return Rect(0.0, 0.0, 1.0, 1.0)


def test_single_site_cell_is_clipped_box():
    d = build_voronoi([Point(0.5, 0.5)], unit_extent())
    box = d.bounding_box
    assert box == Rect(-0.1, -0.1, 1.1, 1.1)
    assert sorted(d.cells[0]) == sorted(box.corners())
    assert d.adjacency == (frozenset(),)


def test_two_sites_share_bisector_edge():
    d = build_voronoi([Point(0, 0), Point(2, 0)], Rect(0, -1, 2, 1))
    assert d.adjacent(0, 1) and d.adjacent(1, 0)
    shared_left = [v for v in d.cells[0] if math.isclose(v[0], 1.0)]
    shared_right = [v for v in d.cells[1] if math.isclose(v[0], 1.0)]
    assert len(shared_left) == 2 and len(shared_right) == 2
    assert max(v[0] for v in d.cells[0]) == pytest.approx(1.0)
    assert min(v[0] for v in d.cells[1]) == pytest.approx(1.0)


def test_nearest_site_examples():
    d = build_voronoi([Point(0, 0), Point(2, 0)], Rect(0, -1, 2, 1))
    assert nearest_site(Point(0.4, 0), d) == 0
    assert nearest_site(Point(1, 0), d) == 0  # equidistant: lowest index
    assert nearest_site(Point(1.6, 0.3), d) == 1


def test_membership_matches_linear_scan(rng):
    sites = rng.uniform(0, 100, size=(100, 2))
    d = build_voronoi([Point(*s) for s in sites], Rect(0, 0, 100, 100))
    q = rng.uniform(0, 100, size=(10_000, 2))
    got = d.nearest_many(q)
    expect = [brute_nearest(x, y, sites.tolist()) for x, y in q.tolist()]
    assert got.tolist() == expect


def test_locator_ties_on_lattice():
    # integer lattice queries produce many exact ties
    sites = [(float(x), float(y)) for x in range(0, 10, 2) for y in range(0, 10, 2)]
    loc = SiteLocator(sites)
    q = np.array([(x / 2, y / 2) for x in range(0, 19) for y in range(0, 19)], dtype=float)
    assert loc.nearest_many(q).tolist() == [brute_nearest(x, y, sites) for x, y in q.tolist()]


def test_locator_many_equidistant_sites():
    # 16 sites on a circle around the query: all tie, beyond the KD candidate count
    angles = np.arange(16) * (2 * np.pi / 16)
    sites = np.column_stack([np.cos(angles) * 4, np.sin(angles) * 4])
    sites = np.round(sites * 2**20) / 2**20
    loc = SiteLocator(sites)
    assert loc.nearest(0.0, 0.0) == brute_nearest(0.0, 0.0, sites.tolist())


def test_cells_cover_box_and_adjacency_symmetric(rng):
    for n in (2, 3, 5, 40, 300):
        pts = [Point(*p) for p in rng.uniform(-50, 50, size=(n, 2))]
        d = build_voronoi(pts, Rect(-50, -50, 50, 50))
        total = sum(d.cell_area(i) for i in range(len(d)))
        assert total == pytest.approx(d.bounding_box.area, rel=1e-6)
        for i, adj in enumerate(d.adjacency):
            assert i not in adj
            for j in adj:
                assert i in d.adjacency[j]


def test_cells_contain_their_sites_and_points_match_nearest(rng):
    pts = rng.uniform(0, 10, size=(30, 2))
    d = build_voronoi([Point(*p) for p in pts], Rect(0, 0, 10, 10))
    for i, (x, y) in enumerate(pts):
        assert point_in_polygon(x, y, d.cells[i])
    for x, y in rng.uniform(0, 10, size=(500, 2)):
        i = nearest_site((x, y), d)
        assert point_in_polygon(x, y, d.cells[i], tol=1e-9)


def test_collinear_sites():
    pts = [Point(float(i), 0.0) for i in range(6)]
    d = build_voronoi(pts, Rect(0, -1, 5, 1))
    assert [sorted(a) for a in d.adjacency] == [[1], [0, 2], [1, 3], [2, 4], [3, 5], [4]]
    assert sum(d.cell_area(i) for i in range(6)) == pytest.approx(d.bounding_box.area)


def test_duplicates_collapse_with_warning():
    d = build_voronoi([Point(0, 0), Point(1, 1), Point(0, 0)], Rect(0, 0, 1, 1))
    assert len(d) == 2
    assert d.source_indices == (0, 1)
    assert d.warnings


def test_all_coincident_sites_rejected():
    with pytest.raises(DegenerateInputError):
        build_voronoi([Point(1, 1), Point(1, 1)], Rect(0, 0, 2, 2))


def test_zero_extent_still_2d():
    d = build_voronoi([Point(3, 3)], Rect(3, 3, 3, 3))
    assert d.bounding_box.area > 0


def test_grid_center_neighborhood():
    # On an exact grid the diagonal cells meet the center cell at a single
    # corner, so only the four edge-sharing neighbours are adjacent.
    pts = [Point(float(x), float(y)) for y in range(3) for x in range(3)]
    d = build_voronoi(pts, Rect(0, 0, 2, 2))
    hood = neighborhood(d, 4)
    assert sorted(d.adjacency[4]) == [1, 3, 5, 7]
    ring = set(hood.adjacent_ring)
    assert ring == {(1.0, 0.0), (0.0, 1.0), (2.0, 1.0), (1.0, 2.0)}
    # clockwise around the center
    assert polygon_area(hood.adjacent_ring) < 0
    assert hood.contains(1.0, 1.0)
    assert hood.contains(0.4, 1.0)  # inside the ring, outside the own cell
    assert not hood.contains(0.1, 0.1)


def test_jittered_grid_center_sees_diagonals():
    # A rotated grid breaks the four-way corner ties; the ring then follows
    # the Delaunay neighbours around the center by angle.
    theta = 0.3
    pts = []
    for y in range(3):
        for x in range(3):
            pts.append(Point(x * math.cos(theta) - y * math.sin(theta) + 0.05 * (y % 2), x * math.sin(theta) + y * math.cos(theta)))
    d = build_voronoi(pts, Rect.bounding(pts))
    hood = neighborhood(d, 4)
    c = pts[4]
    angles = [math.atan2(y - c.y, x - c.x) for x, y in hood.adjacent_ring]
    # strictly decreasing once unwrapped: clockwise order
    diffs = [(angles[i] - angles[i + 1]) % (2 * math.pi) for i in range(len(angles) - 1)]
    assert all(0 < dlt < math.pi for dlt in diffs)
    assert len(hood.adjacent_ring) >= 4


def test_single_site_neighborhood_is_own_cell():
    d = build_voronoi([Point(0, 0)], Rect(-1, -1, 1, 1))
    hood = neighborhood(d, 0)
    assert hood.ring_is_degenerate
    assert hood.contains(0.5, 0.5)
    assert not hood.contains(5, 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_neighborhood_contains_own_cell_members(seed, n):
    rng = np.random.default_rng(seed)
    sites = rng.uniform(0, 1, size=(n, 2))
    d = build_voronoi([Point(*s) for s in sites], Rect(0, 0, 1, 1))
    q = rng.uniform(0, 1, size=(200, 2))
    owner = d.nearest_many(q)
    for (x, y), i in zip(q, owner):
        assert neighborhood(d, int(i)).contains(x, y)


def test_polygon_centroid_examples():
    assert polygon_centroid([(0, 0), (1, 0), (1, 1), (0, 1)]) == Point(0.5, 0.5)
    c = polygon_centroid([(0, 0), (3, 0), (0, 3)])
    assert c.x == pytest.approx(1.0) and c.y == pytest.approx(1.0)
    assert polygon_centroid([(0, 0), (1, 0), (2, 0)]) == Point(1.0, 0.0)
    with pytest.raises(ValidationError):
        polygon_centroid([(0, 0), (1, 1)])


@given(st.integers(0, 2**32 - 1))
def test_nearest_site_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 60))
    # coarse coordinates make ties likely
    sites = rng.integers(0, 8, size=(n, 2)).astype(float)
    q = rng.integers(0, 16, size=(50, 2)).astype(float) / 2
    loc = SiteLocator(sites)
    assert loc.nearest_many(q).tolist() == [brute_nearest(x, y, sites.tolist()) for x, y in q.tolist()]
