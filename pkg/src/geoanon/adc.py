"""Anonymity-driven clustering of Voronoi sites.

A k-means-style loop where the objective is the anonymity of the implied
aggregation instead of within-cluster distance. Clusters are the nearest-
center groups of region points, so each cluster is exactly the aggregated
region its center would produce as a Voronoi site.

Objective: alpha * |R| - |R_alpha| where alpha is the global anonymity (the
smallest class cardinality over all non-empty clusters), |R| the number of
clusters and |R_alpha| the number of clusters sitting at alpha. Only moves
that strictly raise it are committed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from geoanon.geometry import Rect, SiteLocator, VoronoiDiagram, build_voronoi, neighborhood
from geoanon.model import ClassKey, DegenerateInputError, InitialRegion, Point, ValidationError

log = logging.getLogger(__name__)


class RegionClassMatrix:
    """Region x class count matrix over the classes actually observed.

    Class columns are in lexicographic key order, so scanning columns in
    index order scans keys lexicographically.
    """

    def __init__(self, regions: Sequence[InitialRegion]):
        self.regions = list(regions)
        self.points = np.asarray([(r.location.x, r.location.y) for r in regions], dtype=float).reshape(-1, 2)
        keys = sorted({key for r in regions for key in r.class_table})
        self.keys: list[ClassKey] = keys
        col = {key: j for j, key in enumerate(keys)}
        rows, cols, vals = [], [], []
        for i, r in enumerate(regions):
            for key, n in r.class_table.items():
                rows.append(i)
                cols.append(col[key])
                vals.append(n)
        shape = (len(regions), len(keys))
        self.counts = sparse.csr_matrix((np.asarray(vals, dtype=np.int64), (rows, cols)), shape=shape)
        self.by_class = self.counts.tocsc()
        self.extent = Rect.bounding(self.points) if len(self.points) else None

    def members_of(self, class_id: int) -> tuple[np.ndarray, np.ndarray]:
        """(region indices, member counts) of regions holding the class."""
        lo, hi = self.by_class.indptr[class_id], self.by_class.indptr[class_id + 1]
        return self.by_class.indices[lo:hi], self.by_class.data[lo:hi]


@dataclass(frozen=True, eq=False)
class ClusterState:
    centers: np.ndarray
    assignment: np.ndarray
    cluster_counts: sparse.csr_matrix
    # 0 marks a cluster with no records, excluded from every minimum
    min_cardinality: np.ndarray
    global_anonymity: int
    lowest_level_clusters: frozenset[int]

    @property
    def cluster_count(self) -> int:
        return len(self.centers)

    def bottleneck_classes(self, cluster: int) -> list[int]:
        lo, hi = self.cluster_counts.indptr[cluster], self.cluster_counts.indptr[cluster + 1]
        cols = self.cluster_counts.indices[lo:hi]
        vals = self.cluster_counts.data[lo:hi]
        return sorted(cols[vals == self.min_cardinality[cluster]].tolist())

    def center(self, cluster: int) -> Point:
        return Point(float(self.centers[cluster, 0]), float(self.centers[cluster, 1]))


@dataclass(frozen=True)
class BottleneckClass:
    cluster: int
    class_id: int
    cardinality: int


def evaluate_state(centers: np.ndarray | Sequence[Point], data: RegionClassMatrix) -> ClusterState:
    c = np.asarray([tuple(p) for p in centers], dtype=float) if not isinstance(centers, np.ndarray) else centers
    c = np.asarray(c, dtype=float).reshape(-1, 2)
    s = len(c)
    if s == 0:
        raise ValidationError("at least one cluster center is required")
    assignment = SiteLocator(c).nearest_many(data.points)
    n = len(data.points)
    onehot = sparse.csr_matrix((np.ones(n, dtype=np.int64), (assignment, np.arange(n))), shape=(s, n))
    counts = (onehot @ data.counts).tocsr()
    counts.sum_duplicates()
    counts.eliminate_zeros()
    nnz = np.diff(counts.indptr)
    mins = np.zeros(s, dtype=np.int64)
    nonempty = nnz > 0
    if nonempty.any():
        mins[nonempty] = np.minimum.reduceat(counts.data, counts.indptr[:-1][nonempty])
    if nonempty.any():
        alpha = int(mins[nonempty].min())
        lowest = frozenset(np.nonzero(nonempty & (mins == alpha))[0].tolist())
    else:
        alpha, lowest = 0, frozenset()
    return ClusterState(c, assignment, counts, mins, alpha, lowest)


def objective(state: ClusterState) -> int:
    return state.global_anonymity * state.cluster_count - len(state.lowest_level_clusters)


def _diagram(state: ClusterState, data: RegionClassMatrix) -> VoronoiDiagram:
    return build_voronoi([state.center(i) for i in range(state.cluster_count)], data.extent)


def propose_move(
    state: ClusterState,
    bottleneck: BottleneckClass,
    diagram: VoronoiDiagram,
    data: RegionClassMatrix,
) -> Point | None:
    """Member-weighted mean of the bottleneck class inside the cluster's neighbourhood.

    Returns None when the neighbourhood holds no member of the class.
    """
    cell = diagram.source_indices.index(bottleneck.cluster)
    hood = neighborhood(diagram, cell)
    box = diagram.bounding_box
    tol = 1e-9 * max(box.width, box.height)
    regions, weights = data.members_of(bottleneck.class_id)
    sx = sy = 0.0
    wsum = 0
    for r, w in zip(regions.tolist(), weights.tolist()):
        x, y = data.points[r]
        if hood.contains(float(x), float(y), tol):
            sx += x * w
            sy += y * w
            wsum += w
    if wsum == 0:
        return None
    return Point(sx / wsum, sy / wsum)


def commit_if_improving(
    state: ClusterState, cluster: int, candidate: Point, data: RegionClassMatrix
) -> ClusterState:
    """Move one center if that strictly raises the objective; else return ``state``."""
    if not (np.isfinite(candidate.x) and np.isfinite(candidate.y)):
        raise ValidationError("candidate center must be finite")
    if state.centers[cluster, 0] == candidate.x and state.centers[cluster, 1] == candidate.y:
        return state
    moved = state.centers.copy()
    moved[cluster] = (candidate.x, candidate.y)
    trial = evaluate_state(moved, data)
    return trial if objective(trial) > objective(state) else state


@dataclass
class AdcResult:
    centers: list[Point]
    committed_moves: int
    objective_trace: list[int] = field(default_factory=list)
    cap_hit: bool = False
    reason: str = ""


def random_seeds(data: RegionClassMatrix, count: int, rng_seed: int) -> list[Point]:
    rng = np.random.default_rng(rng_seed)
    e = data.extent
    xs = rng.uniform(e.xmin, e.xmax, size=count)
    ys = rng.uniform(e.ymin, e.ymax, size=count)
    return [Point(float(x), float(y)) for x, y in zip(xs, ys)]


def run_adc(
    seed_centers: Sequence[Point],
    regions: Sequence[InitialRegion] | RegionClassMatrix,
    k: int,
    max_committed_moves: int = 1000,
) -> AdcResult:
    data = regions if isinstance(regions, RegionClassMatrix) else RegionClassMatrix(regions)
    if not seed_centers:
        raise ValidationError("ADC needs at least one seed center")
    state = evaluate_state(list(seed_centers), data)
    trace = [objective(state)]
    moves = 0

    def done(reason: str, cap: bool = False) -> AdcResult:
        log.debug("ADC stopped after %d moves: %s", moves, reason)
        return AdcResult([state.center(i) for i in range(state.cluster_count)], moves, trace, cap, reason)

    if max_committed_moves == 0:
        return done("move cap", cap=True)
    while True:
        if not state.lowest_level_clusters or state.global_anonymity >= k:
            return done("all clusters reached k")
        try:
            diagram = _diagram(state, data)
        except DegenerateInputError:
            return done("degenerate centers")
        committed_any = False
        restart = False
        for c in sorted(state.lowest_level_clusters):
            if c not in state.lowest_level_clusters:
                continue
            level_before = int(state.min_cardinality[c])
            tried: set[int] = set()
            while True:
                pending = [b for b in state.bottleneck_classes(c) if b not in tried]
                if not pending:
                    break
                class_id = pending[0]
                tried.add(class_id)
                bottleneck = BottleneckClass(c, class_id, int(state.min_cardinality[c]))
                candidate = propose_move(state, bottleneck, diagram, data)
                if candidate is None:
                    continue
                new = commit_if_improving(state, c, candidate, data)
                if new is state:
                    continue
                before, after = objective(state), objective(new)
                if not after > before:
                    raise AssertionError(f"committed move did not raise the objective ({before} -> {after})")
                state = new
                moves += 1
                trace.append(after)
                committed_any = True
                if moves >= max_committed_moves:
                    log.warning("ADC reached the cap of %d committed moves", max_committed_moves)
                    return done("move cap", cap=True)
                if state.global_anonymity >= k:
                    return done("all clusters reached k")
                try:
                    diagram = _diagram(state, data)
                except DegenerateInputError:
                    return done("degenerate centers")
                if state.min_cardinality[c] > level_before or c not in state.lowest_level_clusters:
                    restart = True
                    break
            if restart:
                break
        if not committed_any:
            return done("no improving move")
