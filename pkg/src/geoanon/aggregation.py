"""Voronoi aggregation of initial regions and suppression of small classes."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from geoanon.geometry import Rect, VoronoiDiagram, build_voronoi
from geoanon.model import (
    ClassKey,
    EquivalenceClassTable,
    InitialRegion,
    Point,
    ValidationError,
    merge_tables,
)


@dataclass(frozen=True)
class AggregatedRegion:
    aggregated_id: int
    site: Point
    member_region_ids: tuple[str, ...]
    merged_table: EquivalenceClassTable

    @property
    def anonymity_level(self) -> int | None:
        """Smallest class cardinality before suppression; None when empty."""
        return self.merged_table.min_cardinality()

    @property
    def is_empty(self) -> bool:
        return not self.member_region_ids


@dataclass(frozen=True)
class PublishedRecord:
    record_id: str
    aggregated_id: int
    values: ClassKey
    # kept in memory for evaluation only; never written to the published file
    source_region_id: str


@dataclass(frozen=True)
class SuppressedClass:
    aggregated_id: int
    key: ClassKey
    cardinality: int


@dataclass
class AggregationResult:
    regions: list[AggregatedRegion]
    region_mapping: dict[str, int]
    suppressed: list[SuppressedClass]
    published_records: list[PublishedRecord]
    input_record_count: int
    k: int
    diagram: VoronoiDiagram | None = None
    timing: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def suppressed_count(self) -> int:
        return sum(s.cardinality for s in self.suppressed)

    @property
    def sites(self) -> list[Point]:
        return [r.site for r in self.regions]


def data_extent(regions: Sequence[InitialRegion]) -> Rect | None:
    return Rect.bounding([r.location for r in regions]) if regions else None


def aggregate(
    regions: Sequence[InitialRegion],
    sites: Sequence[Point],
    k: int,
    diagram: VoronoiDiagram | None = None,
) -> AggregationResult:
    """Group regions by Voronoi cell, merge their tables and suppress classes below k.

    Aggregated ids are positions in ``sites``. A site that duplicates an
    earlier one keeps its id but receives no regions.
    """
    if not sites:
        raise ValidationError("aggregation needs at least one site")
    if k < 2:
        raise ValidationError("k must be at least 2")
    for r in regions:
        if len(r.records) != r.class_table.total:
            raise ValidationError(
                f"region {r.region_id!r} carries {len(r.records)} records but its table counts {r.class_table.total}"
            )
    if diagram is None:
        diagram = build_voronoi(sites, data_extent(regions))
    cell = diagram.nearest_many([(r.location.x, r.location.y) for r in regions]) if regions else []
    mapping = {r.region_id: diagram.source_indices[int(c)] for r, c in zip(regions, cell)}
    result = assemble(regions, sites, mapping, k, list(diagram.warnings))
    result.diagram = diagram
    return result


def assemble(
    regions: Sequence[InitialRegion],
    sites: Sequence[Point],
    mapping: dict[str, int],
    k: int,
    warnings: list[str] | None = None,
) -> AggregationResult:
    """Merge tables and suppress classes below k for a given region -> site mapping."""
    members: list[list[InitialRegion]] = [[] for _ in sites]
    for r in regions:
        try:
            aid = mapping[r.region_id]
        except KeyError:
            raise ValidationError(f"region {r.region_id!r} has no aggregated region") from None
        if not 0 <= aid < len(sites):
            raise ValidationError(f"region {r.region_id!r} maps to unknown aggregated id {aid}")
        members[aid].append(r)

    agg = [
        AggregatedRegion(
            aggregated_id=i,
            site=sites[i],
            member_region_ids=tuple(m.region_id for m in group),
            merged_table=merge_tables(m.class_table for m in group),
        )
        for i, group in enumerate(members)
    ]

    suppressed = [
        SuppressedClass(a.aggregated_id, key, n)
        for a in agg
        for key, n in sorted(a.merged_table.items())
        if n < k
    ]
    dropped = {(s.aggregated_id, s.key) for s in suppressed}

    published: list[PublishedRecord] = []
    total = 0
    for r in regions:
        aid = mapping[r.region_id]
        for rec in r.records:
            total += 1
            if (aid, rec.values) not in dropped:
                published.append(PublishedRecord(rec.record_id, aid, rec.values, r.region_id))

    warnings = list(warnings or [])
    empty = [a.aggregated_id for a in agg if a.is_empty]
    if empty:
        warnings.append(f"{len(empty)} aggregated region(s) received no initial regions: {empty}")
    ordered = {r.region_id: mapping[r.region_id] for r in regions}
    return AggregationResult(agg, ordered, suppressed, published, total, k, warnings=warnings)


def verify_k_anonymity(published: AggregationResult | Iterable[PublishedRecord], k: int) -> bool:
    """Audit rebuilt from the published records alone."""
    records = published.published_records if isinstance(published, AggregationResult) else published
    counts = Counter((rec.aggregated_id, tuple(rec.values)) for rec in records)
    return all(n >= k for n in counts.values())
