"""Quality measurements for an aggregation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

from geoanon.aggregation import AggregationResult
from geoanon.model import InitialRegion


@dataclass
class MetricsReport:
    suppression_count: int
    suppression_fraction: float
    compactness: float
    discernibility: float
    non_uniform_entropy: float
    global_anonymity: int
    site_count: int
    runtime_ms: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_runtime: bool = True) -> dict:
        out = asdict(self)
        if not include_runtime:
            out.pop("runtime_ms")
        return out


def compactness(regions: Sequence[InitialRegion], result: AggregationResult) -> float:
    """Sum of distances from each region point to its aggregated region's site (unweighted)."""
    sites = result.sites
    total = 0.0
    for r in regions:
        s = sites[result.region_mapping[r.region_id]]
        total += math.hypot(r.location.x - s.x, r.location.y - s.y)
    return total


def published_classes(result: AggregationResult) -> Counter:
    return Counter((rec.aggregated_id, rec.values) for rec in result.published_records)


def discernibility(result: AggregationResult, k: int | None = None, classical: bool = False) -> float:
    """Sum of squared class sizes over classes of size >= k.

    Classes are (aggregated region, key) pairs over the published records.
    With ``classical`` every suppressed record is additionally charged the
    input size, as in the usual discernibility metric.
    """
    k = result.k if k is None else k
    dm = float(sum(n * n for n in published_classes(result).values() if n >= k))
    if classical:
        dm += float(result.suppressed_count) * result.input_record_count
    return dm


def non_uniform_entropy(result: AggregationResult) -> float:
    """-sum log2 Pr(original region | aggregated region) over published records, in bits."""
    by_original = Counter(rec.source_region_id for rec in result.published_records)
    by_aggregate = Counter(rec.aggregated_id for rec in result.published_records)
    total = 0.0
    for rec in result.published_records:
        total -= math.log2(by_original[rec.source_region_id] / by_aggregate[rec.aggregated_id])
    return max(total, 0.0)


def global_anonymity(result: AggregationResult) -> int:
    counts = published_classes(result)
    return min(counts.values()) if counts else 0


def evaluate(
    regions: Sequence[InitialRegion],
    result: AggregationResult,
    k: int | None = None,
    classical_discernibility: bool = False,
) -> MetricsReport:
    k = result.k if k is None else k
    n = result.input_record_count
    suppressed = result.suppressed_count
    return MetricsReport(
        suppression_count=suppressed,
        suppression_fraction=suppressed / n if n else 0.0,
        compactness=compactness(regions, result),
        discernibility=discernibility(result, k, classical_discernibility),
        non_uniform_entropy=non_uniform_entropy(result),
        global_anonymity=global_anonymity(result),
        site_count=len(result.regions),
        runtime_ms=dict(result.timing),
    )
