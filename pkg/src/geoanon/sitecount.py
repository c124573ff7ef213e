"""Number of aggregated regions from a dynamic GAPS population cutoff.

The cutoff is read as the desirable average population of an aggregated
region, so the site count is the total population divided by the cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from geoanon.model import (
    EquivalenceClassTable,
    GapsModel,
    PipelineConfig,
    QuasiIdentifierSchema,
    ValidationError,
)

_LOG = {"e": math.log, "2": math.log2, "10": math.log10}


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class SiteCountResult:
    model_input_value: float
    cutoff: float
    site_count: int


def dataset_entropy(table: EquivalenceClassTable, log_base: str = "e") -> float:
    """Entropy of the class-size distribution of the whole data set.

    Summed by class size: each of the t_k classes of size k contributes
    -(k/N) log(k/N).
    """
    if not table.total:
        raise ValidationError("entropy of an empty table is undefined")
    try:
        log = _LOG[str(log_base)]
    except KeyError:
        raise ValidationError(f"unsupported log base {log_base!r}") from None
    n = table.total
    h = 0.0
    for size, count in sorted(table.size_histogram().items()):
        frac = size / n
        h -= count * frac * log(frac)
    # the single-class case can come out as -0.0
    return max(h, 0.0)


def max_combinations(schema: QuasiIdentifierSchema) -> float:
    return float(math.prod(len(a.domain) for a in schema.attributes))


def gaps_cutoff(value: float, model: GapsModel) -> float:
    if not value > 0:
        raise ValidationError(f"GAPS model input must be positive, got {value}")
    return model.multiplier * value**model.exponent


def site_count(total_population: int, cutoff: float, region_count: int) -> int:
    if total_population <= 0 or not cutoff > 0:
        raise ValidationError("site count needs a positive population and cutoff")
    return max(1, min(region_count, round_half_up(total_population / cutoff)))


def approximate_sites(
    table: EquivalenceClassTable,
    schema: QuasiIdentifierSchema,
    region_count: int,
    config: PipelineConfig,
) -> SiteCountResult:
    """Run the configured site-count approach end to end."""
    if config.site_count_approach == "fixed":
        n = config.fixed_site_count
        if not 1 <= n <= region_count:
            raise ValidationError(f"fixed site count {n} must lie in [1, {region_count}]")
        return SiteCountResult(float(n), float("nan"), n)
    if config.site_count_approach == "entropy":
        value = dataset_entropy(table, config.log_base)
    else:
        value = max_combinations(schema)
    if value == 0.0:
        # one class only: the cutoff tends to 0, i.e. as many sites as regions
        return SiteCountResult(0.0, 0.0, region_count)
    cutoff = gaps_cutoff(value, config.gaps)
    return SiteCountResult(value, cutoff, site_count(table.total, cutoff, region_count))
