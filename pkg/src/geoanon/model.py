"""Domain types shared by every pipeline stage.

Categorical values are opaque labels: there is no ordering and no
generalization hierarchy. Only the geographic identifier is coarsened, and
that happens through region aggregation, not through the schema.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

ClassKey = tuple[str, ...]


class ValidationError(ValueError):
    """Input does not satisfy a documented contract."""


class DegenerateInputError(ValueError):
    """Geometric input cannot produce the requested structure."""


@dataclass(frozen=True)
class Attribute:
    name: str
    domain: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(self.domain))
        if not self.name:
            raise ValidationError("attribute name must be non-empty")
        if not self.domain:
            raise ValidationError(f"attribute {self.name!r} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ValidationError(f"attribute {self.name!r} has duplicate category labels")


@dataclass(frozen=True)
class QuasiIdentifierSchema:
    attributes: tuple[Attribute, ...]
    geographic_attribute_name: str = "region"

    def __post_init__(self) -> None:
        object.__setattr__(self, "attributes", tuple(self.attributes))
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ValidationError("attribute names must be unique")
        if self.geographic_attribute_name in names:
            raise ValidationError(
                f"geographic attribute {self.geographic_attribute_name!r} must not be "
                "listed among the categorical quasi-identifiers"
            )

    @classmethod
    def from_domains(
        cls, domains: Mapping[str, Sequence[str]], geographic_attribute_name: str = "region"
    ) -> QuasiIdentifierSchema:
        return cls(
            tuple(Attribute(name, tuple(dom)) for name, dom in domains.items()),
            geographic_attribute_name,
        )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def __len__(self) -> int:
        return len(self.attributes)

    def validate_values(self, values: Sequence[str], record_id: str = "?") -> None:
        if len(values) != len(self.attributes):
            raise ValidationError(
                f"record {record_id!r}: expected {len(self.attributes)} values, got {len(values)}"
            )
        for attr, value in zip(self.attributes, values):
            if value not in attr.domain:
                raise ValidationError(
                    f"record {record_id!r}: value {value!r} is not in the domain of attribute {attr.name!r}"
                )


@dataclass(frozen=True)
class Record:
    record_id: str
    region_id: str
    values: ClassKey

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))


class EquivalenceClassTable(Mapping[ClassKey, int]):
    """Immutable multiset of equivalence-class keys.

    Behaves as a read-only mapping from key to cardinality. Zero-count keys
    are never stored.
    """

    __slots__ = ("_entries", "_total")

    def __init__(self, entries: Mapping[ClassKey, int] | Iterable[tuple[ClassKey, int]] = ()):
        counts: dict[ClassKey, int] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for key, n in items:
            if n < 0:
                raise ValidationError(f"negative cardinality for class {key!r}")
            if n:
                counts[tuple(key)] = counts.get(tuple(key), 0) + int(n)
        self._entries = MappingProxyType(counts)
        self._total = sum(counts.values())

    @property
    def entries(self) -> Mapping[ClassKey, int]:
        return self._entries

    @property
    def total(self) -> int:
        return self._total

    def __getitem__(self, key: ClassKey) -> int:
        return self._entries[key]

    def __iter__(self) -> Iterator[ClassKey]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, EquivalenceClassTable):
            return dict(self._entries) == dict(other._entries)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        return f"EquivalenceClassTable({dict(self._entries)!r}, total={self._total})"

    def min_cardinality(self) -> int | None:
        """Anonymity level of the table; ``None`` when empty."""
        return min(self._entries.values()) if self._entries else None

    def bottleneck_keys(self) -> list[ClassKey]:
        """Keys sitting at the minimum cardinality, in lexicographic order."""
        low = self.min_cardinality()
        if low is None:
            return []
        return sorted(k for k, n in self._entries.items() if n == low)

    def size_histogram(self) -> dict[int, int]:
        """Map class size -> number of classes of that size."""
        return dict(Counter(self._entries.values()))


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y


@dataclass(frozen=True)
class InitialRegion:
    region_id: str
    location: Point
    population: int
    class_table: EquivalenceClassTable = field(default_factory=EquivalenceClassTable)
    records: tuple[Record, ...] = ()
    stratum: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if self.population < 0:
            raise ValidationError(f"region {self.region_id!r} has negative population")


@dataclass(frozen=True)
class GapsModel:
    """Cutoff = multiplier * value ** exponent."""

    multiplier: float
    exponent: float

    def __post_init__(self) -> None:
        if not self.multiplier > 0:
            raise ValidationError("GAPS multiplier must be positive")
        if not self.exponent > 0:
            raise ValidationError("GAPS exponent must be positive")


# Regional presets; the entropy and max-combinations fits share constants.
GAPS_PRESETS: dict[str, GapsModel] = {
    "western": GapsModel(1588.0, 0.42),
    "central": GapsModel(1436.0, 0.43),
    "eastern": GapsModel(1978.0, 0.304),
}

SITE_COUNT_APPROACHES = ("entropy", "maxcombs", "fixed")
PLACEMENT_APPROACHES = ("balanced", "adc")
ADC_SEED_METHODS = ("balanced", "random")
LOG_BASES = ("e", "2", "10")


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 5
    site_count_approach: str = "entropy"
    fixed_site_count: int | None = None
    placement_approach: str = "balanced"
    adc_seed_method: str = "balanced"
    gaps_model: GapsModel | str = "western"
    log_base: str = "e"
    rng_seed: int = 0
    adc_max_committed_moves: int = 1000
    classical_discernibility: bool = False

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValidationError("k must be at least 2")
        if self.site_count_approach not in SITE_COUNT_APPROACHES:
            raise ValidationError(f"unknown site-count approach {self.site_count_approach!r}")
        if self.site_count_approach == "fixed":
            if self.fixed_site_count is None or self.fixed_site_count < 1:
                raise ValidationError("fixed site count requires n >= 1")
        if self.placement_approach not in PLACEMENT_APPROACHES:
            raise ValidationError(f"unknown placement approach {self.placement_approach!r}")
        if self.adc_seed_method not in ADC_SEED_METHODS:
            raise ValidationError(f"unknown ADC seed method {self.adc_seed_method!r}")
        if isinstance(self.gaps_model, str) and self.gaps_model not in GAPS_PRESETS:
            raise ValidationError(f"unknown GAPS preset {self.gaps_model!r}")
        if self.log_base not in LOG_BASES:
            raise ValidationError(f"log base must be one of {LOG_BASES}")
        if not 0 <= self.rng_seed < 2**64:
            raise ValidationError("rng_seed must be an unsigned 64-bit integer")
        if self.adc_max_committed_moves < 0:
            raise ValidationError("adc_max_committed_moves must be non-negative")

    @property
    def gaps(self) -> GapsModel:
        if isinstance(self.gaps_model, str):
            return GAPS_PRESETS[self.gaps_model]
        return self.gaps_model

    def validate_against(self, region_count: int) -> None:
        if self.site_count_approach == "fixed" and self.fixed_site_count > region_count:
            raise ValidationError(
                f"fixed site count {self.fixed_site_count} exceeds the {region_count} initial regions"
            )

    def to_dict(self) -> dict:
        gaps = self.gaps
        return {
            "k": self.k,
            "site_count": (
                f"fixed:{self.fixed_site_count}"
                if self.site_count_approach == "fixed"
                else self.site_count_approach
            ),
            "placement": self.placement_approach,
            "adc_seed": self.adc_seed_method,
            "gaps_preset": self.gaps_model if isinstance(self.gaps_model, str) else None,
            "gaps_multiplier": gaps.multiplier,
            "gaps_exponent": gaps.exponent,
            "log_base": self.log_base,
            "seed": self.rng_seed,
            "max_moves": self.adc_max_committed_moves,
            "classical_discernibility": self.classical_discernibility,
        }


def build_class_table(records: Iterable[Record], schema: QuasiIdentifierSchema) -> EquivalenceClassTable:
    counts: Counter[ClassKey] = Counter()
    for rec in records:
        schema.validate_values(rec.values, rec.record_id)
        counts[rec.values] += 1
    return EquivalenceClassTable(counts)


def merge_tables(tables: Iterable[EquivalenceClassTable]) -> EquivalenceClassTable:
    counts: Counter[ClassKey] = Counter()
    for table in tables:
        counts.update(table.entries)
    return EquivalenceClassTable(counts)


def make_regions(
    locations: Mapping[str, Point | tuple[float, float]],
    records: Iterable[Record],
    schema: QuasiIdentifierSchema,
    strata: Mapping[str, str] | None = None,
) -> list[InitialRegion]:
    """Group records by region and attach class tables, preserving location order."""
    grouped: dict[str, list[Record]] = {rid: [] for rid in locations}
    for rec in records:
        if rec.region_id not in grouped:
            raise ValidationError(f"record {rec.record_id!r} references unknown region {rec.region_id!r}")
        grouped[rec.region_id].append(rec)
    regions = []
    for rid, loc in locations.items():
        recs = grouped[rid]
        pt = loc if isinstance(loc, Point) else Point(float(loc[0]), float(loc[1]))
        regions.append(
            InitialRegion(
                region_id=rid,
                location=pt,
                population=len(recs),
                class_table=build_class_table(recs, schema),
                records=tuple(recs),
                stratum=(strata or {}).get(rid, ""),
            )
        )
    return regions
