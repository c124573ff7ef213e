"""Synthetic microdata: randomly populated regions filled with records whose
attribute values are drawn independently from per-stratum distributions."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from geoanon.model import Point, QuasiIdentifierSchema, Record, ValidationError

POPULATION_RANGE = (400, 700)


@dataclass(frozen=True)
class DistributionSpec:
    schema: QuasiIdentifierSchema
    strata: Mapping[str, Mapping[str, tuple[float, ...]]]

    def __post_init__(self) -> None:
        for stratum, dists in self.strata.items():
            for attr in self.schema.attributes:
                if attr.name not in dists:
                    raise ValidationError(f"stratum {stratum!r} has no distribution for attribute {attr.name!r}")
                probs = np.asarray(dists[attr.name], dtype=float)
                if probs.shape != (len(attr.domain),):
                    raise ValidationError(
                        f"stratum {stratum!r}, attribute {attr.name!r}: expected {len(attr.domain)} "
                        f"probabilities, got {probs.size}"
                    )
                if (probs < 0).any():
                    raise ValidationError(f"stratum {stratum!r}, attribute {attr.name!r}: negative probability")
                if abs(probs.sum() - 1.0) > 1e-9:
                    raise ValidationError(
                        f"stratum {stratum!r}, attribute {attr.name!r}: probabilities sum to {probs.sum()!r}"
                    )


@dataclass(frozen=True)
class RegionTemplate:
    region_id: str
    location: Point
    stratum: str
    population: int | None = None


@dataclass(frozen=True)
class GeneratedRegion:
    region_id: str
    location: Point
    stratum: str
    population: int


def region_rng(rng_seed: int, region_id: str) -> np.random.Generator:
    """Independent stream per region, derived from (seed, region id) only."""
    digest = hashlib.sha256(region_id.encode("utf-8")).digest()
    words = np.frombuffer(digest, dtype="<u4").tolist()
    seed = int(rng_seed)
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, *words]))


def generate(
    templates: Sequence[RegionTemplate], spec: DistributionSpec, rng_seed: int
) -> tuple[list[GeneratedRegion], list[Record]]:
    seen: set[str] = set()
    for t in templates:
        if t.stratum not in spec.strata:
            raise ValidationError(f"region {t.region_id!r} uses unknown stratum {t.stratum!r}")
        if t.region_id in seen:
            raise ValidationError(f"duplicate region id {t.region_id!r}")
        if t.population is not None and t.population < 0:
            raise ValidationError(f"region {t.region_id!r} has a negative population")
        seen.add(t.region_id)

    lo, hi = POPULATION_RANGE
    regions: list[GeneratedRegion] = []
    records: list[Record] = []
    for t in templates:
        rng = region_rng(rng_seed, t.region_id)
        pop = int(rng.integers(lo, hi, endpoint=True)) if t.population is None else t.population
        dists = spec.strata[t.stratum]
        columns = []
        for attr in spec.schema.attributes:
            idx = rng.choice(len(attr.domain), size=pop, p=np.asarray(dists[attr.name], dtype=float))
            columns.append([attr.domain[i] for i in idx])
        for i, values in enumerate(zip(*columns) if columns else [()] * pop):
            records.append(Record(f"{t.region_id}-{i:04d}", t.region_id, tuple(values)))
        regions.append(GeneratedRegion(t.region_id, t.location, t.stratum, pop))
    return regions, records


def uniform_spec(schema: QuasiIdentifierSchema, strata: Sequence[str] = ("default",)) -> DistributionSpec:
    """Equal probability over every domain, for quick fixtures."""
    return DistributionSpec(
        schema,
        {s: {a.name: tuple([1.0 / len(a.domain)] * len(a.domain)) for a in schema.attributes} for s in strata},
    )


def grid_templates(nx: int, ny: int, stratum: str = "default", spacing: float = 1.0) -> list[RegionTemplate]:
    return [
        RegionTemplate(f"r{j:03d}{i:03d}", Point(i * spacing, j * spacing), stratum)
        for j in range(ny)
        for i in range(nx)
    ]
