"""Site count -> site placement -> aggregation -> metrics."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Sequence

from geoanon import adc, balanced
from geoanon.aggregation import AggregationResult, aggregate, data_extent
from geoanon.geometry import build_voronoi
from geoanon.metrics import MetricsReport, evaluate
from geoanon.model import (
    InitialRegion,
    PipelineConfig,
    Point,
    QuasiIdentifierSchema,
    ValidationError,
    merge_tables,
)
from geoanon.sitecount import SiteCountResult, approximate_sites

log = logging.getLogger(__name__)

STAGES = ("site_count", "placement", "aggregation", "metrics")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunManifest:
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    stage_timings_ms: dict[str, float] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    status: str = "ok"
    failed_stage: str | None = None
    error: str | None = None
    site_count: SiteCountResult | None = None
    adc: dict | None = None

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "status": self.status,
            "failed_stage": self.failed_stage,
            "error": self.error,
            "config": self.config,
            "inputs": self.inputs,
            "site_count": None
            if self.site_count is None
            else {
                "model_input_value": self.site_count.model_input_value,
                "cutoff": None if self.site_count.cutoff != self.site_count.cutoff else self.site_count.cutoff,
                "site_count": self.site_count.site_count,
            },
            "adc": self.adc,
            "warnings": list(self.warnings),
            "outputs": list(self.outputs),
        }
        if include_timings:
            out["stage_timings_ms"] = dict(self.stage_timings_ms)
        return out


@contextmanager
def _stage(name: str, manifest: RunManifest):
    t0 = time.perf_counter()
    try:
        yield
    except Exception as exc:
        manifest.status = "failed"
        manifest.failed_stage = name
        manifest.error = str(exc)
        raise StageError(name, exc) from exc
    finally:
        manifest.stage_timings_ms[name] = (time.perf_counter() - t0) * 1000.0


def place_sites(
    regions: Sequence[InitialRegion], count: int, config: PipelineConfig, manifest: RunManifest | None = None
) -> list[Point]:
    points = balanced.weighted_points(regions)
    if config.placement_approach == "balanced" or config.adc_seed_method == "balanced":
        if sum(p.population for p in points) > 0:
            seeds = balanced.balanced_sites(points, count)
        else:
            # nothing to balance: spread sites over the region points evenly by index
            step = len(points) / count
            seeds = [Point(points[int(i * step)].x, points[int(i * step)].y) for i in range(count)]
    else:
        seeds = []
    if config.placement_approach == "balanced":
        return seeds
    data = adc.RegionClassMatrix(regions)
    if config.adc_seed_method == "random":
        seeds = adc.random_seeds(data, count, config.rng_seed)
    result = adc.run_adc(seeds, data, config.k, config.adc_max_committed_moves)
    if manifest is not None:
        manifest.adc = {
            "committed_moves": result.committed_moves,
            "cap_hit": result.cap_hit,
            "stop_reason": result.reason,
            "objective_start": result.objective_trace[0],
            "objective_end": result.objective_trace[-1],
        }
        if result.cap_hit:
            manifest.warnings.append(f"ADC stopped at the move cap of {config.adc_max_committed_moves}")
    return result.centers


def run_pipeline(
    config: PipelineConfig,
    regions: Sequence[InitialRegion],
    schema: QuasiIdentifierSchema,
    manifest: RunManifest | None = None,
) -> tuple[AggregationResult, MetricsReport, RunManifest]:
    if manifest is None:
        manifest = RunManifest(config=config.to_dict())
    if not regions:
        manifest.status, manifest.failed_stage = "failed", "site_count"
        raise StageError("site_count", ValidationError("no initial regions"))
    config.validate_against(len(regions))
    t_start = time.perf_counter()

    with _stage("site_count", manifest):
        table = merge_tables(r.class_table for r in regions)
        if config.site_count_approach != "fixed" and table.total == 0:
            raise ValidationError("cannot approximate a site count for an empty data set")
        sc = approximate_sites(table, schema, len(regions), config)
        manifest.site_count = sc
        log.info("site count %d (input %.6g, cutoff %.6g)", sc.site_count, sc.model_input_value, sc.cutoff)

    with _stage("placement", manifest):
        sites = place_sites(regions, sc.site_count, config, manifest)

    with _stage("aggregation", manifest):
        diagram = build_voronoi(sites, data_extent(regions))
        result = aggregate(regions, sites, config.k, diagram)
        manifest.warnings.extend(result.warnings)

    with _stage("metrics", manifest):
        report = evaluate(regions, result, config.k, config.classical_discernibility)

    manifest.stage_timings_ms["total"] = (time.perf_counter() - t_start) * 1000.0
    result.timing = dict(manifest.stage_timings_ms)
    report.runtime_ms = dict(manifest.stage_timings_ms)
    return result, report, manifest
