"""Voronoi-guided geographic aggregation for k-anonymous microdata release."""

from geoanon.aggregation import AggregationResult, aggregate, verify_k_anonymity
from geoanon.geometry import VoronoiDiagram, build_voronoi, nearest_site, neighborhood, polygon_centroid
from geoanon.metrics import MetricsReport, compactness, discernibility, non_uniform_entropy
from geoanon.model import (
    GAPS_PRESETS,
    EquivalenceClassTable,
    GapsModel,
    InitialRegion,
    PipelineConfig,
    Point,
    QuasiIdentifierSchema,
    Record,
    ValidationError,
    build_class_table,
    merge_tables,
)
from geoanon.pipeline import run_pipeline

__all__ = [
    "AggregationResult",
    "EquivalenceClassTable",
    "GAPS_PRESETS",
    "GapsModel",
    "InitialRegion",
    "MetricsReport",
    "PipelineConfig",
    "Point",
    "QuasiIdentifierSchema",
    "Record",
    "ValidationError",
    "VoronoiDiagram",
    "aggregate",
    "build_class_table",
    "build_voronoi",
    "compactness",
    "discernibility",
    "merge_tables",
    "nearest_site",
    "neighborhood",
    "non_uniform_entropy",
    "polygon_centroid",
    "run_pipeline",
    "verify_k_anonymity",
]
