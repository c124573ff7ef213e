"""Command line entry point: ``geoanon {anonymize,generate,evaluate,render}``.

Exit codes: 0 success, 1 validation error, 2 runtime failure,
3 success with warnings.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from geoanon import io
from geoanon.aggregation import AggregationResult, assemble, data_extent, verify_k_anonymity
from geoanon.datagen import RegionTemplate, generate
from geoanon.geometry import build_voronoi
from geoanon.metrics import MetricsReport, evaluate
from geoanon.model import (
    GAPS_PRESETS,
    DegenerateInputError,
    GapsModel,
    PipelineConfig,
    ValidationError,
)
from geoanon.pipeline import RunManifest, StageError, run_pipeline
from geoanon.render import render_svg

log = logging.getLogger("geoanon")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_WARNINGS = 0, 1, 2, 3


# ---------------------------------------------------------------- config


def parse_site_count(text: str) -> tuple[str, int | None]:
    if text in ("entropy", "maxcombs"):
        return text, None
    if text.startswith("fixed:"):
        try:
            return "fixed", int(text.split(":", 1)[1])
        except ValueError:
            pass
    raise ValidationError(f"--site-count must be entropy, maxcombs or fixed:<n>, got {text!r}")


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Config file values, overridden by any flag given on the command line."""
    base: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            try:
                base = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{Path(args.config).name}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        unknown = set(base) - {
            "k", "site_count", "placement", "adc_seed", "gaps_preset", "gaps_multiplier",
            "gaps_exponent", "log_base", "seed", "max_moves", "classical_discernibility",
        }
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")

    def pick(flag: str, key: str, default):
        v = getattr(args, flag, None)
        if v is not None:
            return v
        return base.get(key, default)

    approach, fixed = parse_site_count(str(pick("site_count", "site_count", "entropy")))
    multiplier = pick("gaps_multiplier", "gaps_multiplier", None)
    exponent = pick("gaps_exponent", "gaps_exponent", None)
    preset = pick("gaps_preset", "gaps_preset", None)
    if args.gaps_preset is not None or (multiplier is None and exponent is None):
        gaps: GapsModel | str = preset or "western"
    else:
        if multiplier is None or exponent is None:
            raise ValidationError("--gaps-multiplier and --gaps-exponent must be given together")
        gaps = GapsModel(float(multiplier), float(exponent))
    return PipelineConfig(
        k=int(pick("k", "k", 5)),
        site_count_approach=approach,
        fixed_site_count=fixed,
        placement_approach=pick("placement", "placement", "balanced"),
        adc_seed_method=pick("adc_seed", "adc_seed", "balanced"),
        gaps_model=gaps,
        log_base=str(pick("log_base", "log_base", "e")),
        rng_seed=int(pick("seed", "seed", 0)),
        adc_max_committed_moves=int(pick("max_moves", "max_moves", 1000)),
        classical_discernibility=bool(pick("classical_discernibility", "classical_discernibility", False)),
    )


# ---------------------------------------------------------------- reports


def report_dict(report: MetricsReport, result: AggregationResult, k: int) -> dict:
    published = {}
    for rec in result.published_records:
        published[rec.aggregated_id] = published.get(rec.aggregated_id, 0) + 1
    return {
        "k": k,
        "input_records": result.input_record_count,
        "published_records": len(result.published_records),
        "k_anonymous": verify_k_anonymity(result, k),
        "metrics": report.to_dict(include_runtime=False),
        "aggregated_regions": [
            {
                "aggregated_id": a.aggregated_id,
                "site": [a.site.x, a.site.y],
                "member_count": len(a.member_region_ids),
                "population": a.merged_table.total,
                "published": published.get(a.aggregated_id, 0),
                "anonymity_level": a.anonymity_level,
                "suppressed": sum(s.cardinality for s in result.suppressed if s.aggregated_id == a.aggregated_id),
            }
            for a in result.regions
        ],
    }


# ---------------------------------------------------------------- verbs


def cmd_anonymize(args: argparse.Namespace) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config={})
    manifest.inputs = {
        "regions": args.regions,
        "records": args.records,
        "schema": args.schema,
    }
    try:
        config = build_config(args)
        manifest.config = config.to_dict()
        manifest.inputs.update(
            {
                f"{name}_sha256": io.sha256_file(path)
                for name, path in (("regions", args.regions), ("records", args.records), ("schema", args.schema))
            }
        )
        regions, _, schema = io.load_inputs(args.regions, args.records, args.schema)
        config.validate_against(len(regions))
    except (ValidationError, OSError) as exc:
        manifest.status, manifest.failed_stage, manifest.error = "failed", "load", str(exc)
        io.write_json(out / "manifest.json", manifest.to_dict())
        log.error("%s", exc)
        return EXIT_INVALID

    try:
        result, report, manifest = run_pipeline(config, regions, schema, manifest)
    except StageError as exc:
        io.write_json(out / "manifest.json", manifest.to_dict())
        log.error("%s", exc)
        return EXIT_INVALID if isinstance(exc.cause, ValidationError) else EXIT_RUNTIME

    files = {
        "published_records.csv": lambda p: io.write_published(p, result, schema),
        "region_mapping.csv": lambda p: io.write_region_mapping(p, result),
        "aggregated_regions.csv": lambda p: io.write_aggregated_regions(p, result),
        "report.json": lambda p: io.write_json(p, report_dict(report, result, config.k)),
        "timings.json": lambda p: io.write_json(p, {"stage_timings_ms": manifest.stage_timings_ms}),
    }
    if args.map:
        files["map.svg"] = lambda p: Path(p).write_text(
            render_svg(regions, result.region_mapping, result.sites, result.diagram), encoding="utf-8"
        )
    for name, write in files.items():
        write(out / name)
        manifest.outputs.append(name)
    manifest.outputs.append("manifest.json")
    io.write_json(out / "manifest.json", manifest.to_dict())

    m = report
    print(
        f"sites={m.site_count} suppressed={m.suppression_count} ({m.suppression_fraction:.2%}) "
        f"compactness={m.compactness:.6g} discernibility={m.discernibility:.6g} "
        f"nue={m.non_uniform_entropy:.6g} bits global_anonymity={m.global_anonymity}"
    )
    for w in manifest.warnings:
        log.warning("%s", w)
    return EXIT_WARNINGS if manifest.warnings else EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = io.load_distribution(args.distribution)
    rows = io.read_region_rows(args.templates)
    templates = [RegionTemplate(r.region_id, r.location, r.stratum, getattr(r, "population", None)) for r in rows]
    regions, records = generate(templates, spec, args.seed)
    io.write_regions(out / "regions.csv", regions)
    io.write_records(out / "records.csv", records, spec.schema)
    io.write_schema(out / "schema.json", spec.schema)
    print(f"generated {len(regions)} regions, {len(records)} records")
    return EXIT_OK


def _load_aggregation(args: argparse.Namespace):
    regions, _, schema = io.load_inputs(args.regions, args.records, args.schema)
    sites, mapping = io.read_aggregation(args.aggregation)
    return regions, schema, sites, mapping


def cmd_evaluate(args: argparse.Namespace) -> int:
    regions, schema, sites, mapping = _load_aggregation(args)
    result = assemble(regions, sites, mapping, args.k)
    report = evaluate(regions, result, args.k, args.classical_discernibility)
    data = report_dict(report, result, args.k)
    text = json.dumps(data, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK if data["k_anonymous"] else EXIT_WARNINGS


def cmd_render(args: argparse.Namespace) -> int:
    rows = io.read_region_rows(args.regions)
    sites, mapping = io.read_aggregation(args.aggregation)
    missing = [r.region_id for r in rows if r.region_id not in mapping]
    if missing:
        raise ValidationError(f"regions missing from the aggregation: {missing[:5]}")
    diagram = build_voronoi(sites, data_extent(rows)) if args.cells else None
    Path(args.out).write_text(render_svg(rows, mapping, sites, diagram), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoanon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("anonymize", help="aggregate regions until the data set is k-anonymous")
    p.add_argument("--regions", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--config", help="JSON file with pipeline settings; flags override it")
    p.add_argument("--k", type=int)
    p.add_argument("--site-count", dest="site_count", help="entropy | maxcombs | fixed:<n>")
    p.add_argument("--placement", choices=("balanced", "adc"))
    p.add_argument("--adc-seed", dest="adc_seed", choices=("balanced", "random"))
    p.add_argument("--gaps-preset", dest="gaps_preset", choices=sorted(GAPS_PRESETS))
    p.add_argument("--gaps-multiplier", dest="gaps_multiplier", type=float)
    p.add_argument("--gaps-exponent", dest="gaps_exponent", type=float)
    p.add_argument("--log-base", dest="log_base", choices=("e", "2", "10"))
    p.add_argument("--seed", type=int)
    p.add_argument("--max-moves", dest="max_moves", type=int)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.add_argument("--map", action="store_true", help="also write map.svg")
    p.add_argument(
        "--classical-discernibility",
        dest="classical_discernibility",
        action="store_const",
        const=True,
        default=None,
    )
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("generate", help="synthesize regions and records")
    p.add_argument("--templates", required=True, help="region_id,x,y,stratum[,population] CSV")
    p.add_argument("--distribution", required=True, help="schema plus per-stratum probabilities (JSON)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="metrics for an existing aggregation")
    p.add_argument("--regions", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--aggregation", required=True, help="aggregated_regions.csv from anonymize")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--classical-discernibility", dest="classical_discernibility", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("render", help="draw an aggregation as SVG")
    p.add_argument("--regions", required=True)
    p.add_argument("--aggregation", required=True)
    p.add_argument("--cells", action="store_true", help="draw Voronoi cell edges")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ValidationError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    except (DegenerateInputError, RuntimeError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
