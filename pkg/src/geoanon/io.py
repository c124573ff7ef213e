"""Readers and writers for the plain-text exchange formats.

regions.csv   region_id,x,y,stratum[,population]
records.csv   record_id,region_id,<attribute>,...
schema.json   {"geographic_attribute": ..., "attributes": [{"name": ..., "domain": [...]}]}
dist.json     schema.json plus {"strata": {stratum: {attribute: [p, ...]}}}

All text is UTF-8. Diagnostics carry the file name and 1-based line number.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Sequence

from geoanon.aggregation import AggregationResult
from geoanon.datagen import DistributionSpec, GeneratedRegion, RegionTemplate
from geoanon.model import (
    Attribute,
    InitialRegion,
    Point,
    QuasiIdentifierSchema,
    Record,
    ValidationError,
    build_class_table,
)

REGION_COLUMNS = ("region_id", "x", "y", "stratum")


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _fail(path: Path, line: int, msg: str) -> ValidationError:
    return ValidationError(f"{path.name}:{line}: {msg}")


# ---------------------------------------------------------------- schema


def schema_from_dict(data: dict) -> QuasiIdentifierSchema:
    try:
        attrs = tuple(Attribute(str(a["name"]), tuple(str(c) for c in a["domain"])) for a in data["attributes"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed schema: missing {exc}") from None
    return QuasiIdentifierSchema(attrs, str(data.get("geographic_attribute", "region")))


def schema_to_dict(schema: QuasiIdentifierSchema) -> dict:
    return {
        "geographic_attribute": schema.geographic_attribute_name,
        "attributes": [{"name": a.name, "domain": list(a.domain)} for a in schema.attributes],
    }


def _read_json(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise _fail(path, exc.lineno, f"invalid JSON: {exc.msg}") from None


def load_schema(path: str | Path) -> QuasiIdentifierSchema:
    return schema_from_dict(_read_json(Path(path)))


def write_json(path: str | Path, data) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=False, allow_nan=False)
        fh.write("\n")


def write_schema(path: str | Path, schema: QuasiIdentifierSchema) -> None:
    write_json(path, schema_to_dict(schema))


def load_distribution(path: str | Path) -> DistributionSpec:
    data = _read_json(Path(path))
    schema = schema_from_dict(data)
    strata = data.get("strata")
    if not isinstance(strata, dict) or not strata:
        raise ValidationError(f"{Path(path).name}: distribution file needs a non-empty 'strata' object")
    return DistributionSpec(
        schema, {s: {a: tuple(float(p) for p in probs) for a, probs in d.items()} for s, d in strata.items()}
    )


def write_distribution(path: str | Path, spec: DistributionSpec) -> None:
    data = schema_to_dict(spec.schema)
    data["strata"] = {s: {a: list(p) for a, p in d.items()} for s, d in spec.strata.items()}
    write_json(path, data)


# ---------------------------------------------------------------- csv


def _rows(path: Path):
    """Yield (line number, row) after the header; the header is returned first."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise _fail(path, 1, "file is empty (a header row is required)") from None
        yield 1, [h.strip() for h in header]
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            yield reader.line_num, row


def _float(path: Path, line: int, name: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise _fail(path, line, f"{name} {text!r} is not a number") from None
    if not math.isfinite(v):
        raise _fail(path, line, f"{name} {text!r} is not finite")
    return v


def read_region_rows(path: str | Path) -> list[GeneratedRegion | RegionTemplate]:
    """Region file rows; rows without a population come back as templates."""
    path = Path(path)
    rows = _rows(path)
    _, header = next(rows)
    if tuple(header[:4]) != REGION_COLUMNS or len(header) not in (4, 5) or (
        len(header) == 5 and header[4] != "population"
    ):
        raise _fail(path, 1, f"expected header {','.join(REGION_COLUMNS)}[,population], got {','.join(header)}")
    out: list[GeneratedRegion | RegionTemplate] = []
    seen: set[str] = set()
    for line, row in rows:
        if len(row) != len(header):
            raise _fail(path, line, f"expected {len(header)} fields, got {len(row)}")
        rid = row[0].strip()
        if not rid:
            raise _fail(path, line, "empty region_id")
        if ";" in rid:
            raise _fail(path, line, f"region_id {rid!r} must not contain ';'")
        if rid in seen:
            raise _fail(path, line, f"duplicate region_id {rid!r}")
        seen.add(rid)
        pt = Point(_float(path, line, "x", row[1]), _float(path, line, "y", row[2]))
        stratum = row[3].strip()
        pop_text = row[4].strip() if len(row) == 5 else ""
        if pop_text:
            try:
                pop = int(pop_text)
            except ValueError:
                raise _fail(path, line, f"population {pop_text!r} is not an integer") from None
            if pop < 0:
                raise _fail(path, line, f"population {pop} is negative")
            out.append(GeneratedRegion(rid, pt, stratum, pop))
        else:
            out.append(RegionTemplate(rid, pt, stratum))
    return out


def read_records(path: str | Path, schema: QuasiIdentifierSchema, region_ids: set[str] | None = None) -> list[Record]:
    path = Path(path)
    rows = _rows(path)
    _, header = next(rows)
    if header[:2] != ["record_id", "region_id"]:
        raise _fail(path, 1, "header must start with record_id,region_id")
    attr_cols = header[2:]
    missing = [n for n in schema.names if n not in attr_cols]
    extra = [n for n in attr_cols if n not in schema.names]
    if missing or extra or len(set(attr_cols)) != len(attr_cols):
        raise _fail(path, 1, f"attribute columns do not match the schema (missing {missing}, unexpected {extra})")
    order = [attr_cols.index(n) + 2 for n in schema.names]
    records: list[Record] = []
    seen: set[str] = set()
    for line, row in rows:
        if len(row) != len(header):
            raise _fail(path, line, f"expected {len(header)} fields, got {len(row)}")
        rec_id, region_id = row[0].strip(), row[1].strip()
        if not rec_id:
            raise _fail(path, line, "empty record_id")
        if rec_id in seen:
            raise _fail(path, line, f"duplicate record_id {rec_id!r}")
        seen.add(rec_id)
        if region_ids is not None and region_id not in region_ids:
            raise _fail(path, line, f"record {rec_id!r} references unknown region {region_id!r}")
        values = tuple(row[i] for i in order)
        try:
            schema.validate_values(values, rec_id)
        except ValidationError as exc:
            raise _fail(path, line, str(exc)) from None
        records.append(Record(rec_id, region_id, values))
    return records


def load_inputs(
    regions_path: str | Path, records_path: str | Path, schema_path: str | Path
) -> tuple[list[InitialRegion], list[Record], QuasiIdentifierSchema]:
    schema = load_schema(schema_path)
    rows = read_region_rows(regions_path)
    records = read_records(records_path, schema, {r.region_id for r in rows})
    grouped: dict[str, list[Record]] = {r.region_id: [] for r in rows}
    for rec in records:
        grouped[rec.region_id].append(rec)
    regions = []
    for row in rows:
        recs = grouped[row.region_id]
        declared = getattr(row, "population", None)
        if declared is not None and declared != len(recs):
            raise ValidationError(
                f"{Path(regions_path).name}: region {row.region_id!r} declares population {declared} "
                f"but {len(recs)} records were loaded"
            )
        regions.append(
            InitialRegion(
                row.region_id,
                row.location,
                len(recs),
                build_class_table(recs, schema),
                tuple(recs),
                row.stratum,
            )
        )
    return regions, records, schema


def _fmt(v: float) -> str:
    return repr(float(v))


def write_regions(path: str | Path, regions: Sequence[GeneratedRegion | InitialRegion | RegionTemplate]) -> None:
    with_pop = all(getattr(r, "population", None) is not None for r in regions)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REGION_COLUMNS + (("population",) if with_pop else ()))
        for r in regions:
            row = [r.region_id, _fmt(r.location.x), _fmt(r.location.y), getattr(r, "stratum", "")]
            if with_pop:
                row.append(str(r.population))
            w.writerow(row)


def write_records(path: str | Path, records: Sequence[Record], schema: QuasiIdentifierSchema) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", "region_id", *schema.names])
        for rec in records:
            w.writerow([rec.record_id, rec.region_id, *rec.values])


# ---------------------------------------------------------------- results


def write_published(path: str | Path, result: AggregationResult, schema: QuasiIdentifierSchema) -> None:
    """Anonymized records: the aggregated id replaces the original region id."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", schema.geographic_attribute_name, *schema.names])
        for rec in result.published_records:
            w.writerow([rec.record_id, rec.aggregated_id, *rec.values])


def read_published(path: str | Path, schema: QuasiIdentifierSchema) -> list[tuple[str, int, tuple[str, ...]]]:
    path = Path(path)
    rows = _rows(path)
    _, header = next(rows)
    expected = ["record_id", schema.geographic_attribute_name, *schema.names]
    if header != expected:
        raise _fail(path, 1, f"expected header {','.join(expected)}")
    out = []
    for line, row in rows:
        if len(row) != len(header):
            raise _fail(path, line, f"expected {len(header)} fields, got {len(row)}")
        try:
            aid = int(row[1])
        except ValueError:
            raise _fail(path, line, f"aggregated id {row[1]!r} is not an integer") from None
        out.append((row[0], aid, tuple(row[2:])))
    return out


def write_region_mapping(path: str | Path, result: AggregationResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region_id", "aggregated_id"])
        for rid, aid in result.region_mapping.items():
            w.writerow([rid, aid])


def write_aggregated_regions(path: str | Path, result: AggregationResult) -> None:
    """Sidecar: site and member list for each aggregated id."""
    published = {}
    for rec in result.published_records:
        published[rec.aggregated_id] = published.get(rec.aggregated_id, 0) + 1
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["aggregated_id", "site_x", "site_y", "population", "published", "anonymity_level", "member_region_ids"])
        for a in result.regions:
            level = a.anonymity_level
            w.writerow(
                [
                    a.aggregated_id,
                    _fmt(a.site.x),
                    _fmt(a.site.y),
                    a.merged_table.total,
                    published.get(a.aggregated_id, 0),
                    "empty" if level is None else level,
                    ";".join(a.member_region_ids),
                ]
            )


def read_aggregation(path: str | Path) -> tuple[list[Point], dict[str, int]]:
    """Sites and region mapping back from an aggregated-regions sidecar."""
    path = Path(path)
    rows = _rows(path)
    _, header = next(rows)
    if header[:3] != ["aggregated_id", "site_x", "site_y"] or header[-1] != "member_region_ids":
        raise _fail(path, 1, "not an aggregated-regions file")
    sites: list[Point] = []
    mapping: dict[str, int] = {}
    for line, row in rows:
        if len(row) != len(header):
            raise _fail(path, line, f"expected {len(header)} fields, got {len(row)}")
        try:
            aid = int(row[0])
        except ValueError:
            raise _fail(path, line, f"aggregated id {row[0]!r} is not an integer") from None
        if aid != len(sites):
            raise _fail(path, line, f"aggregated ids must be consecutive from 0, got {aid}")
        sites.append(Point(_float(path, line, "site_x", row[1]), _float(path, line, "site_y", row[2])))
        for rid in filter(None, row[-1].split(";")):
            if rid in mapping:
                raise _fail(path, line, f"region {rid!r} appears in two aggregated regions")
            mapping[rid] = aid
    return sites, mapping
