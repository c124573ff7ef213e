from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from geoanon.model import Point, QuasiIdentifierSchema, Record, make_regions  # noqa: E402


def random_schema(rng: np.random.Generator, max_attrs: int = 3, max_domain: int = 4) -> QuasiIdentifierSchema:
    n_attrs = int(rng.integers(1, max_attrs + 1))
    return QuasiIdentifierSchema.from_domains(
        {f"q{a}": [f"c{c}" for c in range(int(rng.integers(1, max_domain + 1)))] for a in range(n_attrs)}
    )


def random_dataset(
    rng: np.random.Generator,
    n_regions: int,
    n_records: int,
    schema: QuasiIdentifierSchema | None = None,
    extent: float = 100.0,
):
    """Regions scattered uniformly with records assigned uniformly at random."""
    schema = schema or random_schema(rng)
    locs = {f"r{i:04d}": Point(*map(float, rng.uniform(0, extent, 2))) for i in range(n_regions)}
    ids = list(locs)
    records = []
    for j in range(n_records):
        rid = ids[int(rng.integers(len(ids)))]
        values = tuple(a.domain[int(rng.integers(len(a.domain)))] for a in schema.attributes)
        records.append(Record(f"p{j:05d}", rid, values))
    return make_regions(locs, records, schema), records, schema


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ab_schema():
    return QuasiIdentifierSchema.from_domains({"first": ["A", "C"], "second": ["B", "D"]})


# acceptance criteria report, filled in by test_acceptance.criterion
ACCEPTANCE: dict[int, tuple[str, str, float]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, title, seconds = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {title}  [{seconds:.1f}s]")
