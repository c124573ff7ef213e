import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_dataset
from oracles import groupby_counts

from geoanon.model import (
    GAPS_PRESETS,
    EquivalenceClassTable,
    GapsModel,
    PipelineConfig,
    QuasiIdentifierSchema,
    Record,
    ValidationError,
    build_class_table,
    merge_tables,
)


def test_build_class_table_counts(ab_schema):
    recs = [
        Record("1", "r", ("A", "B")),
        Record("2", "r", ("A", "B")),
        Record("3", "r", ("C", "D")),
        Record("4", "r", ("C", "D")),
    ]
    table = build_class_table(recs, ab_schema)
    assert dict(table) == {("A", "B"): 2, ("C", "D"): 2}
    assert table.total == 4


def test_build_class_table_empty(ab_schema):
    table = build_class_table([], ab_schema)
    assert len(table) == 0 and table.total == 0
    assert table.min_cardinality() is None


def test_build_class_table_matches_groupby(rng):
    _, records, schema = random_dataset(rng, 20, 1000)
    table = build_class_table(records, schema)
    assert dict(table) == groupby_counts([r.values for r in records])
    assert table.total == 1000


def test_out_of_domain_value_names_record_and_attribute(ab_schema):
    with pytest.raises(ValidationError, match=r"'bad-7'.*'second'"):
        build_class_table([Record("bad-7", "r", ("A", "Z"))], ab_schema)


def test_merge_tables_additive():
    a = EquivalenceClassTable({("A", "B"): 2})
    b = EquivalenceClassTable({("A", "B"): 1, ("C", "D"): 3})
    merged = merge_tables([a, b])
    assert dict(merged) == {("A", "B"): 3, ("C", "D"): 3}
    assert merged.total == 6


def test_merge_single_table_is_identity():
    a = EquivalenceClassTable({("A", "B"): 2, ("C", "D"): 5})
    assert merge_tables([a]) == a


def test_merge_equals_rebuild_from_concatenated_records(rng):
    _, records, schema = random_dataset(rng, 10, 600)
    cuts = sorted(rng.choice(np.arange(1, 600), size=5, replace=False).tolist())
    parts = np.split(np.arange(600), cuts)
    tables = [build_class_table([records[i] for i in part], schema) for part in parts]
    assert merge_tables(tables) == build_class_table(records, schema)


table_strategy = st.dictionaries(
    st.tuples(st.sampled_from("abc"), st.sampled_from("xyz")), st.integers(1, 20), max_size=9
).map(EquivalenceClassTable)


@given(st.lists(table_strategy, max_size=6), st.randoms(use_true_random=False))
def test_merge_commutative_and_associative(tables, shuffler):
    whole = merge_tables(tables)
    shuffled = list(tables)
    shuffler.shuffle(shuffled)
    assert merge_tables(shuffled) == whole
    if len(tables) >= 2:
        nested = merge_tables([merge_tables(tables[:1]), merge_tables(tables[1:])])
        assert nested == whole
    assert whole.total == sum(t.total for t in tables)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_partition_then_merge_equals_whole(seed, n_parts):
    rng = np.random.default_rng(seed)
    _, records, schema = random_dataset(rng, 5, 80)
    labels = rng.integers(0, n_parts, size=len(records))
    parts = [[r for r, lab in zip(records, labels) if lab == p] for p in range(n_parts)]
    assert merge_tables(build_class_table(p, schema) for p in parts) == build_class_table(records, schema)


def test_table_invariants():
    t = EquivalenceClassTable({("a",): 0, ("b",): 3})
    assert ("a",) not in t
    assert t.total == 3
    with pytest.raises(ValidationError):
        EquivalenceClassTable({("a",): -1})


def test_bottleneck_keys_sorted():
    t = EquivalenceClassTable({("z",): 1, ("b",): 1, ("m",): 4})
    assert t.bottleneck_keys() == [("b",), ("z",)]


def test_schema_validation():
    with pytest.raises(ValidationError):
        QuasiIdentifierSchema.from_domains({"a": []})
    with pytest.raises(ValidationError):
        QuasiIdentifierSchema.from_domains({"a": ["x", "x"]})
    with pytest.raises(ValidationError):
        QuasiIdentifierSchema.from_domains({"region": ["x"]}, geographic_attribute_name="region")


def test_gaps_presets():
    assert GAPS_PRESETS["western"] == GapsModel(1588, 0.42)
    assert GAPS_PRESETS["central"] == GapsModel(1436, 0.43)
    assert GAPS_PRESETS["eastern"] == GapsModel(1978, 0.304)
    with pytest.raises(ValidationError):
        GapsModel(0, 1)
    with pytest.raises(ValidationError):
        GapsModel(1, 0)


def test_pipeline_config_validation():
    with pytest.raises(ValidationError):
        PipelineConfig(k=1)
    with pytest.raises(ValidationError):
        PipelineConfig(site_count_approach="fixed")
    with pytest.raises(ValidationError):
        PipelineConfig(log_base="3")
    cfg = PipelineConfig(site_count_approach="fixed", fixed_site_count=5)
    with pytest.raises(ValidationError):
        cfg.validate_against(4)
    cfg.validate_against(5)
