"""Logical plan builders, chain validation, hashing, and serialization."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from sempipe.ingest import DatasetRegistry, UnknownSource
from sempipe.logical import (
    AGGREGATE_SCHEMA,
    ONE_TO_MANY,
    ONE_TO_ONE,
    AfterAggregate,
    AggregateOp,
    ConvertOp,
    EmptyPredicate,
    FilterOp,
    LimitOp,
    LogicalPlan,
    NonPositiveLimit,
    PlanError,
    ScanOp,
    UnknownField,
    WrongKind,
    plan_aggregate,
    plan_convert,
    plan_filter,
    plan_filter_udf,
    plan_from_json,
    plan_limit,
    plan_scan,
    plan_to_json,
    validate_plan,
)
from sempipe.schema import PDF_FILE, TEXT_FILE, FieldSpec, Schema, make_schema

CLINICAL = make_schema(
    "ClinicalData",
    "A schema for extracting clinical data datasets from papers.",
    ["name", "description", "url"],
    [
        "The name of the clinical data dataset",
        "A short description of the content of the dataset",
        "The public URL where the dataset can be accessed",
    ],
)


@pytest.fixture
def scan_plan(registry):
    return plan_scan("sigmod-demo", registry)


# -- builders -------------------------------------------------------------------


def test_plan_scan(scan_plan):
    assert len(scan_plan.ops) == 1
    assert isinstance(scan_plan.ops[0], ScanOp)
    assert scan_plan.output_schema == PDF_FILE
    assert scan_plan.source_id == "sigmod-demo"


def test_plan_scan_unknown_source():
    with pytest.raises(UnknownSource):
        plan_scan("nope", DatasetRegistry())


def test_plan_scan_memory_source():
    registry = DatasetRegistry()
    registry.register_memory("m", ["x"])
    assert plan_scan("m", registry).output_schema == TEXT_FILE


def test_plan_filter_appends(scan_plan):
    plan = plan_filter(scan_plan, "The papers are about colorectal cancer")
    assert len(plan.ops) == 2
    assert plan.output_schema == PDF_FILE


def test_plan_filter_empty_predicate(scan_plan):
    with pytest.raises(EmptyPredicate):
        plan_filter(scan_plan, "")


def test_plan_filter_twice_preserves_schema(scan_plan):
    plan = plan_filter(plan_filter(scan_plan, "a"), "b")
    assert len(plan.ops) == 3
    assert plan.output_schema == PDF_FILE


def test_plan_convert_changes_schema(scan_plan):
    plan = plan_convert(scan_plan, CLINICAL, ONE_TO_MANY, "Extract the datasets.")
    assert plan.output_schema == CLINICAL
    assert plan.ops[-1].identity is False


def test_plan_convert_identity_flag(scan_plan):
    same_shape = Schema("PDFFile", "different doc, same structure", PDF_FILE.fields)
    plan = plan_convert(scan_plan, same_shape, ONE_TO_ONE, "noop")
    assert plan.ops[-1].identity is True


def test_plan_convert_then_filter(scan_plan):
    plan = plan_filter(
        plan_convert(scan_plan, CLINICAL, ONE_TO_MANY, "d"), "has a public url"
    )
    assert plan.output_schema == CLINICAL


def test_plan_aggregate_count(scan_plan):
    plan = plan_aggregate(scan_plan, "count")
    assert plan.output_schema == AGGREGATE_SCHEMA
    assert plan.output_schema.field_names == ("value",)


def test_plan_aggregate_average_requires_number(registry):
    registry.register_memory("m", ["x"])
    plan = plan_scan("m", registry)
    with pytest.raises(WrongKind):
        plan_aggregate(plan, "average", "contents")
    with pytest.raises(UnknownField):
        plan_aggregate(plan, "average", "missing")


def test_plan_aggregate_average_on_number_field(scan_plan):
    numeric = Schema("Nums", "numbers", (FieldSpec("score", "a score", "number"),))
    plan = plan_aggregate(
        plan_convert(scan_plan, numeric, ONE_TO_ONE, "score it"), "average", "score"
    )
    assert plan.output_schema == AGGREGATE_SCHEMA


def test_plan_limit(scan_plan):
    assert len(plan_limit(scan_plan, 2).ops) == 2
    with pytest.raises(NonPositiveLimit):
        plan_limit(scan_plan, 0)


def test_filter_after_aggregate_rejected(scan_plan):
    agg = plan_aggregate(scan_plan, "count")
    with pytest.raises(AfterAggregate):
        plan_filter(agg, "still going")
    with pytest.raises(AfterAggregate):
        plan_convert(agg, CLINICAL, ONE_TO_ONE, "d")


def test_limit_after_aggregate_allowed(scan_plan):
    plan = plan_limit(plan_aggregate(scan_plan, "count"), 1)
    assert validate_plan(plan) == []


def test_filter_udf(scan_plan):
    plan = plan_filter_udf(scan_plan, "is_short")
    assert plan.ops[-1].udf_name == "is_short"
    assert plan.ops[-1].predicate is None


# -- validate_plan ---------------------------------------------------------------


def test_validate_golden_plan(scan_plan):
    plan = plan_convert(
        plan_filter(scan_plan, "The papers are about colorectal cancer"),
        CLINICAL,
        ONE_TO_MANY,
        "Extract the clinical data datasets mentioned in the paper.",
    )
    assert validate_plan(plan) == []


def test_validate_missing_scan_head():
    plan = LogicalPlan(ops=(FilterOp(predicate="x"),))
    diagnostics = validate_plan(plan)
    assert len(diagnostics) == 1
    assert "op 0" in diagnostics[0]


def test_validate_aggregate_then_convert(scan_plan):
    plan = LogicalPlan(
        ops=scan_plan.ops
        + (AggregateOp(fn="count"), ConvertOp(target=CLINICAL, cardinality=ONE_TO_ONE))
    )
    diagnostics = validate_plan(plan)
    assert len(diagnostics) == 1
    assert "op 2" in diagnostics[0]


def test_validate_reports_filter_with_both_predicate_and_udf(scan_plan):
    plan = LogicalPlan(ops=scan_plan.ops + (FilterOp(predicate="p", udf_name="u"),))
    assert validate_plan(plan) != []


def test_validate_reports_midstream_scan(scan_plan):
    plan = LogicalPlan(ops=scan_plan.ops + scan_plan.ops)
    assert validate_plan(plan) != []


# -- purity and hashing ------------------------------------------------------------


def test_builders_do_not_mutate_input(scan_plan):
    before = scan_plan.id
    plan_filter(scan_plan, "anything")
    assert scan_plan.id == before
    assert len(scan_plan.ops) == 1


def test_append_then_remove_restores_hash(scan_plan):
    extended = plan_filter(scan_plan, "x")
    trimmed = LogicalPlan(ops=extended.ops[:-1])
    assert trimmed.id == scan_plan.id


def test_hash_differs_on_content(scan_plan):
    a = plan_filter(scan_plan, "one")
    b = plan_filter(scan_plan, "two")
    assert a.id != b.id
    assert len(a.id) == 16


APPEND_KINDS = st.lists(
    st.sampled_from(["filter", "udf", "convert", "identity", "aggregate", "limit"]),
    max_size=5,
)


@given(kinds=APPEND_KINDS)
def test_builder_outputs_always_validate(kinds):
    """Any chain produced purely by builder calls yields zero diagnostics."""
    reg = DatasetRegistry()
    reg.register_memory("m", ["alpha", "beta"])
    plan = plan_scan("m", reg)
    for i, kind in enumerate(kinds):
        try:
            if kind == "filter":
                plan = plan_filter(plan, f"predicate {i}")
            elif kind == "udf":
                plan = plan_filter_udf(plan, f"udf_{i}")
            elif kind == "convert":
                target = Schema(f"T{i}", "step schema", (FieldSpec(f"f{i}", "field"),))
                plan = plan_convert(plan, target, ONE_TO_MANY, f"step {i}")
            elif kind == "identity":
                plan = plan_convert(plan, plan.output_schema, ONE_TO_ONE, "noop")
            elif kind == "aggregate":
                plan = plan_aggregate(plan, "count")
            elif kind == "limit":
                plan = plan_limit(plan, i + 1)
        except PlanError:
            continue
    assert validate_plan(plan) == []


# -- serialization ------------------------------------------------------------------


def test_plan_json_round_trip(registry, scan_plan):
    plan = plan_limit(
        plan_convert(
            plan_filter(scan_plan, "The papers are about colorectal cancer"),
            CLINICAL,
            ONE_TO_MANY,
            "Extract the clinical data datasets mentioned in the paper.",
        ),
        5,
    )
    doc = plan_to_json(plan)
    assert doc["source"] == "sigmod-demo"
    assert [op["type"] for op in doc["ops"]] == ["filter", "convert", "limit"]
    back = plan_from_json(doc, registry)
    assert back.id == plan.id


def test_plan_from_json_rejects_unknown_type(registry):
    with pytest.raises(PlanError):
        plan_from_json({"source": "sigmod-demo", "ops": [{"type": "join"}]}, registry)


def test_plan_json_round_trip_with_aggregate(registry, scan_plan):
    plan = plan_aggregate(scan_plan, "count")
    assert plan_from_json(plan_to_json(plan), registry).id == plan.id
