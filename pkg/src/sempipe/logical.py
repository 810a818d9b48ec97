"""Logical pipeline plans.

A logical plan is a linear chain of operators over one data source: a Scan head
followed by any mix of Filter, Convert, Aggregate, and Limit. Plans carry no
implementation choice; that happens in the physical catalog. Plans are immutable
values identified by a content hash, so appending never mutates the input plan.

Operator dataclasses construct permissively (deserialized plans may be invalid);
the builder functions enforce the chain rules strictly and `validate_plan`
reports every violation as a human-readable diagnostic.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Union

from .ingest import DatasetRegistry
from .schema import KIND_NUMBER, FieldSpec, Schema, schema_from_json, schema_to_json

ONE_TO_ONE = "one_to_one"
ONE_TO_MANY = "one_to_many"
CARDINALITIES = (ONE_TO_ONE, ONE_TO_MANY)

AGG_COUNT = "count"
AGG_AVERAGE = "average"
AGGREGATE_FNS = (AGG_COUNT, AGG_AVERAGE)

# Output schema of every Aggregate operator.
AGGREGATE_SCHEMA = Schema(
    name="AggregateResult",
    doc="Single aggregate value.",
    fields=(FieldSpec("value", "The aggregate result value.", KIND_NUMBER),),
)


class PlanError(ValueError):
    """Base class for plan construction failures."""


class EmptyPredicate(PlanError):
    pass


class AfterAggregate(PlanError):
    """Only Limit may follow an Aggregate."""


class UnknownField(PlanError):
    pass


class WrongKind(PlanError):
    pass


class NonPositiveLimit(PlanError):
    pass


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanOp:
    """Reads every record of a registered data source."""

    source_id: str
    schema: Schema

    @property
    def kind(self) -> str:
        return "scan"

    def output_schema(self, _input: Schema | None) -> Schema:
        return self.schema


@dataclass(frozen=True)
class FilterOp:
    """Keeps records satisfying a natural-language predicate or a named UDF."""

    predicate: str | None = None
    udf_name: str | None = None

    @property
    def kind(self) -> str:
        return "filter"

    def output_schema(self, input_schema: Schema) -> Schema:
        return input_schema


@dataclass(frozen=True)
class ConvertOp:
    """Transforms records into the target schema, possibly emitting several per input."""

    target: Schema
    cardinality: str = ONE_TO_ONE
    desc: str = ""
    identity: bool = False

    @property
    def kind(self) -> str:
        return "convert"

    def output_schema(self, _input: Schema) -> Schema:
        return self.target


@dataclass(frozen=True)
class AggregateOp:
    """Collapses the stream to a single {value} record."""

    fn: str
    field: str | None = None

    @property
    def kind(self) -> str:
        return "aggregate"

    def output_schema(self, _input: Schema) -> Schema:
        return AGGREGATE_SCHEMA


@dataclass(frozen=True)
class LimitOp:
    """Passes through the first n records."""

    n: int

    @property
    def kind(self) -> str:
        return "limit"

    def output_schema(self, input_schema: Schema) -> Schema:
        return input_schema


LogicalOperator = Union[ScanOp, FilterOp, ConvertOp, AggregateOp, LimitOp]


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------


def _op_canonical(op: LogicalOperator) -> dict:
    if isinstance(op, ScanOp):
        return {"type": "scan", "source": op.source_id, "schema": schema_to_json(op.schema)}
    if isinstance(op, FilterOp):
        if op.udf_name is not None:
            return {"type": "filter", "udf": op.udf_name}
        return {"type": "filter", "predicate": op.predicate}
    if isinstance(op, ConvertOp):
        return {
            "type": "convert",
            "schema": schema_to_json(op.target),
            "cardinality": op.cardinality,
            "desc": op.desc,
        }
    if isinstance(op, AggregateOp):
        doc = {"type": "aggregate", "fn": op.fn}
        if op.field is not None:
            doc["field"] = op.field
        return doc
    if isinstance(op, LimitOp):
        return {"type": "limit", "n": op.n}
    raise TypeError(f"not a logical operator: {op!r}")


@dataclass(frozen=True)
class LogicalPlan:
    """Immutable operator chain; id is a content hash over source and operators."""

    ops: tuple[LogicalOperator, ...] = field(default=())

    @property
    def id(self) -> str:
        canonical = json.dumps([_op_canonical(op) for op in self.ops], sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    @property
    def source_id(self) -> str | None:
        if self.ops and isinstance(self.ops[0], ScanOp):
            return self.ops[0].source_id
        return None

    def output_schemas(self) -> list[Schema]:
        """Output schema after each operator, in order."""
        schemas: list[Schema] = []
        current: Schema | None = None
        for op in self.ops:
            current = op.output_schema(current)
            schemas.append(current)
        return schemas

    @property
    def output_schema(self) -> Schema:
        if not self.ops:
            raise PlanError("empty plan has no output schema")
        return self.output_schemas()[-1]


def _last_non_limit(plan: LogicalPlan) -> LogicalOperator | None:
    for op in reversed(plan.ops):
        if not isinstance(op, LimitOp):
            return op
    return None


def _check_appendable(plan: LogicalPlan, appending: str) -> None:
    if not plan.ops:
        raise PlanError(f"cannot append {appending} to an empty plan; start with a scan")
    if isinstance(_last_non_limit(plan), AggregateOp):
        raise AfterAggregate(f"{appending} cannot follow an aggregate")


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def plan_scan(source_id: str, registry: DatasetRegistry) -> LogicalPlan:
    """One-op plan reading the registered source with its detected schema."""
    source = registry.get(source_id)
    return LogicalPlan(ops=(ScanOp(source_id=source_id, schema=source.detected_schema),))


def plan_filter(plan: LogicalPlan, predicate: str) -> LogicalPlan:
    if not predicate:
        raise EmptyPredicate("filter predicate must be non-empty")
    _check_appendable(plan, "filter")
    return LogicalPlan(ops=plan.ops + (FilterOp(predicate=predicate),))


def plan_filter_udf(plan: LogicalPlan, udf_name: str) -> LogicalPlan:
    if not udf_name:
        raise EmptyPredicate("filter udf name must be non-empty")
    _check_appendable(plan, "filter")
    return LogicalPlan(ops=plan.ops + (FilterOp(udf_name=udf_name),))


def plan_convert(
    plan: LogicalPlan, target: Schema, cardinality: str = ONE_TO_ONE, desc: str = ""
) -> LogicalPlan:
    if cardinality not in CARDINALITIES:
        raise PlanError(f"unknown cardinality: {cardinality!r}")
    _check_appendable(plan, "convert")
    identity = target == plan.output_schema
    op = ConvertOp(target=target, cardinality=cardinality, desc=desc, identity=identity)
    return LogicalPlan(ops=plan.ops + (op,))


def plan_aggregate(plan: LogicalPlan, fn: str, agg_field: str | None = None) -> LogicalPlan:
    if fn not in AGGREGATE_FNS:
        raise PlanError(f"unknown aggregate fn: {fn!r}")
    _check_appendable(plan, "aggregate")
    if fn == AGG_AVERAGE:
        if agg_field is None:
            raise UnknownField("average requires a field name")
        if agg_field not in plan.output_schema.field_names:
            raise UnknownField(f"no field {agg_field!r} in schema {plan.output_schema.name}")
        spec = plan.output_schema.field(agg_field)
        if spec.kind != KIND_NUMBER:
            raise WrongKind(f"average needs a number field; {agg_field!r} is {spec.kind}")
    return LogicalPlan(ops=plan.ops + (AggregateOp(fn=fn, field=agg_field),))


def plan_limit(plan: LogicalPlan, n: int) -> LogicalPlan:
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise NonPositiveLimit(f"limit must be a positive integer, got {n!r}")
    if not plan.ops:
        raise PlanError("cannot append limit to an empty plan; start with a scan")
    return LogicalPlan(ops=plan.ops + (LimitOp(n=n),))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


def validate_plan(plan: LogicalPlan) -> list[str]:
    """Empty list iff the plan satisfies every chain invariant."""
    diags: list[str] = []
    if not plan.ops:
        diags.append("op 0: plan is empty; a plan must start with a scan")
        return diags
    if not isinstance(plan.ops[0], ScanOp):
        diags.append("op 0: plan must start with a scan")
    current: Schema | None = plan.ops[0].schema if isinstance(plan.ops[0], ScanOp) else None
    seen_aggregate = False
    for i, op in enumerate(plan.ops):
        if i > 0 and isinstance(op, ScanOp):
            diags.append(f"op {i}: scan allowed only as the first operator")
            current = op.schema
            continue
        if seen_aggregate and not isinstance(op, LimitOp):
            diags.append(f"op {i}: only limit may follow an aggregate")
        if isinstance(op, FilterOp):
            has_pred = op.predicate is not None
            has_udf = op.udf_name is not None
            if has_pred == has_udf:
                diags.append(f"op {i}: filter needs exactly one of predicate or udf")
            elif has_pred and not op.predicate:
                diags.append(f"op {i}: filter predicate is empty")
            elif has_udf and not op.udf_name:
                diags.append(f"op {i}: filter udf name is empty")
        elif isinstance(op, ConvertOp):
            if op.cardinality not in CARDINALITIES:
                diags.append(f"op {i}: unknown cardinality {op.cardinality!r}")
            if current is not None and op.identity != (op.target == current):
                diags.append(f"op {i}: identity flag does not match schemas")
        elif isinstance(op, AggregateOp):
            if op.fn not in AGGREGATE_FNS:
                diags.append(f"op {i}: unknown aggregate fn {op.fn!r}")
            elif op.fn == AGG_AVERAGE:
                if op.field is None:
                    diags.append(f"op {i}: average requires a field")
                elif current is not None:
                    spec = current.field(op.field)
                    if spec is None:
                        diags.append(f"op {i}: no field {op.field!r} in schema {current.name}")
                    elif spec.kind != KIND_NUMBER:
                        diags.append(
                            f"op {i}: average needs a number field; {op.field!r} is {spec.kind}"
                        )
            seen_aggregate = True
        elif isinstance(op, LimitOp):
            if not isinstance(op.n, int) or isinstance(op.n, bool) or op.n < 1:
                diags.append(f"op {i}: limit must be a positive integer, got {op.n!r}")
        # Filter/Limit pass an unknown (None) schema through; the rest define one.
        current = op.output_schema(current)
    return diags


# ---------------------------------------------------------------------------
# serialization (pipeline-file op list)
# ---------------------------------------------------------------------------


def plan_to_json(plan: LogicalPlan) -> dict:
    """{source, ops} document; the scan is implied by source."""
    ops = [_op_canonical(op) for op in plan.ops if not isinstance(op, ScanOp)]
    return {"source": plan.source_id, "ops": ops}


def plan_from_json(doc: dict, registry: DatasetRegistry) -> LogicalPlan:
    """Permissive rebuild: chain rules are reported by validate_plan, not raised here."""
    plan = plan_scan(doc["source"], registry)
    ops: list[LogicalOperator] = list(plan.ops)
    current = plan.output_schema
    for op_doc in doc.get("ops", []):
        op_type = op_doc.get("type")
        if op_type == "filter":
            op: LogicalOperator = FilterOp(
                predicate=op_doc.get("predicate"), udf_name=op_doc.get("udf")
            )
        elif op_type == "convert":
            target = schema_from_json(op_doc["schema"])
            op = ConvertOp(
                target=target,
                cardinality=op_doc.get("cardinality", ONE_TO_ONE),
                desc=op_doc.get("desc", ""),
                identity=target == current,
            )
        elif op_type == "aggregate":
            op = AggregateOp(fn=op_doc.get("fn", ""), field=op_doc.get("field"))
        elif op_type == "limit":
            op = LimitOp(n=op_doc.get("n", 0))
        else:
            raise PlanError(f"unknown operator type: {op_type!r}")
        ops.append(op)
        current = op.output_schema(current)
    return LogicalPlan(ops=tuple(ops))
