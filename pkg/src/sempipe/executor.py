"""Physical plan execution with full telemetry.

Runs the optimizer-chosen plan operator by operator. Model-backed operators
build canonical prompts (golden-tested, bit-exact), parse the responses with a
retry-once-then-drop contract, and account every call. Per-op cost is a single
multiplication (calls x rate) and totals use math.fsum; in mock mode, op time
is the sum of rule-supplied latencies, so stats are bit-for-bit reproducible.
"""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .ingest import DatasetRegistry, TextExtractor, scan
from .logical import (
    AGG_AVERAGE,
    AGG_COUNT,
    AGGREGATE_SCHEMA,
    ONE_TO_ONE,
    AggregateOp,
    ConvertOp,
    FilterOp,
    LimitOp,
    LogicalPlan,
    ScanOp,
)
from .optimizer import Policy, pareto_prune, select_plan
from .physical import (
    IMPL_DIRECT_SCAN,
    IMPL_EXACT_AGGREGATE,
    IMPL_IDENTITY_CONVERT,
    IMPL_LLM_CONVERT,
    IMPL_LLM_FILTER,
    IMPL_PASS_LIMIT,
    IMPL_UDF_FILTER,
    CardinalityModel,
    ModelProfile,
    PhysicalPlan,
    UdfRegistry,
    enumerate_physical_plans,
)
from .providers import CompletionRequest, CompletionResponse, ProviderUnavailable
from .schema import Record, Schema, conform_record

FILTER_RETRY_SUFFIX = "\nRespond with exactly one word: true or false."
CONVERT_RETRY_SUFFIX = "\nRespond with valid JSON only."

_WORD_RE = re.compile(r"[A-Za-z]+")


class ExecutorError(RuntimeError):
    """Base class for execution failures."""


class AllNull(ExecutorError):
    """Average over a field with no non-null numeric values."""


# ---------------------------------------------------------------------------
# canonical prompts
# ---------------------------------------------------------------------------


def _render_value(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return str(value)
    return json.dumps(value, sort_keys=True)


def _record_block(record: Record) -> str:
    return "\n".join(
        f"{spec.name} = {_render_value(record.values.get(spec.name))}"
        for spec in record.schema.fields
    )


def filter_prompt(predicate: str, record: Record) -> str:
    return (
        "FILTER\n"
        f"PREDICATE: {predicate}\n"
        "RECORD:\n"
        f"{_record_block(record)}\n"
        "Answer true or false."
    )


def shared_fields(source: Schema, target: Schema) -> list[str]:
    """Target field names that already exist in the source schema (copied, not asked)."""
    source_names = set(source.field_names)
    return [name for name in target.field_names if name in source_names]


def convert_prompt(desc: str, target: Schema, record: Record) -> str:
    copied = set(shared_fields(record.schema, target))
    field_lines = "\n".join(
        f"{spec.name}: {spec.description}"
        for spec in target.fields
        if spec.name not in copied
    )
    return (
        "CONVERT\n"
        f"TASK: {desc}\n"
        "TARGET FIELDS:\n"
        f"{field_lines}\n"
        "RECORD:\n"
        f"{_record_block(record)}\n"
        "Respond with JSON."
    )


# ---------------------------------------------------------------------------
# model-backed operators
# ---------------------------------------------------------------------------


class _CallOutcome(NamedTuple):
    """One record's model interaction: outputs plus telemetry."""

    records: list[Record]
    responses: list[CompletionResponse]
    failed: bool


def _parse_boolean(text: str) -> bool | None:
    for word in _WORD_RE.findall(text.lower()):
        if word in ("true", "yes"):
            return True
        if word in ("false", "no"):
            return False
    return None


def _filter_once(record: Record, predicate: str, model_id: str, provider) -> _CallOutcome:
    prompt = filter_prompt(predicate, record)
    responses = [provider.complete(CompletionRequest(model_id=model_id, prompt=prompt))]
    keep = _parse_boolean(responses[0].text)
    if keep is None:
        retry = CompletionRequest(model_id=model_id, prompt=prompt + FILTER_RETRY_SUFFIX)
        responses.append(provider.complete(retry))
        keep = _parse_boolean(responses[1].text)
        if keep is None:
            return _CallOutcome(records=[], responses=responses, failed=True)
    return _CallOutcome(records=[record] if keep else [], responses=responses, failed=False)


def run_llm_filter(record: Record, predicate: str, model_id: str, provider) -> bool:
    """Keep decision for one record; unparseable after one retry drops it."""
    outcome = _filter_once(record, predicate, model_id, provider)
    return bool(outcome.records)


def _parse_objects(text: str) -> list[dict] | None:
    try:
        parsed = json.loads(text.strip())
    except (json.JSONDecodeError, ValueError):
        return None
    if isinstance(parsed, dict):
        return [parsed]
    if isinstance(parsed, list):
        objects = [item for item in parsed if isinstance(item, dict)]
        return objects if objects or not parsed else None
    return None


def _convert_once(
    record: Record, target: Schema, cardinality: str, desc: str, model_id: str, provider
) -> _CallOutcome:
    prompt = convert_prompt(desc, target, record)
    responses = [provider.complete(CompletionRequest(model_id=model_id, prompt=prompt))]
    objects = _parse_objects(responses[0].text)
    if objects is None:
        retry = CompletionRequest(model_id=model_id, prompt=prompt + CONVERT_RETRY_SUFFIX)
        responses.append(provider.complete(retry))
        objects = _parse_objects(responses[1].text)
        if objects is None:
            return _CallOutcome(records=[], responses=responses, failed=True)
    if cardinality == ONE_TO_ONE:
        objects = objects[:1]
    copied = shared_fields(record.schema, target)
    children: list[Record] = []
    for j, obj in enumerate(objects):
        raw = dict(obj)
        for name in copied:
            raw[name] = record.values.get(name)
        children.append(
            conform_record(
                raw,
                target,
                parents=(record.id,),
                source=record.source,
                rid=f"{record.id}/{j}",
            )
        )
    return _CallOutcome(records=children, responses=responses, failed=False)


def run_llm_convert(
    record: Record, target: Schema, cardinality: str, desc: str, model_id: str, provider
) -> list[Record]:
    """Converted child records for one input; unparseable after one retry yields none."""
    return _convert_once(record, target, cardinality, desc, model_id, provider).records


# ---------------------------------------------------------------------------
# conventional operators
# ---------------------------------------------------------------------------


def run_aggregate(records: list[Record], fn: str, agg_field: str | None = None) -> Record:
    parents = tuple(r.id for r in records)
    if fn == AGG_COUNT:
        value: float | int = len(records)
    elif fn == AGG_AVERAGE:
        numbers = [
            v
            for r in records
            if isinstance(v := r.values.get(agg_field), (int, float))
            and not isinstance(v, bool)
        ]
        if not numbers:
            raise AllNull(f"no non-null numeric values for field {agg_field!r}")
        value = math.fsum(numbers) / len(numbers)
    else:
        raise ExecutorError(f"unknown aggregate fn: {fn!r}")
    return Record(
        id="agg-0", schema=AGGREGATE_SCHEMA, values={"value": value}, parents=parents
    )


def run_limit(records: list[Record], n: int) -> list[Record]:
    return records[:n]


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OpStats:
    descriptor: str
    records_in: int
    records_out: int
    time_s: float
    cost_usd: float
    model_calls: int
    failures: int


@dataclass(frozen=True)
class ExecutionStats:
    total_cost_usd: float
    total_time_s: float
    per_op: tuple[OpStats, ...]


def stats_to_json(stats: ExecutionStats) -> dict:
    return {
        "total_cost_usd": stats.total_cost_usd,
        "total_time_s": stats.total_time_s,
        "per_op": [
            {
                "descriptor": op.descriptor,
                "records_in": op.records_in,
                "records_out": op.records_out,
                "time_s": op.time_s,
                "cost_usd": op.cost_usd,
                "model_calls": op.model_calls,
                "failures": op.failures,
            }
            for op in stats.per_op
        ],
    }


def stats_from_json(doc: dict) -> ExecutionStats:
    return ExecutionStats(
        total_cost_usd=doc["total_cost_usd"],
        total_time_s=doc["total_time_s"],
        per_op=tuple(
            OpStats(
                descriptor=op["descriptor"],
                records_in=op["records_in"],
                records_out=op["records_out"],
                time_s=op["time_s"],
                cost_usd=op["cost_usd"],
                model_calls=op["model_calls"],
                failures=op["failures"],
            )
            for op in doc["per_op"]
        ),
    )


def _finish_stats(per_op: list[OpStats]) -> ExecutionStats:
    return ExecutionStats(
        total_cost_usd=math.fsum(op.cost_usd for op in per_op),
        total_time_s=math.fsum(op.time_s for op in per_op),
        per_op=tuple(per_op),
    )


# ---------------------------------------------------------------------------
# plan execution
# ---------------------------------------------------------------------------


class ExecutionResult(NamedTuple):
    records: list[Record]
    stats: ExecutionStats
    chosen: PhysicalPlan


def _map_records(records: list[Record], fn: Callable, workers: int) -> list[_CallOutcome]:
    if workers <= 1 or len(records) <= 1:
        return [fn(r) for r in records]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, records))


def _model_op_stats(
    descriptor: str,
    records_in: int,
    outcomes: list[_CallOutcome],
    profile: ModelProfile,
) -> tuple[list[Record], OpStats]:
    out: list[Record] = []
    latencies: list[float] = []
    calls = 0
    failures = 0
    for outcome in outcomes:
        out.extend(outcome.records)
        latencies.extend(resp.latency_s for resp in outcome.responses)
        calls += len(outcome.responses)
        failures += 1 if outcome.failed else 0
    return out, OpStats(
        descriptor=descriptor,
        records_in=records_in,
        records_out=len(out),
        time_s=math.fsum(latencies),
        cost_usd=calls * profile.usd_per_call,
        model_calls=calls,
        failures=failures,
    )


def _plain_op_stats(descriptor: str, records_in: int, records_out: int, failures: int = 0) -> OpStats:
    return OpStats(
        descriptor=descriptor,
        records_in=records_in,
        records_out=records_out,
        time_s=0.0,
        cost_usd=0.0,
        model_calls=0,
        failures=failures,
    )


def execute(
    logical: LogicalPlan,
    policy: Policy,
    provider,
    catalog: list[ModelProfile],
    registry: DatasetRegistry,
    card: CardinalityModel | None = None,
    udfs: UdfRegistry | None = None,
    workers: int = 1,
    extractor: TextExtractor | None = None,
) -> ExecutionResult:
    """Enumerate, select under the policy, run, and account every operator."""
    udfs = udfs or {}
    source = registry.get(logical.source_id)
    scan_records = list(scan(source, extractor))
    if card is None:
        card = CardinalityModel(input_count=len(scan_records))
    plans = enumerate_physical_plans(logical, catalog, udfs, card)
    chosen = select_plan(pareto_prune(plans), policy)

    profiles = {m.id: m for m in catalog}
    per_op: list[OpStats] = []
    records: list[Record] = []
    for phys, logic in zip(chosen.ops, logical.ops):
        records_in = len(records)
        try:
            if phys.impl == IMPL_DIRECT_SCAN:
                records = scan_records
                per_op.append(_plain_op_stats(phys.descriptor, 0, len(records)))
            elif phys.impl == IMPL_LLM_FILTER:
                assert isinstance(logic, FilterOp)
                predicate = logic.predicate
                model = profiles[phys.model_id]
                outcomes = _map_records(
                    records,
                    lambda r: _filter_once(r, predicate, phys.model_id, provider),
                    workers,
                )
                records, op_stats = _model_op_stats(
                    phys.descriptor, records_in, outcomes, model
                )
                per_op.append(op_stats)
            elif phys.impl == IMPL_UDF_FILTER:
                udf = udfs[phys.udf_name]
                kept: list[Record] = []
                failures = 0
                for record in records:
                    try:
                        if udf(record):
                            kept.append(record)
                    except Exception:
                        failures += 1
                records = kept
                per_op.append(
                    _plain_op_stats(phys.descriptor, records_in, len(records), failures)
                )
            elif phys.impl == IMPL_LLM_CONVERT:
                assert isinstance(logic, ConvertOp)
                target, cardinality, desc = logic.target, logic.cardinality, logic.desc
                model = profiles[phys.model_id]
                outcomes = _map_records(
                    records,
                    lambda r: _convert_once(
                        r, target, cardinality, desc, phys.model_id, provider
                    ),
                    workers,
                )
                records, op_stats = _model_op_stats(
                    phys.descriptor, records_in, outcomes, model
                )
                per_op.append(op_stats)
            elif phys.impl == IMPL_IDENTITY_CONVERT:
                per_op.append(_plain_op_stats(phys.descriptor, records_in, len(records)))
            elif phys.impl == IMPL_EXACT_AGGREGATE:
                assert isinstance(logic, AggregateOp)
                records = [run_aggregate(records, logic.fn, logic.field)]
                per_op.append(_plain_op_stats(phys.descriptor, records_in, 1))
            elif phys.impl == IMPL_PASS_LIMIT:
                assert isinstance(logic, LimitOp)
                records = run_limit(records, logic.n)
                per_op.append(_plain_op_stats(phys.descriptor, records_in, len(records)))
            else:
                raise ExecutorError(f"unknown impl: {phys.impl!r}")
        except ProviderUnavailable as exc:
            # Abort, but hand back what has been accounted so far.
            raise ProviderUnavailable(str(exc), stats=_finish_stats(per_op)) from exc
    return ExecutionResult(records=records, stats=_finish_stats(per_op), chosen=chosen)
