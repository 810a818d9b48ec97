"""Pipeline state and the operations the chat agent's tools bind to.

A PipelineState is everything one session builds up: the registered source, the
logical plan, created schemas, the policy, and the last execution's outputs.
Engine methods mutate a state under the executor/optimizer contracts; they are
the only mutation path the agent has.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .executor import (
    ExecutionResult,
    ExecutionStats,
    execute,
    stats_from_json,
    stats_to_json,
)
from .ingest import DatasetRegistry, DataSource, TextExtractor, count_records
from .logical import (
    AGGREGATE_SCHEMA,
    AggregateOp,
    ConvertOp,
    FilterOp,
    LimitOp,
    LogicalPlan,
    plan_aggregate,
    plan_convert,
    plan_filter,
    plan_filter_udf,
    plan_limit,
    plan_from_json,
    plan_scan,
    plan_to_json,
)
from .optimizer import (
    MaxQuality,
    MaxQualityAtCost,
    MaxQualityAtTime,
    Policy,
    policy_from_json,
    policy_to_json,
)
from .physical import CardinalityModel, ModelProfile, UdfRegistry
from .schema import (
    BUILTIN_SCHEMAS,
    Record,
    Schema,
    make_schema,
    record_from_json,
    record_to_json,
    schema_from_json,
    schema_to_json,
)


class EngineError(ValueError):
    """A tool-level misuse, e.g. filtering before any dataset is registered."""


@dataclass
class PipelineState:
    """Everything a chat session has built so far."""

    source_id: str | None = None
    plan: LogicalPlan | None = None
    schemas: dict[str, Schema] = field(default_factory=dict)
    policy: Policy | None = None
    results: list[Record] | None = None
    stats: ExecutionStats | None = None
    chosen_key: str | None = None

    def snapshot(self) -> "PipelineState":
        """Cheap copy for handler isolation; members themselves are immutable."""
        return PipelineState(
            source_id=self.source_id,
            plan=self.plan,
            schemas=dict(self.schemas),
            policy=self.policy,
            results=None if self.results is None else list(self.results),
            stats=self.stats,
            chosen_key=self.chosen_key,
        )

    def restore(self, snap: "PipelineState") -> None:
        self.source_id = snap.source_id
        self.plan = snap.plan
        self.schemas = dict(snap.schemas)
        self.policy = snap.policy
        self.results = None if snap.results is None else list(snap.results)
        self.stats = snap.stats
        self.chosen_key = snap.chosen_key


class Engine:
    """Shared infrastructure (datasets, models, provider) behind every session."""

    def __init__(
        self,
        registry: DatasetRegistry | None = None,
        catalog: list[ModelProfile] | None = None,
        provider=None,
        udfs: UdfRegistry | None = None,
        card: CardinalityModel | None = None,
        workers: int = 1,
        extractor: TextExtractor | None = None,
    ) -> None:
        self.registry = registry if registry is not None else DatasetRegistry()
        self.catalog = catalog or []
        self.provider = provider
        self.udfs = dict(udfs or {})
        self.card = card
        self.workers = workers
        self.extractor = extractor

    # -- dataset and schema -------------------------------------------------

    def register_dataset(
        self, state: PipelineState, dataset_id: str, path: str
    ) -> tuple[DataSource, int]:
        source = self.registry.register_dataset(dataset_id, path)
        state.source_id = dataset_id
        state.plan = plan_scan(dataset_id, self.registry)
        return source, count_records(source)

    def create_schema(
        self,
        state: PipelineState,
        schema_name: str,
        schema_doc: str,
        field_names: list[str],
        field_descriptions: list[str],
    ) -> Schema:
        schema = make_schema(schema_name, schema_doc, field_names, field_descriptions)
        state.schemas[schema.name] = schema
        return schema

    def _resolve_schema(self, state: PipelineState, name: str) -> Schema:
        if name in state.schemas:
            return state.schemas[name]
        if name in BUILTIN_SCHEMAS:
            return BUILTIN_SCHEMAS[name]
        raise EngineError(f"unknown schema {name!r}; create it with create_schema first")

    def _require_plan(self, state: PipelineState) -> LogicalPlan:
        if state.plan is None:
            raise EngineError("no dataset registered; use register_dataset first")
        return state.plan

    # -- plan building ------------------------------------------------------

    def add_filter(self, state: PipelineState, predicate: str) -> LogicalPlan:
        state.plan = plan_filter(self._require_plan(state), predicate)
        return state.plan

    def add_filter_udf(self, state: PipelineState, udf_name: str) -> LogicalPlan:
        if udf_name not in self.udfs:
            raise EngineError(f"unknown udf {udf_name!r}")
        state.plan = plan_filter_udf(self._require_plan(state), udf_name)
        return state.plan

    def add_convert(
        self, state: PipelineState, schema_name: str, cardinality: str, desc: str
    ) -> LogicalPlan:
        target = self._resolve_schema(state, schema_name)
        state.plan = plan_convert(self._require_plan(state), target, cardinality, desc)
        return state.plan

    def add_aggregate(
        self, state: PipelineState, fn: str, agg_field: str | None = None
    ) -> LogicalPlan:
        state.plan = plan_aggregate(self._require_plan(state), fn, agg_field)
        return state.plan

    def add_limit(self, state: PipelineState, n: int) -> LogicalPlan:
        state.plan = plan_limit(self._require_plan(state), n)
        return state.plan

    # -- policy and execution -----------------------------------------------

    def set_policy(self, state: PipelineState, policy_doc: dict) -> Policy:
        state.policy = policy_from_json(policy_doc)
        return state.policy

    def execute_pipeline(self, state: PipelineState) -> ExecutionResult:
        plan = self._require_plan(state)
        if self.provider is None:
            raise EngineError("no model provider configured")
        policy = state.policy if state.policy is not None else MaxQuality()
        result = execute(
            plan,
            policy,
            self.provider,
            self.catalog,
            self.registry,
            card=self.card,
            udfs=self.udfs,
            workers=self.workers,
            extractor=self.extractor,
        )
        state.results = result.records
        state.stats = result.stats
        state.chosen_key = result.chosen.key
        return result

    def get_stats(self, state: PipelineState) -> ExecutionStats:
        if state.stats is None:
            raise EngineError("no execution yet; run execute_pipeline first")
        return state.stats

    def export_state(self, state: PipelineState) -> tuple[dict, str]:
        plan = self._require_plan(state)
        policy = state.policy if state.policy is not None else MaxQuality()
        return pipeline_doc(plan, policy), script_listing(plan, policy)


# ---------------------------------------------------------------------------
# export rendering
# ---------------------------------------------------------------------------


def pipeline_doc(plan: LogicalPlan, policy: Policy) -> dict:
    """The canonical pipeline file document: {source, ops, policy}."""
    doc = plan_to_json(plan)
    doc["policy"] = policy_to_json(policy)
    return doc


def _policy_line(policy: Policy) -> str:
    if isinstance(policy, MaxQualityAtCost):
        return f"max_quality_at_cost budget_usd={policy.budget_usd!r}"
    if isinstance(policy, MaxQualityAtTime):
        return f"max_quality_at_time latency_s={policy.latency_s!r}"
    return policy_to_json(policy)["type"]


def script_listing(plan: LogicalPlan, policy: Policy) -> str:
    """Human-readable rendering of a pipeline: source, schemas, ops, policy."""
    lines = ["PIPELINE", f"source: {plan.source_id}"]
    seen: set[str] = set()
    for op in plan.ops:
        if isinstance(op, ConvertOp) and op.target.name not in BUILTIN_SCHEMAS:
            if op.target.name in seen:
                continue
            seen.add(op.target.name)
            lines.append(f"schema {op.target.name}: {op.target.doc}")
            lines.extend(
                f"  {spec.name} ({spec.kind}): {spec.description}"
                for spec in op.target.fields
            )
    step = 0
    for op in plan.ops[1:]:
        step += 1
        if isinstance(op, FilterOp):
            if op.udf_name is not None:
                lines.append(f"op {step}: filter udf={op.udf_name}")
            else:
                lines.append(f'op {step}: filter predicate="{op.predicate}"')
        elif isinstance(op, ConvertOp):
            lines.append(
                f"op {step}: convert target={op.target.name} "
                f'cardinality={op.cardinality} desc="{op.desc}"'
            )
        elif isinstance(op, AggregateOp):
            suffix = f" field={op.field}" if op.field is not None else ""
            lines.append(f"op {step}: aggregate fn={op.fn}{suffix}")
        elif isinstance(op, LimitOp):
            lines.append(f"op {step}: limit n={op.n}")
    lines.append(f"policy: {_policy_line(policy)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# state serialization (service snapshots)
# ---------------------------------------------------------------------------


def state_to_json(state: PipelineState) -> dict:
    return {
        "source_id": state.source_id,
        "plan": None if state.plan is None else plan_to_json(state.plan),
        "schemas": {name: schema_to_json(s) for name, s in sorted(state.schemas.items())},
        "policy": None if state.policy is None else policy_to_json(state.policy),
        "results": None
        if state.results is None
        else [record_to_json(r) for r in state.results],
        "stats": None if state.stats is None else stats_to_json(state.stats),
        "chosen_key": state.chosen_key,
    }


def state_from_json(doc: dict, registry: DatasetRegistry) -> PipelineState:
    state = PipelineState()
    state.source_id = doc.get("source_id")
    state.schemas = {
        name: schema_from_json(s) for name, s in (doc.get("schemas") or {}).items()
    }
    if doc.get("plan") is not None:
        state.plan = plan_from_json(doc["plan"], registry)
    if doc.get("policy") is not None:
        state.policy = policy_from_json(doc["policy"])
    if doc.get("results") is not None:
        lookup = dict(BUILTIN_SCHEMAS)
        lookup.update(state.schemas)
        lookup[AGGREGATE_SCHEMA.name] = AGGREGATE_SCHEMA
        state.results = [record_from_json(r, lookup) for r in doc["results"]]
    if doc.get("stats") is not None:
        state.stats = stats_from_json(doc["stats"])
    state.chosen_key = doc.get("chosen_key")
    return state
