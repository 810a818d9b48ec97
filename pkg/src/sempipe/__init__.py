"""Declarative semantic pipelines over document collections, with policy-driven plan selection."""

from .schema import (
    BUILTIN_SCHEMAS,
    FieldSpec,
    Record,
    Schema,
    SchemaError,
    conform_record,
    make_schema,
    record_from_json,
    record_to_json,
    schema_from_json,
    schema_to_json,
)
from .ingest import (
    DataSource,
    DatasetRegistry,
    IngestError,
    count_records,
    detect_schema,
    scan,
)
from .logical import (
    AggregateOp,
    ConvertOp,
    FilterOp,
    LimitOp,
    LogicalPlan,
    PlanError,
    ScanOp,
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
from .physical import (
    CardinalityModel,
    CatalogError,
    ModelProfile,
    PhysicalOperator,
    PhysicalPlan,
    PlanEstimate,
    catalog_from_json,
    enumerate_physical_plans,
    estimate_plan,
    load_catalog,
)
from .optimizer import (
    MaxQuality,
    MaxQualityAtCost,
    MaxQualityAtTime,
    MinCost,
    MinTime,
    NoFeasiblePlan,
    Policy,
    PolicyError,
    pareto_prune,
    policy_from_json,
    policy_to_json,
    select_plan,
)
from .providers import (
    CompletionRequest,
    CompletionResponse,
    HttpProvider,
    MockProvider,
    MockRule,
    ProviderError,
    ProviderUnavailable,
    load_mock_rules,
)
from .executor import (
    ExecutionResult,
    ExecutionStats,
    ExecutorError,
    OpStats,
    execute,
    stats_from_json,
    stats_to_json,
)
from .engine import Engine, EngineError, PipelineState, pipeline_doc, script_listing

__version__ = "0.1.0"

__all__ = [
    "AggregateOp",
    "BUILTIN_SCHEMAS",
    "CardinalityModel",
    "CatalogError",
    "CompletionRequest",
    "CompletionResponse",
    "ConvertOp",
    "DataSource",
    "DatasetRegistry",
    "Engine",
    "EngineError",
    "ExecutionResult",
    "ExecutionStats",
    "ExecutorError",
    "FieldSpec",
    "FilterOp",
    "HttpProvider",
    "IngestError",
    "LimitOp",
    "LogicalPlan",
    "MaxQuality",
    "MaxQualityAtCost",
    "MaxQualityAtTime",
    "MinCost",
    "MinTime",
    "MockProvider",
    "MockRule",
    "ModelProfile",
    "NoFeasiblePlan",
    "OpStats",
    "PhysicalOperator",
    "PhysicalPlan",
    "PipelineState",
    "PlanError",
    "PlanEstimate",
    "Policy",
    "PolicyError",
    "ProviderError",
    "ProviderUnavailable",
    "Record",
    "ScanOp",
    "Schema",
    "SchemaError",
    "__version__",
    "catalog_from_json",
    "conform_record",
    "count_records",
    "detect_schema",
    "enumerate_physical_plans",
    "estimate_plan",
    "execute",
    "load_catalog",
    "load_mock_rules",
    "make_schema",
    "pareto_prune",
    "pipeline_doc",
    "plan_aggregate",
    "plan_convert",
    "plan_filter",
    "plan_filter_udf",
    "plan_from_json",
    "plan_limit",
    "plan_scan",
    "plan_to_json",
    "policy_from_json",
    "policy_to_json",
    "record_from_json",
    "record_to_json",
    "scan",
    "schema_from_json",
    "schema_to_json",
    "script_listing",
    "select_plan",
    "stats_from_json",
    "stats_to_json",
    "validate_plan",
]
