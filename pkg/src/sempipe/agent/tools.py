"""Tool registry with docstring metadata and template-variable injection.

Each tool declares a summary, typed arguments, and a display template whose
`{{variable}}` placeholders are filled with the canonical JSON form of the
bound argument (strings quoted, lists bracketed). Handlers are bound engine
operations; the rendered template is transcript display text, never executed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable

from ..engine import Engine, PipelineState
from ..executor import stats_to_json
from ..optimizer import policy_to_json
from ..serialize import dumps_canonical

TEMPLATE_VAR_RE = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")


class ToolError(ValueError):
    """Base class for tool registry failures."""


class DuplicateTool(ToolError):
    pass


class UnknownTool(ToolError):
    pass


class UnboundTemplateVariable(ToolError):
    """The template names a variable that is not a declared argument."""


class MissingBinding(ToolError):
    """render_tool was called without a value for a template variable."""


@dataclass(frozen=True)
class ToolArg:
    name: str
    type: str
    description: str


@dataclass(frozen=True)
class ToolSpec:
    name: str
    summary: str
    args: tuple[ToolArg, ...]
    template: str
    handler: Callable[[Engine, PipelineState, dict], str] = field(compare=False)


class ToolRegistry:
    """Named tools in registration order; names are unique."""

    def __init__(self) -> None:
        self._tools: dict[str, ToolSpec] = {}

    def register(self, spec: ToolSpec) -> None:
        if spec.name in self._tools:
            raise DuplicateTool(f"tool {spec.name!r} is already registered")
        arg_names = [arg.name for arg in spec.args]
        if len(set(arg_names)) != len(arg_names):
            raise ToolError(f"tool {spec.name!r} has duplicate argument names")
        declared = set(arg_names)
        for var in TEMPLATE_VAR_RE.findall(spec.template):
            if var not in declared:
                raise UnboundTemplateVariable(
                    f"tool {spec.name!r} template uses undeclared variable {var!r}"
                )
        self._tools[spec.name] = spec

    def get(self, name: str) -> ToolSpec:
        try:
            return self._tools[name]
        except KeyError:
            raise UnknownTool(f"unknown tool: {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def tools(self) -> list[ToolSpec]:
        return list(self._tools.values())


def render_tool(spec: ToolSpec, bindings: dict) -> str:
    """Template with every {{var}} replaced by the binding's canonical JSON text."""

    def replace(match: re.Match) -> str:
        var = match.group(1)
        if var not in bindings:
            raise MissingBinding(f"no binding for template variable {var!r}")
        return json.dumps(bindings[var], sort_keys=True)

    return TEMPLATE_VAR_RE.sub(replace, spec.template)


def render_preamble(registry: ToolRegistry) -> str:
    """System-prompt block per tool: name, summary, and argument list."""
    blocks = []
    for spec in registry.tools():
        lines = [f"TOOL {spec.name}", spec.summary, "ARGS:"]
        lines.extend(
            f"  {arg.name} ({arg.type}): {arg.description}" for arg in spec.args
        )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------------
# built-in tools
# ---------------------------------------------------------------------------


def _h_register_dataset(engine: Engine, state: PipelineState, args: dict) -> str:
    source, count = engine.register_dataset(state, args["dataset_id"], args["path"])
    return (
        f"Registered dataset '{source.id}' with {count} records "
        f"(schema {source.detected_schema.name})."
    )


def _h_create_schema(engine: Engine, state: PipelineState, args: dict) -> str:
    schema = engine.create_schema(
        state,
        args["schema_name"],
        args["schema_doc"],
        list(args["field_names"]),
        list(args["field_descriptions"]),
    )
    return f"Created schema {schema.name} with fields {', '.join(schema.field_names)}."


def _h_add_filter(engine: Engine, state: PipelineState, args: dict) -> str:
    plan = engine.add_filter(state, args["predicate"])
    return f"Added filter; the pipeline now has {len(plan.ops)} operators."


def _h_add_convert(engine: Engine, state: PipelineState, args: dict) -> str:
    plan = engine.add_convert(
        state, args["schema_name"], args["cardinality"], args.get("desc", "")
    )
    return (
        f"Added convert to {args['schema_name']} ({args['cardinality']}); "
        f"the pipeline now has {len(plan.ops)} operators."
    )


def _h_set_policy(engine: Engine, state: PipelineState, args: dict) -> str:
    policy = engine.set_policy(state, args["policy"])
    return f"Policy set to {policy_to_json(policy)['type']}."


def _h_execute_pipeline(engine: Engine, state: PipelineState, args: dict) -> str:
    result = engine.execute_pipeline(state)
    return (
        f"Execution complete: {len(result.records)} records, "
        f"cost {result.stats.total_cost_usd!r} USD, "
        f"time {result.stats.total_time_s!r} s, plan {result.chosen.key}."
    )


def _h_get_stats(engine: Engine, state: PipelineState, args: dict) -> str:
    stats = engine.get_stats(state)
    return json.dumps(stats_to_json(stats), sort_keys=True)


def _h_export_code(engine: Engine, state: PipelineState, args: dict) -> str:
    doc, script = engine.export_state(state)
    return f"Exported pipeline definition:\n{dumps_canonical(doc)}{script}"


BUILTIN_TOOLS: tuple[ToolSpec, ...] = (
    ToolSpec(
        name="register_dataset",
        summary=(
            "Register a directory of files as the input dataset. This tool should "
            "be used before any pipeline operators are added."
        ),
        args=(
            ToolArg("dataset_id", "identifier", "Name the dataset is registered under."),
            ToolArg("path", "text", "Directory containing the input files."),
        ),
        template="dataset = register_dataset({{dataset_id}}, {{path}})",
        handler=_h_register_dataset,
    ),
    ToolSpec(
        name="create_schema",
        summary=(
            "Generate a new extraction schema from field names and descriptions. "
            "This tool should be used when the target fields do not exist yet. "
            "Field names cannot have spaces or special characters."
        ),
        args=(
            ToolArg("schema_name", "identifier", "Name of the new schema."),
            ToolArg("schema_doc", "text", "One-line description of the schema."),
            ToolArg("field_names", "list-of-text", "Field names, in order."),
            ToolArg(
                "field_descriptions", "list-of-text", "One description per field name."
            ),
        ),
        template=(
            "schema = make_schema({{schema_name}}, {{schema_doc}}, "
            "{{field_names}}, {{field_descriptions}})"
        ),
        handler=_h_create_schema,
    ),
    ToolSpec(
        name="add_filter",
        summary=(
            "Append a natural-language filter to the pipeline, keeping only the "
            "records that satisfy the predicate."
        ),
        args=(ToolArg("predicate", "text", "Natural-language condition to keep a record."),),
        template="pipeline = pipeline.filter({{predicate}})",
        handler=_h_add_filter,
    ),
    ToolSpec(
        name="add_convert",
        summary=(
            "Append a convert that extracts the target schema's fields from each "
            "record; one_to_many emits one record per extracted item."
        ),
        args=(
            ToolArg("schema_name", "identifier", "Target schema name."),
            ToolArg("cardinality", "text", "one_to_one or one_to_many."),
            ToolArg("desc", "text", "What to extract."),
        ),
        template=(
            "pipeline = pipeline.convert({{schema_name}}, "
            "cardinality={{cardinality}}, desc={{desc}})"
        ),
        handler=_h_add_convert,
    ),
    ToolSpec(
        name="set_policy",
        summary=(
            "Set the optimization policy used to pick the physical plan: max "
            "quality, min cost, min time, or quality under a cost/latency budget."
        ),
        args=(ToolArg("policy", "json", 'Policy object, e.g. {"type": "max_quality"}.'),),
        template="policy = make_policy({{policy}})",
        handler=_h_set_policy,
    ),
    ToolSpec(
        name="execute_pipeline",
        summary=(
            "Optimize and run the current pipeline, storing output records and "
            "execution statistics in the session."
        ),
        args=(),
        template="results, stats = execute(pipeline, policy)",
        handler=_h_execute_pipeline,
    ),
    ToolSpec(
        name="get_stats",
        summary="Report the last execution's statistics: totals and per-operator rows.",
        args=(),
        template="print(stats)",
        handler=_h_get_stats,
    ),
    ToolSpec(
        name="export_code",
        summary=(
            "Export the current pipeline as its canonical definition file plus a "
            "readable script listing."
        ),
        args=(),
        template="export(pipeline, policy)",
        handler=_h_export_code,
    ),
)


def build_builtin_registry() -> ToolRegistry:
    registry = ToolRegistry()
    for spec in BUILTIN_TOOLS:
        registry.register(spec)
    return registry
