"""Reason-and-act chat agent: step grammar, tool registry, and session loop."""

from .session import (
    DEFAULT_STEP_BUDGET,
    AgentSession,
    LLMUnavailable,
    ScriptedLLM,
    build_prompt,
    load_script,
    run_agent,
    session_from_json,
    session_to_json,
)
from .steps import (
    Action,
    AgentStep,
    FinalAnswer,
    Observation,
    Thought,
    UnparseableStep,
    format_step,
    parse_step,
    parse_turn,
    step_from_json,
    step_to_json,
)
from .tools import (
    BUILTIN_TOOLS,
    DuplicateTool,
    MissingBinding,
    ToolArg,
    ToolError,
    ToolRegistry,
    ToolSpec,
    UnboundTemplateVariable,
    UnknownTool,
    build_builtin_registry,
    render_preamble,
    render_tool,
)

__all__ = [
    "DEFAULT_STEP_BUDGET",
    "AgentSession",
    "LLMUnavailable",
    "ScriptedLLM",
    "build_prompt",
    "load_script",
    "run_agent",
    "session_from_json",
    "session_to_json",
    "Action",
    "AgentStep",
    "FinalAnswer",
    "Observation",
    "Thought",
    "UnparseableStep",
    "format_step",
    "parse_step",
    "parse_turn",
    "step_from_json",
    "step_to_json",
    "BUILTIN_TOOLS",
    "DuplicateTool",
    "MissingBinding",
    "ToolArg",
    "ToolError",
    "ToolRegistry",
    "ToolSpec",
    "UnboundTemplateVariable",
    "UnknownTool",
    "build_builtin_registry",
    "render_preamble",
    "render_tool",
]
