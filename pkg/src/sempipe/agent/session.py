"""The reason-and-act loop over a chat session.

Each user message runs a fresh step budget (default 10 LLM turns). Every turn
is parsed into steps; Actions invoke tool handlers against the session's
pipeline state, with a state snapshot taken first so a failing handler leaves
the state exactly as it was. Unparseable turns get a corrective Observation and
count against the budget; exhausting the budget appends a Final Answer.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from ..engine import Engine, PipelineState
from .steps import (
    Action,
    AgentStep,
    FinalAnswer,
    Observation,
    Thought,
    UnparseableStep,
    format_step,
    parse_turn,
    step_from_json,
    step_to_json,
)
from .tools import MissingBinding, ToolRegistry, render_preamble, render_tool

DEFAULT_STEP_BUDGET = 10

PROMPT_INSTRUCTIONS = (
    "Respond with an optional 'Thought:' line followed by either an 'Action:' "
    "line naming one tool and an 'Action Input:' line holding a one-line JSON "
    "object of its arguments, or a 'Final Answer:' line for the user."
)


class LLMUnavailable(RuntimeError):
    """The chat model cannot produce a turn; the session is left intact."""


class ScriptedLLM:
    """Replays a fixed list of turn texts; deterministic chat double."""

    def __init__(self, outputs: list[str]) -> None:
        self.outputs = list(outputs)
        self.index = 0

    def complete_chat(self, prompt: str) -> str:
        if self.index >= len(self.outputs):
            raise LLMUnavailable("scripted outputs exhausted")
        text = self.outputs[self.index]
        self.index += 1
        return text


def load_script(path: str | Path) -> ScriptedLLM:
    # ${VAR} references expand from the environment so one script file can
    # name machine-local paths; unset variables stay literal.
    outputs = json.loads(Path(path).read_text(encoding="utf-8"))
    return ScriptedLLM([os.path.expandvars(text) for text in outputs])


@dataclass
class AgentSession:
    """One chat session: chronological log plus the pipeline state tools mutate."""

    id: str
    state: PipelineState = field(default_factory=PipelineState)
    # Entries are ("user", text) or ("step", AgentStep), in order.
    log: list[tuple] = field(default_factory=list)
    budget: int = DEFAULT_STEP_BUDGET

    @property
    def transcript(self) -> list[AgentStep]:
        return [item for tag, item in self.log if tag == "step"]


def session_to_json(session: AgentSession) -> dict:
    from ..engine import state_to_json

    entries = []
    for tag, item in session.log:
        if tag == "user":
            entries.append({"kind": "user", "text": item})
        else:
            entries.append(step_to_json(item))
    return {
        "id": session.id,
        "budget": session.budget,
        "log": entries,
        "state": state_to_json(session.state),
    }


def session_from_json(doc: dict, registry) -> AgentSession:
    from ..engine import state_from_json

    log: list[tuple] = []
    for entry in doc.get("log", []):
        if entry.get("kind") == "user":
            log.append(("user", entry["text"]))
        else:
            log.append(("step", step_from_json(entry)))
    return AgentSession(
        id=doc["id"],
        state=state_from_json(doc.get("state") or {}, registry),
        log=log,
        budget=doc.get("budget", DEFAULT_STEP_BUDGET),
    )


def build_prompt(tools: ToolRegistry, session: AgentSession, user_message: str) -> str:
    """System preamble, format instructions, then the chronological conversation."""
    convo = []
    for tag, item in session.log:
        if tag == "user":
            convo.append(f"User: {item}")
        else:
            convo.append(format_step(item))
    return "\n\n".join([render_preamble(tools), PROMPT_INSTRUCTIONS, "\n".join(convo)])


def _invoke_action(
    engine: Engine, tools: ToolRegistry, session: AgentSession, action: Action
) -> str:
    if action.tool_name not in tools:
        return f"ERROR: unknown tool {action.tool_name!r}"
    spec = tools.get(action.tool_name)
    try:
        render_tool(spec, action.args)
    except MissingBinding as exc:
        return f"ERROR: {exc}"
    snap = session.state.snapshot()
    try:
        return spec.handler(engine, session.state, action.args)
    except Exception as exc:
        session.state.restore(snap)
        return f"ERROR: {type(exc).__name__}: {exc}"


def run_agent(
    session: AgentSession,
    user_message: str,
    llm,
    engine: Engine,
    tools: ToolRegistry,
    on_step: Callable[[AgentStep], None] | None = None,
) -> AgentSession:
    """Drive the loop for one user message until Final Answer or budget exhaustion."""

    def append(step: AgentStep) -> None:
        session.log.append(("step", step))
        if on_step is not None:
            on_step(step)

    session.log.append(("user", user_message))
    steps_used = 0
    while steps_used < session.budget:
        prompt = build_prompt(tools, session, user_message)
        try:
            text = llm.complete_chat(prompt)
        except LLMUnavailable:
            raise
        except Exception as exc:
            raise LLMUnavailable(f"chat model failed: {exc}") from exc
        steps_used += 1
        try:
            steps = parse_turn(text)
        except UnparseableStep as exc:
            append(
                Observation(
                    f"Could not parse that step ({exc}). Respond with 'Action:' plus "
                    "a one-line JSON 'Action Input:', or 'Final Answer:'."
                )
            )
            continue
        for step in steps[:-1]:
            append(step)
        primary = steps[-1]
        append(primary)
        if isinstance(primary, Thought):
            continue
        if isinstance(primary, FinalAnswer):
            return session
        if isinstance(primary, Action):
            append(Observation(_invoke_action(engine, tools, session, primary)))
    append(FinalAnswer(f"Step budget exhausted after {session.budget} steps."))
    return session
