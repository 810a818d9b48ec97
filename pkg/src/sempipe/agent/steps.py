"""Reason-and-act step grammar.

LLM turns are parsed line by line with case-sensitive keys: an optional
`Thought:` line, then either an `Action:` line followed by a one-line JSON
`Action Input:`, or a `Final Answer:`. format_step is the inverse rendering, so
parse_step(format_step(s)) is the identity for Thought, Action, and FinalAnswer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Union

THOUGHT_PREFIX = "Thought: "
ACTION_PREFIX = "Action: "
ACTION_INPUT_PREFIX = "Action Input: "
FINAL_ANSWER_PREFIX = "Final Answer: "
OBSERVATION_PREFIX = "Observation: "


class UnparseableStep(ValueError):
    """LLM output matching neither the action nor the final-answer pattern."""


@dataclass(frozen=True)
class Thought:
    text: str


@dataclass(frozen=True)
class Action:
    tool_name: str
    args: dict


@dataclass(frozen=True)
class Observation:
    text: str


@dataclass(frozen=True)
class FinalAnswer:
    text: str


AgentStep = Union[Thought, Action, Observation, FinalAnswer]


def format_step(step: AgentStep) -> str:
    if isinstance(step, Thought):
        return f"{THOUGHT_PREFIX}{step.text}"
    if isinstance(step, Action):
        args = json.dumps(step.args, sort_keys=True)
        return f"{ACTION_PREFIX}{step.tool_name}\n{ACTION_INPUT_PREFIX}{args}"
    if isinstance(step, Observation):
        return f"{OBSERVATION_PREFIX}{step.text}"
    if isinstance(step, FinalAnswer):
        return f"{FINAL_ANSWER_PREFIX}{step.text}"
    raise TypeError(f"not an agent step: {step!r}")


def parse_turn(text: str) -> list[AgentStep]:
    """All steps in one LLM turn: [Thought], [Thought, primary], or [primary]."""
    lines = text.splitlines()
    steps: list[AgentStep] = []
    i = 0
    n = len(lines)
    while i < n and not lines[i].strip():
        i += 1
    if i < n and lines[i].startswith(THOUGHT_PREFIX):
        steps.append(Thought(lines[i][len(THOUGHT_PREFIX):]))
        i += 1
        while i < n and not lines[i].strip():
            i += 1
    if i < n and lines[i].startswith(ACTION_PREFIX):
        tool_name = lines[i][len(ACTION_PREFIX):].strip()
        i += 1
        while i < n and not lines[i].strip():
            i += 1
        if i >= n or not lines[i].startswith(ACTION_INPUT_PREFIX):
            raise UnparseableStep("Action line without an Action Input line")
        raw = lines[i][len(ACTION_INPUT_PREFIX):]
        try:
            args = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise UnparseableStep(f"Action Input is not valid JSON: {exc}") from None
        if not isinstance(args, dict):
            raise UnparseableStep("Action Input must be a JSON object")
        steps.append(Action(tool_name=tool_name, args=args))
        return steps
    if i < n and lines[i].startswith(FINAL_ANSWER_PREFIX):
        remainder = [lines[i][len(FINAL_ANSWER_PREFIX):]] + lines[i + 1 :]
        steps.append(FinalAnswer("\n".join(remainder)))
        return steps
    if steps and i >= n:
        return steps
    raise UnparseableStep(
        "expected 'Action:' with 'Action Input:', 'Final Answer:', or a lone 'Thought:'"
    )


def parse_step(text: str) -> AgentStep:
    """The turn's primary step (its Thought prefix, if any, is dropped)."""
    return parse_turn(text)[-1]


def step_to_json(step: AgentStep) -> dict:
    if isinstance(step, Thought):
        return {"kind": "thought", "text": step.text}
    if isinstance(step, Action):
        return {"kind": "action", "tool": step.tool_name, "args": step.args}
    if isinstance(step, Observation):
        return {"kind": "observation", "text": step.text}
    if isinstance(step, FinalAnswer):
        return {"kind": "final_answer", "text": step.text}
    raise TypeError(f"not an agent step: {step!r}")


def step_from_json(doc: dict) -> AgentStep:
    kind = doc.get("kind")
    if kind == "thought":
        return Thought(doc["text"])
    if kind == "action":
        return Action(tool_name=doc["tool"], args=dict(doc["args"]))
    if kind == "observation":
        return Observation(doc["text"])
    if kind == "final_answer":
        return FinalAnswer(doc["text"])
    raise ValueError(f"unknown step kind: {kind!r}")
