"""Shared fixtures: fixture paths, catalogs, providers, and the replay scenario."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from sempipe import DatasetRegistry, Engine, MockProvider, load_catalog, load_mock_rules
from sempipe.agent import AgentSession, ScriptedLLM, build_builtin_registry, run_agent

FIXTURES = Path(__file__).parent / "fixtures"
PAPERS_DIR = FIXTURES / "papers"
GOLDEN = FIXTURES / "golden"

SCENARIO_MESSAGE = "Extract the publicly available clinical datasets from the colorectal cancer papers."


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def papers_dir() -> Path:
    return PAPERS_DIR


@pytest.fixture
def catalog():
    return load_catalog(FIXTURES / "catalog.json")


@pytest.fixture
def mock_rules():
    return load_mock_rules(FIXTURES / "mock_rules.json")


@pytest.fixture
def provider(mock_rules) -> MockProvider:
    return MockProvider(mock_rules)


@pytest.fixture
def registry(papers_dir) -> DatasetRegistry:
    registry = DatasetRegistry()
    registry.register_dataset("sigmod-demo", papers_dir)
    return registry


def scenario_script(papers_dir: Path) -> list[str]:
    text = (FIXTURES / "agent_script.json").read_text(encoding="utf-8")
    return json.loads(text.replace("${PAPERS_DIR}", str(papers_dir)))


def run_scenario(papers_dir: Path | None = None) -> tuple[AgentSession, Engine, MockProvider]:
    """Drive the scripted chat flow end to end; returns session, engine, provider."""
    papers = papers_dir if papers_dir is not None else PAPERS_DIR
    provider = MockProvider(load_mock_rules(FIXTURES / "mock_rules.json"))
    engine = Engine(catalog=load_catalog(FIXTURES / "catalog.json"), provider=provider)
    session = AgentSession(id="s-0001")
    run_agent(
        session,
        SCENARIO_MESSAGE,
        ScriptedLLM(scenario_script(papers)),
        engine,
        build_builtin_registry(),
    )
    return session, engine, provider
