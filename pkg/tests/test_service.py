"""HTTP service: session flow, event streaming, uploads, snapshots, and errors."""

from __future__ import annotations

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from sempipe.agent import ScriptedLLM
from sempipe.service import ServiceConfig, create_app
from tests.conftest import FIXTURES, GOLDEN, PAPERS_DIR, SCENARIO_MESSAGE, scenario_script


def make_config(tmp_path) -> ServiceConfig:
    return ServiceConfig(
        datasets_root=str(tmp_path / "datasets"),
        snapshots_dir=str(tmp_path / "snapshots"),
        catalog_path=str(FIXTURES / "catalog.json"),
        mock_rules_path=str(FIXTURES / "mock_rules.json"),
    )


def make_client(tmp_path, llm=None) -> TestClient:
    return TestClient(create_app(make_config(tmp_path), llm=llm))


def scenario_llm() -> ScriptedLLM:
    return ScriptedLLM(scenario_script(PAPERS_DIR))


def fetch_events(client: TestClient, session_id: str, after: int = 0) -> list[dict]:
    response = client.get(f"/sessions/{session_id}/events", params={"after": after})
    assert response.status_code == 200
    return [json.loads(line) for line in response.text.splitlines()]


def wait_for_snapshot(tmp_path, session_id: str, timeout: float = 10.0) -> dict:
    """Wait until the session snapshot has its terminal step persisted."""
    path = tmp_path / "snapshots" / f"{session_id}.json"
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if path.is_file():
            doc = json.loads(path.read_text(encoding="utf-8"))
            log = doc.get("log", [])
            if log and log[-1].get("kind") == "final_answer":
                return doc
        time.sleep(0.02)
    raise AssertionError(f"snapshot for {session_id} not finalized within {timeout}s")


def run_chat_flow(client: TestClient, tmp_path) -> str:
    response = client.post("/sessions")
    session_id = response.json()["session_id"]
    accepted = client.post(f"/sessions/{session_id}/messages", json={"text": SCENARIO_MESSAGE})
    assert accepted.status_code == 202
    assert accepted.json() == {"status": "accepted"}
    wait_for_snapshot(tmp_path, session_id)
    return session_id


# -- sessions and messages -------------------------------------------------------


def test_create_session_ids(tmp_path):
    client = make_client(tmp_path)
    assert client.post("/sessions").json() == {"session_id": "s-0001"}
    assert client.post("/sessions").json() == {"session_id": "s-0002"}


def test_chat_flow_event_stream(tmp_path):
    client = make_client(tmp_path, llm=scenario_llm())
    session_id = run_chat_flow(client, tmp_path)
    events = fetch_events(client, session_id)
    assert [e["seq"] for e in events] == list(range(1, 20))
    assert [e["kind"] for e in events] == ["thought", "action", "observation"] * 6 + [
        "final_answer"
    ]
    assert events[-1]["payload"]["text"] == "Extracted 6 clinical data datasets from 11 papers."
    first_action = events[1]
    assert first_action["payload"]["tool"] == "register_dataset"
    assert first_action["payload"]["rendered"].startswith(
        'dataset = register_dataset("sigmod-demo", '
    )


def test_event_stream_resume(tmp_path):
    client = make_client(tmp_path, llm=scenario_llm())
    session_id = run_chat_flow(client, tmp_path)
    tail = fetch_events(client, session_id, after=3)
    assert [e["seq"] for e in tail] == list(range(4, 20))
    assert fetch_events(client, session_id, after=19) == []


def test_events_unknown_session(tmp_path):
    client = make_client(tmp_path)
    assert client.get("/sessions/s-9999/events").status_code == 404


def test_message_validation(tmp_path):
    client = make_client(tmp_path, llm=scenario_llm())
    session_id = client.post("/sessions").json()["session_id"]
    url = f"/sessions/{session_id}/messages"
    assert client.post(url, content=b"not json").status_code == 400
    assert client.post(url, json={"text": ""}).status_code == 400
    assert client.post(url, json={"wrong": "key"}).status_code == 400
    assert client.post(url, json=["text"]).status_code == 400
    assert client.post("/sessions/s-9999/messages", json={"text": "hi"}).status_code == 404


def test_message_without_chat_model(tmp_path):
    client = make_client(tmp_path, llm=None)
    session_id = client.post("/sessions").json()["session_id"]
    response = client.post(f"/sessions/{session_id}/messages", json={"text": "hi"})
    assert response.status_code == 503


class GatedLLM:
    """Blocks the first turn until released, to hold the session busy."""

    def __init__(self, inner: ScriptedLLM) -> None:
        self.inner = inner
        self.gate = threading.Event()

    def complete_chat(self, prompt: str) -> str:
        assert self.gate.wait(timeout=10)
        return self.inner.complete_chat(prompt)


def test_second_message_while_busy_is_rejected(tmp_path):
    gated = GatedLLM(scenario_llm())
    client = make_client(tmp_path, llm=gated)
    session_id = client.post("/sessions").json()["session_id"]
    url = f"/sessions/{session_id}/messages"
    assert client.post(url, json={"text": SCENARIO_MESSAGE}).status_code == 202
    busy = client.post(url, json={"text": "again"})
    assert busy.status_code == 409
    gated.gate.set()
    wait_for_snapshot(tmp_path, session_id)
    assert len(fetch_events(client, session_id)) == 19


def test_agent_failure_becomes_error_final_answer(tmp_path):
    client = make_client(tmp_path, llm=ScriptedLLM([]))
    session_id = client.post("/sessions").json()["session_id"]
    assert (
        client.post(f"/sessions/{session_id}/messages", json={"text": "hi"}).status_code
        == 202
    )
    wait_for_snapshot(tmp_path, session_id)
    events = fetch_events(client, session_id)
    assert len(events) == 1
    assert events[0]["kind"] == "final_answer"
    assert events[0]["payload"]["text"].startswith("ERROR: ")


# -- snapshots ---------------------------------------------------------------------


def test_snapshot_restore_reproduces_events(tmp_path):
    client = make_client(tmp_path, llm=scenario_llm())
    session_id = run_chat_flow(client, tmp_path)
    original = client.get(f"/sessions/{session_id}/events").text

    restored_client = make_client(tmp_path)
    assert restored_client.get(f"/sessions/{session_id}/events").text == original
    assert restored_client.post("/sessions").json() == {"session_id": "s-0002"}


def test_snapshot_restore_keeps_state_endpoints(tmp_path):
    client = make_client(tmp_path, llm=scenario_llm())
    session_id = run_chat_flow(client, tmp_path)

    restored_client = make_client(tmp_path)
    pipeline = restored_client.get(f"/sessions/{session_id}/pipeline").json()
    assert pipeline["diagnostics"] == []
    assert [op["type"] for op in pipeline["plan"]["ops"]] == ["filter", "convert"]
    stats = restored_client.get(f"/sessions/{session_id}/stats").json()
    assert stats["total_cost_usd"] == 0.15
    results = restored_client.get(f"/sessions/{session_id}/results").json()
    assert results["total"] == 6


# -- datasets ----------------------------------------------------------------------


def test_upload_dataset(tmp_path):
    client = make_client(tmp_path)
    response = client.post(
        "/datasets",
        data={"dataset_id": "tiny"},
        files=[
            ("files", ("a.txt", b"alpha text", "text/plain")),
            ("files", ("b.txt", b"beta text", "text/plain")),
        ],
    )
    assert response.status_code == 200
    assert response.json() == {"dataset_id": "tiny", "record_count": 2, "schema": "TextFile"}
    assert (tmp_path / "datasets" / "tiny" / "a.txt").read_bytes() == b"alpha text"
    registry_doc = json.loads(
        (tmp_path / "snapshots" / "registry.json").read_text(encoding="utf-8")
    )
    assert any(s["id"] == "tiny" for s in registry_doc)


def test_upload_validation(tmp_path):
    client = make_client(tmp_path)
    no_files = client.post("/datasets", data={"dataset_id": "tiny"})
    assert no_files.status_code == 422
    blank_id = client.post(
        "/datasets",
        data={"dataset_id": ""},
        files=[("files", ("a.txt", b"x", "text/plain"))],
    )
    assert blank_id.status_code == 422


# -- inspection endpoints ------------------------------------------------------------


def test_pipeline_before_any_dataset(tmp_path):
    client = make_client(tmp_path)
    session_id = client.post("/sessions").json()["session_id"]
    assert client.get(f"/sessions/{session_id}/pipeline").json() == {
        "plan": None,
        "diagnostics": ["no dataset"],
    }


def test_stats_before_any_execution(tmp_path):
    client = make_client(tmp_path)
    session_id = client.post("/sessions").json()["session_id"]
    assert client.get(f"/sessions/{session_id}/stats").status_code == 404
    assert client.get(f"/sessions/{session_id}/export").status_code == 404


def test_results_pagination(tmp_path):
    client = make_client(tmp_path, llm=scenario_llm())
    session_id = run_chat_flow(client, tmp_path)
    full = client.get(f"/sessions/{session_id}/results").json()
    assert full["total"] == 6
    assert [r["id"] for r in full["records"]] == [
        "rec-0001/0",
        "rec-0001/1",
        "rec-0004/0",
        "rec-0006/0",
        "rec-0006/1",
        "rec-0009/0",
    ]
    page = client.get(
        f"/sessions/{session_id}/results", params={"offset": 2, "limit": 2}
    ).json()
    assert page["total"] == 6
    assert [r["id"] for r in page["records"]] == ["rec-0004/0", "rec-0006/0"]
    beyond = client.get(
        f"/sessions/{session_id}/results", params={"offset": 10, "limit": 5}
    ).json()
    assert beyond["records"] == []


def test_export_matches_goldens(tmp_path):
    client = make_client(tmp_path, llm=scenario_llm())
    session_id = run_chat_flow(client, tmp_path)
    export = client.get(f"/sessions/{session_id}/export").json()
    golden_pipeline = json.loads((GOLDEN / "pipeline.json").read_text(encoding="utf-8"))
    assert export["pipeline"] == golden_pipeline
    assert export["script"] == (GOLDEN / "script.txt").read_text(encoding="utf-8")


def test_cross_origin_requests_allowed(tmp_path):
    # The browser client is served from its own origin.
    client = make_client(tmp_path)
    response = client.post("/sessions", headers={"Origin": "http://localhost:8080"})
    assert response.status_code == 200
    assert response.headers["access-control-allow-origin"] == "*"
    preflight = client.options(
        "/sessions/s-0001/events",
        headers={
            "Origin": "http://localhost:8080",
            "Access-Control-Request-Method": "GET",
        },
    )
    assert preflight.status_code == 200
    assert "GET" in preflight.headers["access-control-allow-methods"]


def test_unknown_provider_mode_rejected(tmp_path):
    config = make_config(tmp_path)
    config.provider_mode = "telepathy"
    with pytest.raises(ValueError, match="unknown provider mode"):
        create_app(config)
