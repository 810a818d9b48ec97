"""HTTP service: chat sessions, dataset upload, pipeline inspection, and export.

Messages are accepted with 202 and processed by a per-session worker thread;
agent steps stream back as newline-delimited JSON events {seq, kind, payload}
in transcript order, resumable via ?after=. One message runs at a time per
session (409 otherwise). Sessions persist as one JSON snapshot file each and
are restored on startup, events included.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .agent import (
    Action,
    AgentSession,
    FinalAnswer,
    ToolRegistry,
    build_builtin_registry,
    load_script,
    render_tool,
    run_agent,
    session_from_json,
    session_to_json,
    step_to_json,
)
from .engine import Engine
from .executor import stats_to_json
from .ingest import DatasetRegistry, count_records
from .logical import plan_to_json, validate_plan
from .physical import load_catalog
from .providers import MockProvider, load_http_provider, load_mock_rules
from .schema import record_to_json
from .serialize import dumps_canonical

_SESSION_ID_RE = re.compile(r"s-(\d+)\.json\Z")


@dataclass
class ServiceConfig:
    datasets_root: str
    snapshots_dir: str
    catalog_path: str | None = None
    provider_mode: str = "mock"
    mock_rules_path: str | None = None
    provider_config_path: str | None = None
    llm_script_path: str | None = None
    workers: int = 1


class _SessionEntry:
    """A live session plus its event log and serialization guard."""

    def __init__(self, session: AgentSession) -> None:
        self.session = session
        self.events: list[dict] = []
        self.busy = False
        self.lock = threading.Lock()
        now = datetime.now(timezone.utc).isoformat()
        self.created_at = now
        self.updated_at = now


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def create_app(
    config: ServiceConfig, llm=None, provider=None
) -> FastAPI:
    datasets_root = Path(config.datasets_root)
    snapshots_dir = Path(config.snapshots_dir)
    datasets_root.mkdir(parents=True, exist_ok=True)
    snapshots_dir.mkdir(parents=True, exist_ok=True)

    registry_path = snapshots_dir / "registry.json"
    if registry_path.is_file():
        registry = DatasetRegistry.from_json(
            json.loads(registry_path.read_text(encoding="utf-8"))
        )
    else:
        registry = DatasetRegistry()

    if provider is None:
        if config.provider_mode == "mock":
            if config.mock_rules_path:
                provider = MockProvider(load_mock_rules(config.mock_rules_path))
        elif config.provider_mode == "real":
            if config.provider_config_path:
                provider = load_http_provider(config.provider_config_path)
        else:
            raise ValueError(f"unknown provider mode: {config.provider_mode!r}")
    if llm is None and config.llm_script_path:
        llm = load_script(config.llm_script_path)

    catalog = load_catalog(config.catalog_path) if config.catalog_path else []
    engine = Engine(
        registry=registry, catalog=catalog, provider=provider, workers=config.workers
    )
    tools: ToolRegistry = build_builtin_registry()

    sessions: dict[str, _SessionEntry] = {}
    sessions_lock = threading.Lock()

    def event_for(step, seq: int) -> dict:
        doc = step_to_json(step)
        kind = doc.pop("kind")
        if kind == "action" and isinstance(step, Action):
            if step.tool_name in tools:
                try:
                    doc["rendered"] = render_tool(tools.get(step.tool_name), step.args)
                except Exception:
                    doc["rendered"] = None
            else:
                doc["rendered"] = None
        return {"seq": seq, "kind": kind, "payload": doc}

    def append_event(entry: _SessionEntry, step) -> None:
        with entry.lock:
            entry.events.append(event_for(step, len(entry.events) + 1))

    def write_atomic(path: Path, text: str) -> None:
        # Readers polling the file must never see a partial write.
        fd, tmp_name = tempfile.mkstemp(dir=snapshots_dir)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
            os.replace(tmp_name, path)
        except BaseException:
            os.unlink(tmp_name)
            raise

    def save_registry() -> None:
        write_atomic(registry_path, dumps_canonical(registry.to_json()))

    def save_session(entry: _SessionEntry) -> None:
        doc = session_to_json(entry.session)
        doc["created_at"] = entry.created_at
        doc["updated_at"] = entry.updated_at
        write_atomic(snapshots_dir / f"{entry.session.id}.json", dumps_canonical(doc))

    # Restore persisted sessions, rebuilding each event log from its transcript.
    next_session_number = 1
    for path in sorted(snapshots_dir.glob("s-*.json")):
        match = _SESSION_ID_RE.search(path.name)
        if not match:
            continue
        doc = json.loads(path.read_text(encoding="utf-8"))
        session = session_from_json(doc, registry)
        entry = _SessionEntry(session)
        entry.created_at = doc.get("created_at", entry.created_at)
        entry.updated_at = doc.get("updated_at", entry.updated_at)
        for step in session.transcript:
            entry.events.append(event_for(step, len(entry.events) + 1))
        sessions[session.id] = entry
        next_session_number = max(next_session_number, int(match.group(1)) + 1)

    counter = {"next": next_session_number}

    app = FastAPI(title="sempipe service")
    # The browser client is a static page on its own origin.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def get_entry(session_id: str) -> _SessionEntry:
        with sessions_lock:
            entry = sessions.get(session_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
        return entry

    @app.post("/sessions")
    def create_session() -> dict:
        with sessions_lock:
            session_id = f"s-{counter['next']:04d}"
            counter["next"] += 1
            entry = _SessionEntry(AgentSession(id=session_id))
            sessions[session_id] = entry
        save_session(entry)
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/messages", status_code=202)
    async def post_message(session_id: str, request: Request) -> dict:
        entry = get_entry(session_id)
        try:
            body = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body must be a JSON object")
        if not isinstance(body, dict) or not isinstance(body.get("text"), str) or not body["text"]:
            raise HTTPException(
                status_code=400, detail="body must be {\"text\": <non-empty string>}"
            )
        if llm is None:
            raise HTTPException(status_code=503, detail="no chat model configured")
        with entry.lock:
            if entry.busy:
                raise HTTPException(
                    status_code=409, detail="a message is already being processed"
                )
            entry.busy = True

        def process() -> None:
            try:
                run_agent(
                    entry.session,
                    body["text"],
                    llm,
                    engine,
                    tools,
                    on_step=lambda step: append_event(entry, step),
                )
            except Exception as exc:
                # Surface the failure as a terminal step; prior state is intact.
                step = FinalAnswer(f"ERROR: {exc}")
                entry.session.log.append(("step", step))
                append_event(entry, step)
            finally:
                entry.updated_at = _now()
                # Registry first: a restored snapshot must find every dataset it names.
                save_registry()
                save_session(entry)
                with entry.lock:
                    entry.busy = False

        threading.Thread(target=process, daemon=True).start()
        return {"status": "accepted"}

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, after: int = 0) -> StreamingResponse:
        entry = get_entry(session_id)

        def stream():
            cursor = max(after, 0)
            while True:
                with entry.lock:
                    pending = list(entry.events[cursor:])
                    busy = entry.busy
                for event in pending:
                    cursor += 1
                    yield json.dumps(event, sort_keys=True) + "\n"
                if pending and pending[-1]["kind"] == "final_answer":
                    return
                if not busy and not pending:
                    return
                time.sleep(0.02)

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.post("/datasets")
    async def upload_dataset(
        dataset_id: str = Form(...), files: list[UploadFile] = File(...)
    ) -> dict:
        target = datasets_root / dataset_id
        target.mkdir(parents=True, exist_ok=True)
        for upload in files:
            name = Path(upload.filename or "").name
            if not name:
                raise HTTPException(status_code=400, detail="file without a name")
            (target / name).write_bytes(await upload.read())
        source = registry.register_dataset(dataset_id, target)
        save_registry()
        return {
            "dataset_id": dataset_id,
            "record_count": count_records(source),
            "schema": source.detected_schema.name,
        }

    @app.get("/sessions/{session_id}/pipeline")
    def get_pipeline(session_id: str) -> dict:
        entry = get_entry(session_id)
        plan = entry.session.state.plan
        if plan is None:
            return {"plan": None, "diagnostics": ["no dataset"]}
        return {"plan": plan_to_json(plan), "diagnostics": validate_plan(plan)}

    @app.get("/sessions/{session_id}/results")
    def get_results(session_id: str, offset: int = 0, limit: int = 50) -> dict:
        entry = get_entry(session_id)
        records = entry.session.state.results or []
        page = records[max(offset, 0) : max(offset, 0) + max(limit, 0)]
        return {
            "total": len(records),
            "offset": offset,
            "limit": limit,
            "records": [record_to_json(r) for r in page],
        }

    @app.get("/sessions/{session_id}/stats")
    def get_stats(session_id: str) -> dict:
        entry = get_entry(session_id)
        stats = entry.session.state.stats
        if stats is None:
            raise HTTPException(status_code=404, detail="no execution yet")
        return stats_to_json(stats)

    @app.get("/sessions/{session_id}/export")
    def get_export(session_id: str) -> dict:
        entry = get_entry(session_id)
        state = entry.session.state
        if state.plan is None:
            raise HTTPException(status_code=404, detail="no pipeline to export")
        doc, script = engine.export_state(state)
        return {"pipeline": doc, "script": script}

    return app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(prog="sempipe-serve", description=__doc__)
    parser.add_argument("--config", required=True, help="service config JSON path")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)
    doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    provider_doc = doc.get("provider", {})
    llm_doc = doc.get("llm", {})
    config = ServiceConfig(
        datasets_root=doc["datasets_root"],
        snapshots_dir=doc["snapshots_dir"],
        catalog_path=doc.get("catalog_path"),
        provider_mode=provider_doc.get("mode", "mock"),
        mock_rules_path=provider_doc.get("rules_path"),
        provider_config_path=provider_doc.get("config_path"),
        llm_script_path=llm_doc.get("script_path"),
        workers=doc.get("workers", 1),
    )
    app = create_app(config)
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port)


if __name__ == "__main__":
    main()
