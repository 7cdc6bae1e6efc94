"""HTTP service for annotation sessions.

JSON API under /api/v1, optionally fronted by static assets for the web
interface. Task payloads go out exactly as stored in the session file, so
presentation order is fixed server-side and the gold never leaves the
dataset file.
"""

from __future__ import annotations

import socket
from dataclasses import asdict
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from lexsel.annotate.agreement import agreement, judgment_matrix
from lexsel.annotate.store import JudgmentStore
from lexsel.annotate.tasks import Session, load_session
from lexsel.logs import emit


class JudgmentIn(BaseModel):
    task_id: str
    annotator_id: str
    value: str


def create_app(
    session: Session, store: JudgmentStore, static_dir: str | Path | None = None
) -> FastAPI:
    app = FastAPI(title="annotation service", docs_url=None, redoc_url=None)
    task_by_id = {t.id: t for t in session.tasks}

    def _annotator_tasks(annotator: str):
        if annotator not in session.annotator_ids:
            raise HTTPException(status_code=404, detail=f"unknown annotator {annotator!r}")
        return session.tasks_for(annotator)

    @app.get("/api/v1/session")
    def session_info():
        return {
            "id": session.id,
            "kind": session.kind,
            "annotator_ids": list(session.annotator_ids),
            "total_tasks": len(session.tasks),
        }

    @app.get("/api/v1/tasks/next")
    def next_task(annotator: str):
        answered = store.latest()
        for task in _annotator_tasks(annotator):
            if (task.id, annotator) not in answered:
                return asdict(task)
        return Response(status_code=204)

    @app.post("/api/v1/judgments", status_code=201)
    def submit_judgment(body: JudgmentIn):
        task = task_by_id.get(body.task_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown task {body.task_id!r}")
        if task.annotator_id != body.annotator_id:
            raise HTTPException(
                status_code=400,
                detail=f"task {body.task_id!r} belongs to {task.annotator_id!r}",
            )
        judgment = store.record(body.task_id, body.annotator_id, body.value)
        return {
            "task_id": judgment.task_id,
            "annotator_id": judgment.annotator_id,
            "value": judgment.value,
        }

    @app.get("/api/v1/progress")
    def progress(annotator: str):
        tasks = _annotator_tasks(annotator)
        answered = store.latest()
        done = sum(1 for t in tasks if (t.id, annotator) in answered)
        return {"done": done, "total": len(tasks)}

    @app.get("/api/v1/reports/agreement")
    def agreement_report(requested: str = Query("", alias="session")):
        if requested and requested != session.id:
            raise HTTPException(status_code=404, detail=f"unknown session {requested!r}")
        matrix, refs, annotators = judgment_matrix(
            store.latest().values(), session.annotator_ids
        )
        if not matrix or len(annotators) < 2:
            return JSONResponse(
                status_code=409,
                content={"detail": "no complete items to compute agreement over"},
            )
        report = agreement(matrix)
        return {**report.to_json(), "item_refs": refs, "annotators": annotators}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def serve(
    session_path: str | Path,
    port: int = 8000,
    host: str = "127.0.0.1",
    judgments_path: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> None:
    """Run the service until interrupted. Port 0 binds an ephemeral port;
    either way the bound port is announced on stderr before serving."""
    import uvicorn

    session = load_session(session_path)
    if judgments_path is None:
        judgments_path = Path(session_path).with_suffix(".judgments.jsonl")
    store = JudgmentStore(judgments_path)
    app = create_app(session, store, static_dir=static_dir)

    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((host, port))
    # Listen before announcing, so a client that reacts to the event gets
    # queued by the kernel even while uvicorn is still starting up.
    sock.listen(128)
    bound_port = sock.getsockname()[1]
    emit("serving", host=host, port=bound_port, session=session.id)
    config = uvicorn.Config(app, log_level="warning")
    server = uvicorn.Server(config)
    server.run(sockets=[sock])
