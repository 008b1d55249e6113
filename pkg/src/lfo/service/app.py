"""HTTP review service: the preview/correction GUI's backend.

serve_api starts the service on a local port and returns a handle whose
stop() shuts it down; create_app builds the bare ASGI app.

Every mutating request re-validates the draft and returns a fresh report;
export is refused while violations or unresolved review markers exist unless
the caller forces it.
"""

from __future__ import annotations

import os
import socket
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from ..errors import LfoError
from .models import (
    ExportRequest,
    ExportResponse,
    LabanRowModel,
    LabanView,
    PatchFrameRequest,
    PatchFrameResponse,
    SegmentModel,
    SessionDetail,
    SessionSummary,
    ValidationReport,
    ViolationModel,
    PendingModel,
    FrameModel,
)
from .sessions import SessionStore, frame_payload


def _report(state) -> ValidationReport:
    violations = [ViolationModel(frame=v.frame_index, message=v.message)
                  for v in state.violations]
    pending = [PendingModel(frame=i, markers=m) for i, m in state.pending]
    return ValidationReport(ok=not violations and not pending,
                            violations=violations, pending=pending)


def create_app(data_dir=None, ui_dir=None) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("LFO_DATA_DIR", "."))
    store = SessionStore(data_dir)
    app = FastAPI(title="lfo review service", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    app.state.store = store

    def _load(session_id: str):
        try:
            return store.load(session_id)
        except KeyError:
            raise HTTPException(404, f"no session {session_id!r}")
        except LfoError as e:
            raise HTTPException(500, str(e))

    @app.get("/api/sessions", response_model=list[SessionSummary])
    def list_sessions():
        out = []
        for sid in store.session_ids():
            state = _load(sid)
            out.append(SessionSummary(
                id=sid, recording=state.recording_path.name,
                frames=len(state.program.frames), edits=len(state.edits),
                ok=not state.violations and not state.pending,
                pending=len(state.pending)))
        return out

    @app.get("/api/session/{session_id}", response_model=SessionDetail)
    def get_session(session_id: str):
        state = _load(session_id)
        rec = state.result.segments[0].recording
        signal = rec.activity_signal()
        return SessionDetail(
            id=session_id,
            recording=state.recording_path.name,
            actor=state.program.actor,
            object=state.program.object_name,
            segments=[SegmentModel(index=s.index, t_start=s.t_start, t_end=s.t_end,
                                   instruction=s.instruction)
                      for s in state.result.segments],
            frames=[FrameModel(**frame_payload(i, f))
                    for i, f in enumerate(state.program.frames)],
            report=_report(state),
            edits=len(state.edits),
            activity=list(signal.samples),
            sample_rate=signal.sample_rate,
            pauses=[s.t_end for s in state.result.segments],
        )

    @app.get("/api/session/{session_id}/laban", response_model=LabanView)
    def get_laban(session_id: str):
        _ = _load(session_id)
        try:
            score, text = store.laban_view(session_id)
        except LfoError as e:
            raise HTTPException(422, str(e))
        rows = [LabanRowModel(t=row.time,
                              tokens={s.column: s.direction.token for s in row.symbols})
                for row in score.rows]
        return LabanView(columns=list(score.columns), rows=rows, text=text)

    @app.patch("/api/session/{session_id}/frames/{index}",
               response_model=PatchFrameResponse)
    def patch_frame(session_id: str, index: int, body: PatchFrameRequest):
        _ = _load(session_id)
        edit = {"frame": index, "patch": {}}
        if body.task is not None:
            edit["patch"]["task"] = body.task
        if body.slots:
            edit["patch"]["slots"] = body.slots
        with store.lock(session_id):
            try:
                state = store.append_edit(session_id, edit)
            except LfoError as e:
                raise HTTPException(422, str(e))
        return PatchFrameResponse(
            frame=FrameModel(**frame_payload(index, state.program.frames[index])),
            report=_report(state))

    @app.post("/api/session/{session_id}/validate", response_model=ValidationReport)
    def validate(session_id: str):
        return _report(_load(session_id))

    @app.post("/api/session/{session_id}/export")
    def export(session_id: str, body: ExportRequest = ExportRequest()):
        state = _load(session_id)
        with store.lock(session_id):
            doc, text, path, warnings = store.export(session_id, body.force)
        if doc is None:
            return JSONResponse(status_code=409, content={
                "refused": True, "report": _report(state).model_dump()})
        return ExportResponse(program=doc, text=text, path=str(path),
                              warnings=warnings)

    @app.get("/api/session/{session_id}/trace")
    def get_trace(session_id: str):
        _ = _load(session_id)
        path = store.trace_path(session_id)
        if not path.exists():
            raise HTTPException(404, "no trace recorded for this session (run `lfo simulate`)")
        return PlainTextResponse(path.read_text(encoding="utf-8"),
                                 media_type="application/x-ndjson")

    ui_root = Path(ui_dir) if ui_dir else Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if ui_root.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_root, html=True), name="ui")

    return app


@dataclass
class ServiceHandle:
    """A running review service; stop() shuts it down."""

    server: object
    thread: threading.Thread
    host: str
    port: int

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=10)


def serve_api(port: int, data_dir=None, host: str = "127.0.0.1") -> ServiceHandle:
    """Start the service on a local port; raises if the port is already bound."""
    import uvicorn

    from ..errors import InvalidInputError

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as e:
        raise InvalidInputError(f"port {port} is not free: {e}")
    finally:
        probe.close()

    config = uvicorn.Config(create_app(data_dir), host=host, port=port,
                            log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise InvalidInputError("service failed to start")
        time.sleep(0.02)
    return ServiceHandle(server, thread, host, port)
