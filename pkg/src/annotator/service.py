"""HTTP annotation service: a live human stands in for the oracle.

One campaign per server, one session at a time, one pending query at a
time. The session walks the same :class:`~annotator.loop.CampaignEngine`
the in-process loop uses, so a campaign driven over HTTP with ground-truth
replay produces a journal identical to the simulated-oracle run.

Endpoints (all JSON over HTTP/1.1, under ``/api/v1``):

- ``GET  /session``                   create-or-get the session
- ``GET  /session/{sid}/next``        pending query (idempotent)
- ``POST /session/{sid}/label``       submit labels for the pending query
- ``GET  /scan/{scan_id}/points``     downsampled scan for display
- ``GET  /stats``                     selected-class frequency report
- ``GET  /classes``                   class palette for the UI

All state mutations are serialized through one lock; scan payloads are
read-only and served concurrently.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import UsageError
from .loop import CampaignEngine
from .report import class_frequencies


class LabelSubmission(BaseModel):
    scan_id: str
    coord: tuple[int, int, int]
    labels: list[int] = Field(min_length=1)


class AnnotationService:
    """Campaign state shared by the HTTP handlers."""

    def __init__(self, engine: CampaignEngine, class_names: dict[int, str] | None = None):
        self.engine = engine
        self.class_names = class_names or {}
        self.session_id: str | None = None
        self.lock = threading.Lock()
        self.status = "awaiting_label" if not engine.done else "done"

    def ensure_session(self) -> str:
        with self.lock:
            if self.session_id is None:
                self.session_id = uuid.uuid4().hex[:12]
            return self.session_id

    def check_session(self, sid: str) -> None:
        if self.session_id is None or sid != self.session_id:
            raise HTTPException(status_code=404, detail="unknown session")

    def query_payload(self) -> dict:
        engine = self.engine
        pending = engine.next_query()
        if pending is None:
            raise HTTPException(
                status_code=409,
                detail={"status": "done", "progress": engine.progress()},
            )
        scan = engine.target[pending.scan_ordinal]
        pts = scan.cloud.data[list(pending.point_indices)]
        return {
            "session_id": self.session_id,
            "status": self.status,
            "scan_id": pending.scan_id,
            "round": pending.round_index,
            "coord": list(pending.coord),
            "voxel_size": engine.config.voxel_size,
            "strategy": pending.strategy,
            "score": pending.score,
            "point_indices": list(pending.point_indices),
            "points": [[float(v) for v in row] for row in pts],
            "class_count": engine.class_count,
            "progress": engine.progress(),
        }


def create_app(
    engine: CampaignEngine,
    class_names: dict[int, str] | None = None,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="annotator", version="0.1.0")
    state = AnnotationService(engine, class_names)
    app.state.annotation = state

    @app.get("/api/v1/session")
    def get_session():
        sid = state.ensure_session()
        with state.lock:
            return {
                "session_id": sid,
                "status": "done" if engine.done else state.status,
                "progress": engine.progress(),
            }

    @app.get("/api/v1/session/{sid}/next")
    def next_query(sid: str):
        state.check_session(sid)
        with state.lock:
            return state.query_payload()

    @app.post("/api/v1/session/{sid}/label")
    def submit_label(sid: str, submission: LabelSubmission):
        state.check_session(sid)
        with state.lock:
            pending = engine.next_query()
            if pending is None:
                raise HTTPException(status_code=409, detail="campaign done")
            if (
                submission.scan_id != pending.scan_id
                or tuple(submission.coord) != pending.coord
            ):
                raise HTTPException(
                    status_code=409,
                    detail=(
                        f"pending query is {pending.scan_id}@{list(pending.coord)}, "
                        f"got {submission.scan_id}@{list(submission.coord)}"
                    ),
                )
            if len(submission.labels) != len(pending.point_indices):
                raise HTTPException(
                    status_code=422,
                    detail=(
                        f"expected {len(pending.point_indices)} labels, "
                        f"got {len(submission.labels)}"
                    ),
                )
            if any(not 1 <= v <= engine.class_count for v in submission.labels):
                raise HTTPException(
                    status_code=422,
                    detail=f"labels must lie in 1..{engine.class_count}",
                )
            state.status = "advancing"  # a retrain may run before the next query
            try:
                engine.submit_labels(submission.scan_id, submission.coord, submission.labels)
            except UsageError as exc:  # engine-level mismatch catches races
                raise HTTPException(status_code=409, detail=str(exc))
            finally:
                state.status = "done" if engine.done else "awaiting_label"
            return {"ok": True, "status": state.status, "progress": engine.progress()}

    @app.get("/api/v1/scan/{scan_id}/points")
    def scan_points(scan_id: str, stride: int = Query(default=1, ge=1)):
        ordinal = engine._ordinal_of.get(scan_id)
        if ordinal is None:
            raise HTTPException(status_code=404, detail="unknown scan")
        data = engine.target[ordinal].cloud.data
        sampled = data[::stride]
        return {
            "scan_id": scan_id,
            "count_total": int(data.shape[0]),
            "stride": stride,
            "indices": list(range(0, data.shape[0], stride)),
            "points": [[float(v) for v in row] for row in sampled],
        }

    @app.get("/api/v1/stats")
    def stats():
        with state.lock:
            base = {
                s.scan_id: s.labels for s in engine.target if s.labels is not None
            }
            if not base:
                return JSONResponse(
                    {"base_available": False, "entries": len(engine.journal)}
                )
            report = class_frequencies(engine.journal.entries, base, state.class_names)
            return {
                "base_available": True,
                "empty": report.empty,
                "classes": [
                    {
                        "class_id": c.class_id,
                        "name": c.name,
                        "selected_count": c.selected_count,
                        "selected_share": c.selected_share,
                        "base_share": c.base_share,
                        "lift": None if c.infinite_lift else c.lift,
                        "infinite_lift": c.infinite_lift,
                    }
                    for c in report.classes
                ],
            }

    @app.get("/api/v1/classes")
    def classes():
        return {
            "class_count": engine.class_count,
            "classes": [
                {"id": k, "name": state.class_names.get(k, f"class_{k}")}
                for k in range(1, engine.class_count + 1)
            ],
        }

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

    return app
