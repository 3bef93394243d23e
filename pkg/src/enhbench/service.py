"""HTTP API for running a rating study.

Contract paths:
  GET  /study/{id}/session?worker=W  -> session payload (no sentinel markers)
  POST /study/{id}/response          -> {"session", "pair", "label_index"}
  GET  /study/{id}/report            -> aggregated pair ratings

Images referenced by the study definition are served under /images/ when
an image root is configured; a static frontend bundle can be mounted at
/app.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .psychstudy import (
    NoValidatedSessionsError,
    StudyDefinition,
    StudyError,
    StudyState,
)


class ResponseBody(BaseModel):
    session: str
    pair: str
    label_index: int = Field(ge=0, le=4)


def session_payload(state: StudyState, worker: str) -> dict:
    plan = state.assign_session(worker)
    # sentinel/expected/swapped fields are deliberately withheld
    return {
        "session_id": plan.session_id,
        "labels": list(state.study.labels),
        "items": [
            {"item_id": it.item_id, "left_url": it.left, "right_url": it.right}
            for it in plan.items
        ],
    }


def create_app(
    study: StudyDefinition,
    state: StudyState,
    *,
    image_root: str | Path | None = None,
    frontend_root: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="enhbench rating study")

    def check_study(study_id: str) -> None:
        if study_id != study.study_id:
            raise HTTPException(status_code=404, detail=f"unknown study {study_id!r}")

    @app.get("/study/{study_id}/session")
    def get_session(study_id: str, worker: str = Query(..., min_length=1)):
        check_study(study_id)
        try:
            return session_payload(state, worker)
        except StudyError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc

    @app.post("/study/{study_id}/response")
    def post_response(study_id: str, body: ResponseBody):
        check_study(study_id)
        try:
            ordinal = state.record_response(body.session, body.pair, body.label_index)
        except StudyError as exc:
            status = 409 if "duplicate" in str(exc) else 404
            raise HTTPException(status_code=status, detail=str(exc)) from exc
        return {"ok": True, "ordinal": ordinal}

    @app.get("/study/{study_id}/report")
    def get_report(study_id: str):
        check_study(study_id)
        try:
            from .psychstudy import aggregate_ratings

            return aggregate_ratings(study, state).to_json_dict()
        except NoValidatedSessionsError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc

    if image_root is not None:
        app.mount("/images", StaticFiles(directory=str(image_root)), name="images")
    if frontend_root is not None:
        app.mount("/app", StaticFiles(directory=str(frontend_root), html=True), name="app")
    return app
