"""HTTP session API: submit strokes, get a reconstructed target flow, and
step a guided smoke simulation while polling rendered density frames.

One lock per session serializes its mutations; an overlapping steps call
returns 409 instead of queueing. Idle sessions are swept after a timeout.
"""

from __future__ import annotations

import io
import os
import secrets
import threading
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import dataset as ds
from . import hhd, reconstruct, sim
from .fields import NODE, Grid, MacVelocity, ScalarField, write_field


@dataclass
class Session:
    id: str
    params: sim.SimParams
    state: sim.SimState
    target: MacVelocity
    psi: ScalarField
    frames: list = field(default_factory=list)  # PNG bytes, densely indexed
    created: float = field(default_factory=time.monotonic)
    touched: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


def _parse_params(body: dict) -> sim.SimParams:
    import json

    return sim.SimParams.from_json(json.dumps(body.get("params", {})))


def _fit_target(body: dict, grid: Grid):
    """Strokes -> (psi, target velocity, fit report dict).

    If STAGE1_CMD / STAGE2_CMD are set, the corresponding stage runs as an
    external process through the SFLD file contract instead of the built-in
    least-squares baseline / discrete curl.
    """
    import json as _json
    import tempfile

    strokes_doc = body.get("strokes") or {"domain": [grid.lx, grid.ly], "strokes": []}
    strokes = reconstruct.StrokeSet.from_json(_json.dumps(strokes_doc))
    stage1 = os.environ.get("STAGE1_CMD")
    stage2 = os.environ.get("STAGE2_CMD")

    if stage1:
        with tempfile.TemporaryDirectory() as tmp:
            in_path = os.path.join(tmp, "strokes.json")
            out_path = os.path.join(tmp, "psi.sfld")
            with open(in_path, "w") as fh:
                fh.write(strokes.to_json())
            reconstruct.run_external_generator(stage1, in_path, out_path)
            psi, _ = reconstruct.validate_generated_field(out_path, NODE, grid)
        report = {"external": "stage1"}
    else:
        psi, fit = reconstruct.fit_stream_function(strokes, reconstruct.FitParams(grid=grid))
        report = {
            "no_constraints": fit.no_constraints,
            "n_samples": fit.n_samples,
            "stroke_cosines": fit.stroke_cosines,
            "median_cosine": None if fit.no_constraints else fit.median_cosine,
        }

    if stage2:
        with tempfile.TemporaryDirectory() as tmp:
            in_path = os.path.join(tmp, "psi.sfld")
            out_path = os.path.join(tmp, "vel.sfld")
            write_field(in_path, psi)
            reconstruct.run_external_generator(stage2, in_path, out_path)
            target, _ = reconstruct.validate_generated_field(out_path, "mac", grid)
        report["external_stage2"] = True
    else:
        target = hhd.curl_velocity(psi)
    return psi, target, report


def create_app(max_sessions: int = 16, idle_timeout_secs: float = 600.0) -> FastAPI:
    app = FastAPI(title="smokeflow service")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    app.state.sessions = sessions
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(RequestValidationError)
    async def _invalid_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "invalid body"})

    def sweep():
        now = time.monotonic()
        with registry_lock:
            dead = [
                sid for sid, s in sessions.items() if now - s.touched > idle_timeout_secs
            ]
            for sid in dead:
                del sessions[sid]

    def get_session(sid: str) -> Session | None:
        sweep()
        with registry_lock:
            return sessions.get(sid)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"detail": "invalid body"})
        if not isinstance(body, dict):
            return JSONResponse(status_code=400, content={"detail": "invalid body"})
        sweep()
        with registry_lock:
            if len(sessions) >= max_sessions:
                return JSONResponse(status_code=503, content={"detail": "session capacity reached"})
        try:
            params = _parse_params(body)
        except (ValueError, TypeError) as exc:
            return JSONResponse(status_code=400, content={"detail": f"invalid params: {exc}"})
        try:
            psi, target, report = _fit_target(body, params.grid)
        except (ValueError, KeyError) as exc:
            return JSONResponse(status_code=422, content={"detail": f"degenerate strokes: {exc}"})

        state = sim.emit(sim.SimState.at_rest(params.grid), params)
        session = Session(
            id=secrets.token_hex(8), params=params, state=state, target=target, psi=psi
        )
        with registry_lock:
            if len(sessions) >= max_sessions:
                return JSONResponse(status_code=503, content={"detail": "session capacity reached"})
            sessions[session.id] = session
        psi_stats = {
            "min": float(np.min(psi.data)),
            "max": float(np.max(psi.data)),
            "l2": float(np.linalg.norm(psi.data)),
        }
        return {"id": session.id, "psi_stats": psi_stats, "fit_report": report}

    @app.post("/sessions/{sid}/steps")
    async def run_steps(sid: str, request: Request):
        try:
            body = await request.json()
            count = int(body.get("count", 0))
        except Exception:
            return JSONResponse(status_code=400, content={"detail": "invalid body"})
        if count < 0:
            return JSONResponse(status_code=400, content={"detail": "count must be >= 0"})
        session = get_session(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        if not session.lock.acquire(blocking=False):
            return JSONResponse(status_code=409, content={"detail": "steps already running"})
        try:
            session.touched = time.monotonic()
            cfl_max = 0.0
            added = 0
            for _ in range(count):
                try:
                    session.state = sim.step(session.state, session.params, session.target)
                except sim.ProjectionError as exc:
                    return JSONResponse(
                        status_code=500,
                        content={
                            "detail": str(exc),
                            "iterations": exc.stats.iterations,
                            "final_residual": exc.stats.final_residual,
                        },
                    )
                cfl_max = max(cfl_max, session.state.cfl)
                session.frames.append(ds.density_png_bytes(session.state.density))
                added += 1
            session.touched = time.monotonic()
            return {"frames_added": added, "cfl_max": cfl_max}
        finally:
            session.lock.release()

    @app.put("/sessions/{sid}/strokes")
    async def retarget(sid: str, request: Request):
        try:
            body = await request.json()
        except Exception:
            return JSONResponse(status_code=400, content={"detail": "invalid body"})
        session = get_session(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        try:
            psi, target, report = _fit_target({"strokes": body.get("strokes")}, session.params.grid)
        except (ValueError, KeyError) as exc:
            return JSONResponse(status_code=422, content={"detail": f"degenerate strokes: {exc}"})
        with session.lock:
            session.psi = psi
            session.target = target
            session.touched = time.monotonic()
        return {"fit_report": report}

    @app.get("/sessions/{sid}/frames/{n}")
    def get_frame(sid: str, n: int):
        session = get_session(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        session.touched = time.monotonic()
        if n < 0 or n >= len(session.frames):
            return JSONResponse(status_code=404, content={"detail": "no such frame"})
        return Response(content=session.frames[n], media_type="image/png")

    @app.get("/sessions/{sid}/field")
    def get_raw_field(sid: str, kind: str = "velocity"):
        session = get_session(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        session.touched = time.monotonic()
        import tempfile

        if kind == "velocity":
            obj = session.state.vel
        elif kind == "psi":
            obj = session.psi
        else:
            return JSONResponse(status_code=400, content={"detail": "kind must be velocity or psi"})
        with tempfile.NamedTemporaryFile(suffix=".sfld") as tmp:
            write_field(tmp.name, obj)
            tmp.seek(0)
            data = tmp.read()
        return Response(content=data, media_type="application/octet-stream")

    @app.get("/sessions/{sid}/info")
    def get_info(sid: str):
        session = get_session(sid)
        if session is None:
            return JSONResponse(status_code=404, content={"detail": "unknown session"})
        return {
            "id": session.id,
            "frames": len(session.frames),
            "step_index": session.state.step_index,
            "time": session.state.time,
        }

    return app
