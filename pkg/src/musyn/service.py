"""Local HTTP session service hosting interactive DK-iteration.

Each session runs dk_iterate on its own worker thread; the interactive
strategy's decision channel is bridged to HTTP: the iteration message is
exposed in the session state and the client's decision message is posted
back. Decision submission is an atomic check-and-set on the session phase.
Sessions are in-memory only; the service binds loopback by default.
"""

from __future__ import annotations

import os
import queue
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .dkiter import ChannelClosed, DecisionChannel, InteractiveOrder, dk_iterate
from .errors import MusynError

PHASES = ("synthesizing", "awaiting_choice", "analyzing", "done", "failed")


class HttpChannel(DecisionChannel):
    """Bridges the blocking decision channel to the HTTP state machine."""

    def __init__(self, session):
        self.session = session
        self.replies = queue.Queue()

    def request(self, message: dict) -> dict:
        s = self.session
        with s.lock:
            if s.stop_requested:
                raise ChannelClosed("session stopped")
            s.message = message
            s.iterations.append(
                {
                    "index": message["index"],
                    "peak": message["peak"],
                    "gamma": message["gamma"],
                }
            )
            s.phase = "awaiting_choice"
        reply = self.replies.get()
        if reply is None:
            raise ChannelClosed("session stopped")
        return reply


class Session:
    def __init__(self, spec, grid, config):
        self.id = uuid.uuid4().hex
        self.lock = threading.Lock()
        self.phase = "synthesizing"
        self.message = None
        self.iterations = []  # peak/gamma per posted iteration message
        self.result = None
        self.error = None
        self.stop_requested = False
        self.channel = HttpChannel(self)
        self.spec = spec
        self.grid = grid
        self.config = config
        self.worker = threading.Thread(target=self._run, daemon=True)

    def start(self):
        self.worker.start()

    def _run(self):
        strategy = InteractiveOrder(
            self.channel, max_order=int(self.config.get("max_order", 4))
        )
        try:
            result = dk_iterate(
                self.spec,
                self.grid,
                strategy,
                synthesis=self.config.get("synthesis", "lmi"),
                ssv_tol=float(self.config.get("ssv_tol", 1e-4)),
            )
        except MusynError as e:
            with self.lock:
                self.phase = "failed"
                self.error = str(e)
            return
        with self.lock:
            self.result = result
            self.phase = "done"

    def state(self) -> dict:
        with self.lock:
            return {
                "id": self.id,
                "phase": self.phase,
                "message": self.message,
                "error": self.error,
            }

    def submit_choice(self, decision: dict) -> bool:
        """Atomic check-and-set: only one decision per awaiting_choice phase."""
        with self.lock:
            if self.phase != "awaiting_choice":
                return False
            self.phase = "synthesizing"
        self.channel.replies.put(decision)
        return True

    def stop(self):
        with self.lock:
            self.stop_requested = True
            awaiting = self.phase == "awaiting_choice"
            if awaiting:
                self.phase = "synthesizing"
        if awaiting:
            self.channel.replies.put({"type": "stop"})

    def result_json(self) -> dict:
        r = self.result
        return {
            "peak": r.peak,
            "converged": r.converged,
            "controller": r.controller.to_dict(),
            "iterations": [
                {
                    "index": rec.index,
                    "orders": list(rec.orders),
                    "peak": float(rec.peak),
                    "gamma": float(rec.gamma),
                    "omega": [float(w) for w in rec.omega],
                    "mu_upper": [float(m) for m in rec.mu_upper],
                }
                for rec in r.records
            ],
        }


def _parse_session_request(body: dict):
    from .cli import UsageError, parse_grid
    from .dkiter import RobustPerformanceSpec
    from .lti import GeneralizedPlant
    from .ssv import BlockStructure

    try:
        spec_data = body["spec"]
        plant = GeneralizedPlant.from_dict(spec_data["plant"])
        unc = spec_data.get("uncertainty")
        structure = BlockStructure.from_json(unc) if unc else None
        spec = RobustPerformanceSpec(
            plant, structure, int(spec_data["n_w2"]), int(spec_data["n_z2"])
        )
        grid = parse_grid(body.get("grid", "0.01:100:100:log"))
    except (KeyError, TypeError, ValueError, UsageError, MusynError) as e:
        raise HTTPException(status_code=422, detail=f"bad session request: {e}")
    return spec, grid, body.get("config", {})


def default_static_dir():
    env = os.environ.get("MUSYN_STATIC_DIR")
    if env:
        return Path(env)
    packaged = Path(__file__).parent / "static"
    return packaged if packaged.is_dir() else None


def create_app(static_dir=None) -> FastAPI:
    app = FastAPI(title="musyn session service")
    sessions: dict[str, Session] = {}
    store_lock = threading.Lock()

    def get_session(session_id: str) -> Session:
        with store_lock:
            session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session id")
        return session

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        spec, grid, config = _parse_session_request(body)
        session = Session(spec, grid, config)
        with store_lock:
            sessions[session.id] = session
        session.start()
        return {"id": session.id}

    @app.get("/sessions/{session_id}")
    def session_state(session_id: str):
        return get_session(session_id).state()

    @app.post("/sessions/{session_id}/choice")
    def session_choice(session_id: str, decision: dict):
        session = get_session(session_id)
        kind = decision.get("type")
        if kind not in ("choose", "accept", "stop"):
            raise HTTPException(
                status_code=422, detail=f"unknown decision type {kind!r}"
            )
        if kind == "choose" and not isinstance(decision.get("order"), int):
            raise HTTPException(status_code=422, detail="choose needs an order")
        if not session.submit_choice(decision):
            return JSONResponse(
                status_code=409,
                content={
                    "detail": "no decision pending",
                    "phase": session.state()["phase"],
                },
            )
        return {"ok": True}

    @app.get("/sessions/{session_id}/result")
    def session_result(session_id: str):
        session = get_session(session_id)
        with session.lock:
            done = session.phase == "done"
        if not done:
            raise HTTPException(status_code=404, detail="result not ready")
        return session.result_json()

    @app.delete("/sessions/{session_id}")
    def session_delete(session_id: str):
        session = get_session(session_id)
        session.stop()
        session.worker.join(timeout=60.0)
        state = session.state()
        best = None
        if state["phase"] == "done":
            best = session.result_json()
        elif session.iterations:
            best = {"iterations": list(session.iterations)}
        with store_lock:
            sessions.pop(session_id, None)
        return {"phase": state["phase"], "best": best}

    if static_dir is None:
        static_dir = default_static_dir()
    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True))
    return app


def run_service(host: str = "127.0.0.1", port: int = 8760, static_dir=None):
    import uvicorn

    uvicorn.run(create_app(static_dir), host=host, port=port, log_level="warning")
