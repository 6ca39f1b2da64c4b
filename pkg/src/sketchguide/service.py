"""Network service binding sessions, gate, pipeline, and persistence together.

One WebSocket connection carries JSON control messages for one session.
Client messages: open_session, stroke_begin, stroke_point, stroke_end,
set_prompt, set_style, select_guidance, clear_background, continue_drawing.
Server messages: session_opened, guidance_set, state_changed, round_skipped,
error. Images travel as base64 PNG.

Every session appends its events to data_dir/<session_id>/events.jsonl;
reopening a session replays that log, so reconnects resume exactly where
the user left off. Completed rounds also persist their PNGs under
data_dir/<session_id>/rounds/<round_id>/.
"""

from __future__ import annotations

import asyncio
import base64
import json
import logging
import threading
import time
import uuid
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Callable, Dict, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import session as sess
from .config import ServiceConfig
from .imaging import GrayImage, gray_from_png_bytes, png_bytes, resize_bilinear, save_png
from .pipeline import GenerationRound, PipelineWorker
from .remote import parse_address

logger = logging.getLogger(__name__)


def _b64(img) -> str:
    return base64.b64encode(png_bytes(img)).decode("ascii")


class SessionRuntime:
    """Single-writer wrapper around one session's state, log, and worker."""

    def __init__(self, session_id: str, service: "GuidanceService"):
        self.session_id = session_id
        self.service = service
        self.lock = threading.Lock()
        self.seq = 0
        self.sender: Optional[Callable[[dict], None]] = None

        self.dir = Path(service.config.data_dir) / session_id
        self.dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.dir / "events.jsonl"
        self.state = self._load_or_init()
        self._log_fh = open(self.log_path, "a", encoding="utf-8")

        self.worker = PipelineWorker(
            backend=service.backend,
            caches=service.caches,
            schedule=service.schedule,
            filter_params=service.config.filter_params(),
            on_round=self._on_round,
            on_error=self._on_error,
        )

    def _load_or_init(self) -> sess.SessionState:
        config = self.service.config.session_config()
        if self.log_path.exists():
            events = []
            with open(self.log_path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        record = json.loads(line)
                        events.append(sess.record_to_event(record["payload"]))
                        self.seq = record["seq"]
            logger.info("session %s: replayed %d events", self.session_id, len(events))
            return sess.replay(config, events)
        return sess.initial_state(config)

    # -- event handling (any thread) ---------------------------------------

    def handle(self, event: sess.Event) -> None:
        with self.lock:
            self.state, effects = sess.transition(self.state, event)
            self.seq += 1
            record = {
                "seq": self.seq,
                "timestamp": time.time(),
                "event": type(event).__name__,
                "payload": sess.event_to_record(event),
            }
            self._log_fh.write(json.dumps(record) + "\n")
            self._log_fh.flush()
            for effect in effects:
                self._dispatch(effect)

    def _dispatch(self, effect: sess.Effect) -> None:
        if isinstance(effect, sess.EmitRequest):
            self.worker.queue.enqueue(effect.request)
        elif isinstance(effect, sess.NotifySkip):
            self._send({
                "type": "round_skipped",
                "round_id": effect.round_id,
                "similarity": effect.similarity,
                "probability": effect.probability,
            })
        elif isinstance(effect, sess.NotifyError):
            self._send({"type": "error", "code": effect.code, "message": effect.message})
        elif isinstance(effect, sess.StateChanged):
            msg = {"type": "state_changed", "mode": effect.mode.value}
            if effect.background is not None:
                msg["background"] = _b64(effect.background)
            self._send(msg)
        elif isinstance(effect, sess.GuidanceReady):
            self._send({
                "type": "guidance_set",
                "round_id": effect.round_id,
                "images": [_b64(s) for s in effect.sketches],
            })

    def _send(self, message: dict) -> None:
        sender = self.sender
        if sender is not None:
            sender(message)

    # -- pipeline callbacks (worker thread) ----------------------------------

    def _on_round(self, round_: GenerationRound) -> None:
        try:
            art_dir = self.dir / "rounds" / str(round_.request.round_id)
            art_dir.mkdir(parents=True, exist_ok=True)
            for i, rgb in enumerate(round_.rgb_candidates):
                save_png(rgb, art_dir / f"candidate_{i}.png")
            for i, sketch in enumerate(round_.guidance_sketches):
                save_png(sketch, art_dir / f"guidance_{i}.png")
        except OSError:
            logger.exception("failed to persist round artifacts")
        self.handle(sess.RoundCompleted(
            round_.request.round_id, tuple(round_.guidance_sketches)
        ))

    def _on_error(self, request, exc: Exception) -> None:
        self._send({
            "type": "error",
            "code": "round_failed",
            "message": f"round {request.round_id}: {exc}",
        })

    def close(self) -> None:
        self.worker.stop()
        self._log_fh.flush()
        self._log_fh.close()


class GuidanceService:
    """Shared state behind the app: backend, caches, schedule, sessions."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        try:
            self.backend = config.build_backend()
        except Exception:
            if config.backend == "remote" and config.fallback_to_synthetic:
                logger.warning("remote backend unavailable; falling back to synthetic")
                from .backend import SyntheticBackend

                self.backend = SyntheticBackend(seed=config.backend_seed)
            else:
                raise
        from .scheduler import SchedulerCaches

        self.caches = SchedulerCaches()
        self.schedule = config.build_schedule()
        self._sessions: Dict[str, SessionRuntime] = {}
        self._sessions_lock = threading.Lock()

    def session(self, session_id: Optional[str]) -> SessionRuntime:
        sid = session_id or uuid.uuid4().hex
        with self._sessions_lock:
            runtime = self._sessions.get(sid)
            if runtime is None:
                runtime = SessionRuntime(sid, self)
                self._sessions[sid] = runtime
            return runtime

    def shutdown(self) -> None:
        with self._sessions_lock:
            runtimes = list(self._sessions.values())
            self._sessions.clear()
        for runtime in runtimes:
            runtime.close()


def _decode_canvas(message: dict, runtime: SessionRuntime) -> GrayImage:
    canvas = gray_from_png_bytes(base64.b64decode(message["canvas_png"]))
    cfg = runtime.state.config
    if (canvas.width, canvas.height) != (cfg.width, cfg.height):
        canvas = resize_bilinear(canvas, cfg.width, cfg.height)
    return canvas


def create_app(config: ServiceConfig) -> FastAPI:
    service = GuidanceService(config)

    @asynccontextmanager
    async def lifespan(_app):
        yield
        service.shutdown()

    app = FastAPI(title="sketchguide", version="0.1.0", lifespan=lifespan)
    app.state.service = service

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "backend": config.backend}

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        loop = asyncio.get_running_loop()
        outbox: asyncio.Queue = asyncio.Queue()
        runtime: Optional[SessionRuntime] = None

        async def drain():
            while True:
                message = await outbox.get()
                await websocket.send_json(message)

        drain_task = asyncio.create_task(drain())

        def sender(message: dict) -> None:
            loop.call_soon_threadsafe(outbox.put_nowait, message)

        try:
            while True:
                try:
                    message = await websocket.receive_json()
                except (ValueError, json.JSONDecodeError):
                    sender({"type": "error", "code": "bad_message",
                            "message": "messages must be JSON objects"})
                    continue
                if not isinstance(message, dict) or "type" not in message:
                    sender({"type": "error", "code": "bad_message",
                            "message": "missing message type"})
                    continue

                kind = message["type"]
                if kind == "open_session":
                    if runtime is not None:
                        runtime.sender = None
                    runtime = service.session(message.get("session_id"))
                    runtime.sender = sender
                    sender({
                        "type": "session_opened",
                        "session_id": runtime.session_id,
                        "mode": runtime.state.mode.value,
                        "config": {
                            "working_resolution": config.working_resolution,
                            "styles": list(config.styles),
                            "tau": config.tau,
                            "num_candidates": config.num_candidates,
                        },
                    })
                    continue
                if runtime is None:
                    sender({"type": "error", "code": "no_session",
                            "message": "open_session first"})
                    continue

                try:
                    event = _message_to_event(message, runtime)
                except Exception as exc:  # noqa: BLE001 - reported to client
                    sender({"type": "error", "code": "bad_message", "message": str(exc)})
                    continue
                if event is not None:
                    await asyncio.to_thread(runtime.handle, event)
        except WebSocketDisconnect:
            pass
        finally:
            drain_task.cancel()
            if runtime is not None and runtime.sender is sender:
                runtime.sender = None

    _mount_static(app, config.static_dir)
    return app


def _mount_static(app: FastAPI, static_dir: str) -> None:
    if not static_dir:
        return
    from fastapi.staticfiles import StaticFiles

    root = Path(static_dir)
    if not root.is_dir():
        logger.warning("static_dir %s does not exist; not serving a UI", root)
        return
    # mounted last so /ws and /healthz keep precedence
    app.mount("/", StaticFiles(directory=root, html=True), name="ui")


def _message_to_event(message: dict, runtime: SessionRuntime) -> Optional[sess.Event]:
    kind = message["type"]
    if kind == "stroke_begin":
        return sess.StrokeBegin()
    if kind == "stroke_point":
        return sess.StrokePoint(
            float(message["x"]), float(message["y"]),
            float(message.get("pressure", 1.0)),
        )
    if kind == "stroke_end":
        return sess.StrokeEnd(_decode_canvas(message, runtime))
    if kind == "set_prompt":
        return sess.SetPrompt(str(message["text"]))
    if kind == "set_style":
        return sess.SetStyle(str(message["id"]))
    if kind == "select_guidance":
        return sess.SelectGuidance(int(message["index"]))
    if kind == "clear_background":
        return sess.ClearBackground()
    if kind == "continue_drawing":
        return sess.ContinueDrawing()
    raise ValueError(f"unknown message type {kind!r}")


def serve(config: ServiceConfig) -> None:
    """Run the service until interrupted (blocking)."""
    import uvicorn

    host, port = parse_address(config.listen)
    uvicorn.run(create_app(config), host=host, port=port, log_level="info")
