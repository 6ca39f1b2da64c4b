"""Threaded protocol server: accepts connections, answers capability ops.

Requests on one connection are handled by a bounded worker pool, so
responses may come back in any order; clients match them by request_id.
A malformed or unknown request produces an error frame and the connection
stays open; only an unparseable stream closes it.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .adapters import load_adapters
from .frames import FrameError, pack, read_frame

logger = logging.getLogger(__name__)

CAPABILITIES = ("prompt_encoder", "vae", "noise_predictor", "line_extractor")

_OP_CAPABILITY = {
    "encode_prompt": "prompt_encoder",
    "vae_encode": "vae",
    "vae_decode": "vae",
    "predict_noise": "noise_predictor",
    "extract_lines": "line_extractor",
}


@dataclass
class BridgeConfig:
    listen: str = "127.0.0.1:8876"
    capabilities: Dict[str, str] = field(default_factory=lambda: {
        "prompt_encoder": "reference",
        "vae": "reference",
        "noise_predictor": "reference",
        "line_extractor": "reference",
    })
    styles: Dict[str, str] = field(default_factory=lambda: {
        "anime": "reference",
        "realistic": "reference",
    })
    precision: str = "float32"
    seed: int = 0
    max_workers: int = 4


class BridgeServer:
    def __init__(self, config: BridgeConfig):
        self.config = config
        self._adapters = {}
        for capability in CAPABILITIES:
            identifier = config.capabilities.get(capability, "")
            if identifier:
                self._adapters[capability] = load_adapters(
                    identifier, seed=config.seed, precision=config.precision
                )
        for style, identifier in config.styles.items():
            load_adapters(identifier, seed=config.seed, precision=config.precision)

        host, _, port = config.listen.rpartition(":")
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host or "127.0.0.1", int(port)))
        self._sock.listen(16)
        self.address = "{}:{}".format(*self._sock.getsockname())
        self._pool = ThreadPoolExecutor(max_workers=config.max_workers,
                                        thread_name_prefix="bridge")
        self._accept_thread: Optional[threading.Thread] = None
        self._stopping = threading.Event()

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "BridgeServer":
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()
        logger.info("bridge listening on %s", self.address)
        return self

    def stop(self):
        self._stopping.set()
        try:
            self._sock.close()
        except OSError:
            pass
        self._pool.shutdown(wait=False)

    def serve_forever(self):
        self.start()
        try:
            while not self._stopping.wait(1.0):
                pass
        except KeyboardInterrupt:
            self.stop()

    # -- connection handling ---------------------------------------------------

    def _accept_loop(self):
        while not self._stopping.is_set():
            try:
                conn, peer = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._connection_loop, args=(conn, peer),
                             daemon=True).start()

    def _connection_loop(self, conn: socket.socket, peer):
        write_lock = threading.Lock()
        try:
            while True:
                header, tensors = read_frame(conn)
                self._pool.submit(self._handle, conn, write_lock, header, tensors)
        except FrameError as exc:
            logger.info("connection %s closed: %s", peer, exc)
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def _reply(self, conn, write_lock, header, tensors=()):
        frame = pack(header, tensors)
        with write_lock:
            conn.sendall(frame)

    def _handle(self, conn, write_lock, header, tensors):
        rid = header.get("request_id")
        op = header.get("op", "")
        started = time.perf_counter()
        try:
            out = self._dispatch(op, header, tensors)
        except Exception as exc:  # noqa: BLE001 - reported as an error frame
            self._reply(conn, write_lock,
                        {"request_id": rid, "error": str(exc), "shapes": []})
            return
        finally:
            logger.info("op=%s request_id=%s latency_ms=%.2f", op, rid,
                        (time.perf_counter() - started) * 1e3)
        self._reply(conn, write_lock,
                    {"request_id": rid, "dtype": "f32",
                     "shapes": [list(t.shape) for t in out]}, out)

    def _capability(self, op: str):
        capability = _OP_CAPABILITY.get(op)
        if capability is None:
            raise ValueError(f"unknown op {op!r}")
        adapters = self._adapters.get(capability)
        if adapters is None:
            raise ValueError(f"capability {capability!r} is not loaded")
        return adapters

    def _dispatch(self, op: str, header: Dict, tensors) -> Tuple[np.ndarray, ...]:
        adapters = self._capability(op)
        if op == "encode_prompt":
            style = header.get("style", "")
            if style not in self.config.styles:
                raise ValueError(f"unknown style {style!r}")
            return (adapters.encode_prompt(header.get("text", ""), style),)
        if op == "vae_encode":
            self._expect(tensors, 1, op)
            return (adapters.vae_encode(tensors[0]),)
        if op == "vae_decode":
            self._expect(tensors, 1, op)
            return (adapters.vae_decode(tensors[0]),)
        if op == "predict_noise":
            count = int(header.get("latent_count", 0))
            timesteps = header.get("timesteps", [])
            if count < 1 or len(tensors) != 2 * count or len(timesteps) != count:
                raise ValueError("predict_noise needs latent_count latents, embeds, timesteps")
            return tuple(adapters.predict_noise(tensors[:count], timesteps, tensors[count:]))
        if op == "extract_lines":
            self._expect(tensors, 1, op)
            return (adapters.extract_lines(tensors[0]),)
        raise ValueError(f"unknown op {op!r}")

    @staticmethod
    def _expect(tensors, n, op):
        if len(tensors) != n:
            raise ValueError(f"{op} expects {n} tensor(s), got {len(tensors)}")


def serve_bridge(config: BridgeConfig) -> BridgeServer:
    """Start a bridge server; returns the running instance."""
    return BridgeServer(config).start()
