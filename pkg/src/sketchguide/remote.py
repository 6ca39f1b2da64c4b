"""Remote backend client speaking the length-prefixed tensor frame protocol.

One stream connection carries pipelined requests; a reader thread dispatches
responses to waiters by request_id. In-flight requests are bounded. On
transport failure every pending request fails fast and the next call
reconnects. Line extraction degrades to the classical extractor on failure
instead of aborting the round.
"""

from __future__ import annotations

import itertools
import logging
import socket
import threading
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .backend import (
    BackendDescriptor,
    BackendError,
    BackendKind,
    EmbedArg,
    ModelBackend,
    PromptEmbedding,
    _broadcast_embeds,
)
from .imaging import GrayImage, Latent, RgbImage, rgb_to_gray
from .optimizer import XdogParams, xdog_extract
from .wire import ProtocolError, read_frame, write_frame

logger = logging.getLogger(__name__)


class _Slot:
    __slots__ = ("event", "header", "tensors")

    def __init__(self):
        self.event = threading.Event()
        self.header: Optional[Dict] = None
        self.tensors: Optional[List[np.ndarray]] = None


def parse_address(address: str) -> Tuple[str, int]:
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {address!r}")
    return host, int(port)


class RemoteBackend(ModelBackend):
    def __init__(
        self,
        address: str,
        descriptor: Optional[BackendDescriptor] = None,
        timeout: float = 30.0,
        max_in_flight: int = 4,
    ):
        self.address = parse_address(address)
        self.descriptor = descriptor or BackendDescriptor(BackendKind.REMOTE)
        self.timeout = timeout
        self._sem = threading.BoundedSemaphore(max_in_flight)
        self._send_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._pending: Dict[int, _Slot] = {}
        self._ids = itertools.count(1)
        self._sock: Optional[socket.socket] = None
        self._reader: Optional[threading.Thread] = None

    # -- connection management -------------------------------------------

    def _ensure_connected(self) -> socket.socket:
        with self._state_lock:
            if self._sock is not None:
                return self._sock
            try:
                sock = socket.create_connection(self.address, timeout=self.timeout)
            except OSError as exc:
                raise BackendError(f"cannot reach backend at {self.address}: {exc}") from exc
            sock.settimeout(None)
            self._sock = sock
            self._reader = threading.Thread(
                target=self._read_loop, args=(sock,), daemon=True
            )
            self._reader.start()
            return sock

    def _read_loop(self, sock: socket.socket) -> None:
        try:
            while True:
                header, tensors = read_frame(sock)
                rid = header.get("request_id")
                with self._state_lock:
                    slot = self._pending.pop(rid, None)
                if slot is None:
                    logger.warning("response for unknown request_id %r dropped", rid)
                    continue
                slot.header, slot.tensors = header, tensors
                slot.event.set()
        except (ProtocolError, OSError) as exc:
            self._fail_pending(sock, exc)

    def _fail_pending(self, sock: socket.socket, exc: Exception) -> None:
        with self._state_lock:
            if self._sock is sock:
                self._sock = None
            pending = list(self._pending.values())
            self._pending.clear()
        for slot in pending:
            slot.header = {"error": f"connection lost: {exc}"}
            slot.tensors = []
            slot.event.set()
        try:
            sock.close()
        except OSError:
            pass

    def close(self) -> None:
        with self._state_lock:
            sock, self._sock = self._sock, None
        if sock is not None:
            try:
                sock.close()
            except OSError:
                pass

    # -- request plumbing --------------------------------------------------

    def _request(self, header: Dict, tensors: Sequence[np.ndarray]) -> Tuple[Dict, List[np.ndarray]]:
        with self._sem:
            sock = self._ensure_connected()
            rid = next(self._ids)
            header = dict(header, request_id=rid, dtype="f32")
            slot = _Slot()
            with self._state_lock:
                self._pending[rid] = slot
            try:
                with self._send_lock:
                    write_frame(sock, header, tensors)
            except OSError as exc:
                self._fail_pending(sock, exc)
                raise BackendError(f"send failed: {exc}") from exc
            if not slot.event.wait(self.timeout):
                with self._state_lock:
                    self._pending.pop(rid, None)
                raise BackendError(f"backend timed out after {self.timeout}s ({header['op']})")
            if "error" in slot.header:
                raise BackendError(str(slot.header["error"]))
            return slot.header, slot.tensors

    @staticmethod
    def _expect_shapes(tensors: List[np.ndarray], shapes: Sequence[Tuple[int, ...]], op: str):
        got = [t.shape for t in tensors]
        if got != [tuple(s) for s in shapes]:
            raise ProtocolError(f"{op}: backend returned shapes {got}, expected {list(shapes)}")

    # -- capabilities -------------------------------------------------------

    def encode_prompt(self, text: str, style: str) -> PromptEmbedding:
        if style not in self.descriptor.styles:
            raise ValueError(f"unknown style {style!r}; known: {self.descriptor.styles}")
        header = {"op": "encode_prompt", "shapes": [], "text": text, "style": style}
        _, tensors = self._request(header, [])
        if len(tensors) != 1 or tensors[0].ndim != 2:
            raise ProtocolError("encode_prompt: expected one 2-D embedding tensor")
        return PromptEmbedding(np.asarray(tensors[0], dtype=np.float64))

    def vae_encode(self, img: RgbImage) -> Latent:
        ds = self.descriptor.latent_downscale
        h, w = img.data.shape[:2]
        if h % ds or w % ds:
            raise ValueError(f"image dims {w}x{h} not divisible by {ds}")
        header = {"op": "vae_encode", "shapes": [list(img.data.shape)]}
        _, tensors = self._request(header, [img.data])
        self._expect_shapes(tensors, [(4, h // ds, w // ds)], "vae_encode")
        return Latent(np.asarray(tensors[0], dtype=np.float64))

    def vae_decode(self, lat: Latent) -> RgbImage:
        ds = self.descriptor.latent_downscale
        header = {"op": "vae_decode", "shapes": [list(lat.data.shape)]}
        _, tensors = self._request(header, [lat.data])
        expected = (lat.height * ds, lat.width * ds, 3)
        self._expect_shapes(tensors, [expected], "vae_decode")
        return RgbImage(np.clip(np.asarray(tensors[0], dtype=np.float64), 0.0, 1.0))

    def predict_noise(
        self, latents: Sequence[Latent], timesteps: Sequence[int], embeds: EmbedArg
    ) -> List[Latent]:
        if len(latents) != len(timesteps):
            raise ValueError(
                f"batch mismatch: {len(latents)} latents vs {len(timesteps)} timesteps"
            )
        embeds = _broadcast_embeds(embeds, len(latents))
        shapes = [list(l.data.shape) for l in latents] + [list(e.data.shape) for e in embeds]
        header = {
            "op": "predict_noise",
            "shapes": shapes,
            "timesteps": [int(t) for t in timesteps],
            "latent_count": len(latents),
        }
        tensors = [l.data for l in latents] + [e.data for e in embeds]
        _, out = self._request(header, tensors)
        self._expect_shapes(out, [l.data.shape for l in latents], "predict_noise")
        return [Latent(np.asarray(t, dtype=np.float64)) for t in out]

    def extract_lines(self, img: RgbImage) -> GrayImage:
        header = {"op": "extract_lines", "shapes": [list(img.data.shape)]}
        try:
            _, tensors = self._request(header, [img.data])
            self._expect_shapes(tensors, [img.data.shape[:2]], "extract_lines")
            return GrayImage(np.clip(np.asarray(tensors[0], dtype=np.float64), 0.0, 1.0))
        except (BackendError, ProtocolError) as exc:
            logger.warning("remote line extraction failed (%s); using classical extractor", exc)
            return xdog_extract(rgb_to_gray(img), XdogParams())
