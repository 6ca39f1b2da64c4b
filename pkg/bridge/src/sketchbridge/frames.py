"""Frame codec for the tensor wire protocol (server side).

Written independently of the client implementation so the shared fixture
vectors verify genuine byte-level compatibility rather than code reuse.

A frame is a little-endian u32 payload length followed by the payload: one
line of compact JSON (sorted keys, no spaces, newline-terminated), then the
raw tensors as little-endian float32 in C order, one per entry of the
header's "shapes" list.
"""

from __future__ import annotations

import json
import struct
from typing import Dict, List, Sequence, Tuple

import numpy as np

PAYLOAD_LIMIT = 1 << 30


class FrameError(RuntimeError):
    pass


def pack(header: Dict, tensors: Sequence[np.ndarray] = ()) -> bytes:
    shapes = header.get("shapes", [])
    if len(shapes) != len(tensors):
        raise FrameError(f"{len(shapes)} declared shapes for {len(tensors)} tensors")
    parts = [json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"), b"\n"]
    for shape, tensor in zip(shapes, tensors):
        if tuple(shape) != tensor.shape:
            raise FrameError(f"shape {shape} does not match tensor {tensor.shape}")
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes(order="C"))
    payload = b"".join(parts)
    if len(payload) > PAYLOAD_LIMIT:
        raise FrameError("payload too large")
    return struct.pack("<I", len(payload)) + payload


def unpack_payload(payload: bytes) -> Tuple[Dict, List[np.ndarray]]:
    newline = payload.find(b"\n")
    if newline < 0:
        raise FrameError("missing header terminator")
    try:
        header = json.loads(payload[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FrameError(f"unparseable header: {exc}") from exc
    if not isinstance(header, dict):
        raise FrameError("header is not an object")
    if header.get("dtype", "f32") != "f32":
        raise FrameError(f"dtype {header.get('dtype')!r} unsupported")
    body = memoryview(payload)[newline + 1 :]
    tensors: List[np.ndarray] = []
    offset = 0
    for shape in header.get("shapes", []):
        count = 1
        for dim in shape:
            count *= int(dim)
        end = offset + count * 4
        if end > len(body):
            raise FrameError("tensor data truncated")
        arr = np.frombuffer(body[offset:end], dtype="<f4").reshape([int(d) for d in shape])
        tensors.append(arr)
        offset = end
    if offset != len(body):
        raise FrameError("unexpected trailing bytes")
    return header, tensors


def read_exact(sock, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise FrameError("peer closed the connection")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock) -> Tuple[Dict, List[np.ndarray]]:
    (length,) = struct.unpack("<I", read_exact(sock, 4))
    if length > PAYLOAD_LIMIT:
        raise FrameError("advertised payload too large")
    return unpack_payload(read_exact(sock, length))
