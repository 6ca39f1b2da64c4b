"""Length-prefixed binary tensor frames for the remote backend protocol.

Frame layout: a little-endian u32 payload length, then the payload. The
payload is a compact JSON header terminated by a single newline byte,
followed by the raw tensor data: little-endian float32, C order, one tensor
per entry of the header's "shapes" list, concatenated in that order.

Request headers carry {op, request_id, shapes, dtype: "f32"} plus op-specific
keys (text/style for prompt encoding, timesteps for noise prediction).
Responses echo request_id; error responses carry {request_id, error}.
"""

from __future__ import annotations

import json
import socket
import struct
from typing import Dict, List, Sequence, Tuple

import numpy as np

MAX_PAYLOAD = 1 << 30

OPS = ("encode_prompt", "vae_encode", "vae_decode", "predict_noise", "extract_lines")


class ProtocolError(RuntimeError):
    """Malformed frame or contract violation on the wire."""


def encode_frame(header: Dict, tensors: Sequence[np.ndarray] = ()) -> bytes:
    tensors = list(tensors)
    declared = header.get("shapes", [])
    if len(declared) != len(tensors):
        raise ProtocolError(
            f"header declares {len(declared)} shapes but {len(tensors)} tensors given"
        )
    for shape, tensor in zip(declared, tensors):
        if tuple(shape) != tensor.shape:
            raise ProtocolError(f"declared shape {shape} != tensor shape {tensor.shape}")
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    blobs = b"".join(np.ascontiguousarray(t, dtype="<f4").tobytes(order="C") for t in tensors)
    payload = head + b"\n" + blobs
    if len(payload) > MAX_PAYLOAD:
        raise ProtocolError(f"payload of {len(payload)} bytes exceeds limit")
    return struct.pack("<I", len(payload)) + payload


def decode_payload(payload: bytes) -> Tuple[Dict, List[np.ndarray]]:
    nl = payload.find(b"\n")
    if nl < 0:
        raise ProtocolError("payload has no header terminator")
    try:
        header = json.loads(payload[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"bad JSON header: {exc}") from exc
    if not isinstance(header, dict):
        raise ProtocolError("header must be a JSON object")
    if header.get("dtype", "f32") != "f32":
        raise ProtocolError(f"unsupported dtype {header.get('dtype')!r}")

    body = payload[nl + 1 :]
    tensors: List[np.ndarray] = []
    offset = 0
    for shape in header.get("shapes", []):
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(body):
            raise ProtocolError("payload shorter than declared shapes")
        arr = np.frombuffer(body, dtype="<f4", count=count, offset=offset)
        tensors.append(arr.reshape([int(s) for s in shape]))
        offset += nbytes
    if offset != len(body):
        raise ProtocolError(f"{len(body) - offset} trailing bytes after declared tensors")
    return header, tensors


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ProtocolError("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket) -> Tuple[Dict, List[np.ndarray]]:
    (length,) = struct.unpack("<I", _recv_exact(sock, 4))
    if length > MAX_PAYLOAD:
        raise ProtocolError(f"declared payload of {length} bytes exceeds limit")
    return decode_payload(_recv_exact(sock, length))


def write_frame(sock: socket.socket, header: Dict, tensors: Sequence[np.ndarray] = ()) -> None:
    sock.sendall(encode_frame(header, tensors))
