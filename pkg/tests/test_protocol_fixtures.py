"""The committed conformance vectors stay decodable and byte-stable."""

import hashlib
import json
from pathlib import Path

import pytest

from sketchguide.wire import OPS, decode_payload, encode_frame

FIXTURES = Path(__file__).resolve().parent.parent / "protocol_fixtures"


@pytest.fixture(scope="module")
def manifest():
    return json.loads((FIXTURES / "manifest.json").read_text())


def frames(manifest, role=None):
    for entry in manifest["frames"]:
        if role is None or entry["role"] == role:
            yield entry, (FIXTURES / entry["file"]).read_bytes()


def test_fixture_files_match_manifest_checksums(manifest):
    for entry, raw in frames(manifest):
        assert hashlib.sha256(raw).hexdigest() == entry["sha256"], entry["name"]


def test_every_frame_decodes_and_reencodes_byte_identical(manifest):
    count = 0
    for entry, raw in frames(manifest):
        header, tensors = decode_payload(raw[4:])
        assert encode_frame(header, tensors) == raw, entry["name"]
        count += 1
    assert count >= 12


def test_request_fixtures_cover_every_op(manifest):
    ops = set()
    for entry, raw in frames(manifest, role="request"):
        header, _ = decode_payload(raw[4:])
        ops.add(header["op"])
        assert header["dtype"] == "f32"
        assert isinstance(header["request_id"], int)
    assert set(OPS) <= ops


def test_responses_echo_request_ids(manifest):
    ids = {}
    for entry, raw in frames(manifest):
        header, _ = decode_payload(raw[4:])
        ids.setdefault(header["request_id"], set()).add(entry["role"])
    for rid, roles in ids.items():
        assert "request" in roles
        assert roles & {"response", "error_response"}, f"request {rid} has no response"


def test_error_response_carries_message(manifest):
    entries = list(frames(manifest, role="error_response"))
    assert entries
    for entry, raw in entries:
        header, tensors = decode_payload(raw[4:])
        assert header["error"]
        assert tensors == []
