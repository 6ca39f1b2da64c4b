"""Regenerate the shared wire-protocol conformance vectors.

Request frames are encoded with the client codec; the matching response
frames come from the bridge's reference adapters (seed 0, float32) through
the bridge codec. Both sides' test suites replay these committed bytes, so
any framing or adapter change that breaks byte compatibility fails loudly.

Usage: python scripts/gen_protocol_fixtures.py [--out protocol_fixtures]
"""

import argparse
import hashlib
import json
from pathlib import Path

import numpy as np

from sketchbridge.adapters import ReferenceAdapters
from sketchbridge.frames import pack
from sketchguide.wire import encode_frame


def seeded_image(seed, size=16):
    rng = np.random.default_rng(seed)
    return (rng.integers(0, 256, size=(size, size, 3)) / 255.0).astype("<f4")


def seeded_latent(seed, hw=2):
    return np.random.default_rng(seed).standard_normal((4, hw, hw)).astype("<f4")


def seeded_embed(seed):
    return np.random.default_rng(seed).standard_normal((8, 32)).astype("<f4")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="protocol_fixtures")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    adapters = ReferenceAdapters(seed=0, precision="float32")
    entries = []

    def emit(name, role, frame):
        path = out / f"{name}.bin"
        path.write_bytes(frame)
        entries.append({
            "name": name,
            "role": role,
            "file": path.name,
            "sha256": hashlib.sha256(frame).hexdigest(),
        })

    def respond(rid, tensors):
        return pack({"request_id": rid, "dtype": "f32",
                     "shapes": [list(t.shape) for t in tensors]}, tensors)

    # 1. encode_prompt
    req = {"op": "encode_prompt", "request_id": 1, "dtype": "f32", "shapes": [],
           "text": "a cat under a tree", "style": "anime"}
    emit("encode_prompt_request", "request", encode_frame(req, []))
    emit("encode_prompt_response", "response",
         respond(1, [adapters.encode_prompt(req["text"], req["style"])]))

    # 2. vae_encode
    img = seeded_image(101)
    req = {"op": "vae_encode", "request_id": 2, "dtype": "f32",
           "shapes": [list(img.shape)]}
    emit("vae_encode_request", "request", encode_frame(req, [img]))
    emit("vae_encode_response", "response", respond(2, [adapters.vae_encode(img)]))

    # 3. vae_decode
    lat = seeded_latent(102)
    req = {"op": "vae_decode", "request_id": 3, "dtype": "f32",
           "shapes": [list(lat.shape)]}
    emit("vae_decode_request", "request", encode_frame(req, [lat]))
    emit("vae_decode_response", "response", respond(3, [adapters.vae_decode(lat)]))

    # 4. predict_noise (batch of two with per-item embeddings)
    lats = [seeded_latent(103), seeded_latent(104)]
    embeds = [seeded_embed(105), seeded_embed(106)]
    req = {
        "op": "predict_noise", "request_id": 4, "dtype": "f32",
        "shapes": [list(t.shape) for t in lats + embeds],
        "timesteps": [750, 250], "latent_count": 2,
    }
    emit("predict_noise_request", "request", encode_frame(req, lats + embeds))
    emit("predict_noise_response", "response",
         respond(4, list(adapters.predict_noise(lats, [750, 250], embeds))))

    # 5. extract_lines
    img = seeded_image(107)
    req = {"op": "extract_lines", "request_id": 5, "dtype": "f32",
           "shapes": [list(img.shape)]}
    emit("extract_lines_request", "request", encode_frame(req, [img]))
    emit("extract_lines_response", "response",
         respond(5, [adapters.extract_lines(img)]))

    # 6. unknown op -> error frame, connection preserved
    req = {"op": "transmogrify", "request_id": 6, "dtype": "f32", "shapes": []}
    emit("unknown_op_request", "request", encode_frame(req, []))
    emit("unknown_op_response", "error_response",
         pack({"request_id": 6, "error": "unknown op 'transmogrify'", "shapes": []}))

    manifest = {
        "adapters": {"identifier": "reference", "seed": 0, "precision": "float32"},
        "frames": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(entries)} frames to {out}/")


if __name__ == "__main__":
    main()
