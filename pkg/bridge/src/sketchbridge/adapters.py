"""Model adapters behind the bridge's capability ops.

The "reference" adapter set is a deterministic numeric stand-in used for
protocol conformance and local development: embeddings and noise fields are
hash-seeded, the autoencoder is an 8x block pool with a luma side channel,
and line extraction is a gradient-magnitude map. Swapping in real
checkpoints means registering another adapter set under a new identifier.

The precision flag selects the compute dtype (float16 mirrors production
inference); tensors are always float32 on the wire.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

EMBED_TOKENS = 8
EMBED_DIM = 32
DOWNSCALE = 8


def _rng(*parts) -> np.random.Generator:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            h.update(b"b" + part)
        elif isinstance(part, str):
            h.update(b"s" + part.encode("utf-8"))
        else:
            h.update(b"i" + str(int(part)).encode())
        h.update(b"\x1f")
    return np.random.default_rng(int.from_bytes(h.digest()[:8], "little"))


@dataclass
class ReferenceAdapters:
    """Deterministic stand-in models, seeded once per bridge instance."""

    seed: int = 0
    precision: str = "float32"

    def __post_init__(self):
        if self.precision not in ("float32", "float16"):
            raise ValueError(f"precision must be float32 or float16, got {self.precision!r}")
        self._dtype = np.float16 if self.precision == "float16" else np.float32

    def _work(self, arr: np.ndarray) -> np.ndarray:
        return np.asarray(arr, dtype=self._dtype)

    def encode_prompt(self, text: str, style: str) -> np.ndarray:
        rng = _rng("bridge-prompt", text, style, self.seed)
        out = rng.standard_normal((EMBED_TOKENS, EMBED_DIM))
        return self._work(out).astype("<f4")

    def vae_encode(self, image: np.ndarray) -> np.ndarray:
        h, w = image.shape[:2]
        if h % DOWNSCALE or w % DOWNSCALE:
            raise ValueError(f"image dims {w}x{h} not divisible by {DOWNSCALE}")
        work = self._work(image)
        pooled = work.reshape(h // DOWNSCALE, DOWNSCALE, w // DOWNSCALE, DOWNSCALE, 3)
        pooled = pooled.mean(axis=(1, 3), dtype=self._dtype)
        latent = np.empty((4, h // DOWNSCALE, w // DOWNSCALE), dtype=self._dtype)
        latent[0] = pooled[:, :, 0]
        latent[1] = pooled[:, :, 1]
        latent[2] = pooled[:, :, 2]
        latent[3] = (pooled[:, :, 0] + pooled[:, :, 1] + pooled[:, :, 2]) / 3
        return latent.astype("<f4")

    def vae_decode(self, latent: np.ndarray) -> np.ndarray:
        rgb = np.stack([latent[0], latent[1], latent[2]], axis=-1)
        up = np.repeat(np.repeat(self._work(rgb), DOWNSCALE, axis=0), DOWNSCALE, axis=1)
        return np.clip(up, 0.0, 1.0).astype("<f4")

    def predict_noise(
        self, latents: Sequence[np.ndarray], timesteps: Sequence[int],
        embeds: Sequence[np.ndarray],
    ) -> List[np.ndarray]:
        out = []
        for latent, t, embed in zip(latents, timesteps, embeds):
            rng = _rng(
                "bridge-noise",
                np.ascontiguousarray(latent, dtype="<f4").tobytes(),
                int(t),
                np.ascontiguousarray(embed, dtype="<f4").tobytes(),
                self.seed,
            )
            field = rng.standard_normal(latent.shape)
            out.append(self._work(field).astype("<f4"))
        return out

    def extract_lines(self, image: np.ndarray) -> np.ndarray:
        work = self._work(image)
        gray = work.mean(axis=2, dtype=self._dtype)
        gx = np.zeros_like(gray)
        gy = np.zeros_like(gray)
        gx[:, 1:-1] = gray[:, 2:] - gray[:, :-2]
        gy[1:-1, :] = gray[2:, :] - gray[:-2, :]
        magnitude = np.sqrt(gx * gx + gy * gy)
        peak = magnitude.max()
        if peak > 0:
            magnitude = magnitude / peak
        return np.clip(1.0 - magnitude, 0.0, 1.0).astype("<f4")


ADAPTER_SETS: Dict[str, type] = {"reference": ReferenceAdapters}


def load_adapters(identifier: str, seed: int = 0, precision: str = "float32"):
    cls = ADAPTER_SETS.get(identifier)
    if cls is None:
        raise ValueError(
            f"unknown adapter set {identifier!r}; available: {sorted(ADAPTER_SETS)}"
        )
    return cls(seed=seed, precision=precision)
