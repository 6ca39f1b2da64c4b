"""Neural capability contract and the deterministic synthetic implementation.

A backend provides five capabilities: prompt encoding, image<->latent codec,
batched noise prediction, and line extraction. The synthetic backend stands
in for the real model stack with hash-seeded pure functions: every output is
a deterministic function of the inputs and the backend seed, so the whole
pipeline (batching, caching, CFG, scheduling) can be exercised with
bit-reproducible results on any machine.
"""

from __future__ import annotations

import abc
import enum
import hashlib
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from .imaging import LATENT_DOWNSCALE, GrayImage, Latent, RgbImage, rgb_to_gray
from .optimizer import XdogParams, xdog_extract

EMBED_TOKENS = 8
EMBED_DIM = 32

DEFAULT_STYLES = ("anime", "realistic")


class BackendError(RuntimeError):
    """Transport or protocol failure while talking to a backend."""


class BackendKind(enum.Enum):
    SYNTHETIC = "synthetic"
    REMOTE = "remote"


@dataclass(frozen=True)
class PromptEmbedding:
    """Conditioning tensor for the noise predictor, shape (tokens, dim)."""

    data: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError(f"embedding must be 2-D (tokens, dim), got {d.shape}")
        if not np.isfinite(d).all():
            raise ValueError("embedding contains non-finite values")
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @property
    def tokens(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BackendDescriptor:
    kind: BackendKind
    working_resolution: int = 512
    latent_downscale: int = LATENT_DOWNSCALE
    styles: Tuple[str, ...] = DEFAULT_STYLES

    def __post_init__(self):
        if self.working_resolution % self.latent_downscale != 0:
            raise ValueError(
                f"working resolution {self.working_resolution} not divisible by "
                f"latent downscale {self.latent_downscale}"
            )
        if not self.styles:
            raise ValueError("descriptor must advertise at least one style")


EmbedArg = Union[PromptEmbedding, Sequence[PromptEmbedding]]


class ModelBackend(abc.ABC):
    """Capability contract every backend implements in full."""

    descriptor: BackendDescriptor

    @abc.abstractmethod
    def encode_prompt(self, text: str, style: str) -> PromptEmbedding: ...

    @abc.abstractmethod
    def vae_encode(self, img: RgbImage) -> Latent: ...

    @abc.abstractmethod
    def vae_decode(self, lat: Latent) -> RgbImage: ...

    @abc.abstractmethod
    def predict_noise(
        self, latents: Sequence[Latent], timesteps: Sequence[int], embeds: EmbedArg
    ) -> List[Latent]: ...

    @abc.abstractmethod
    def extract_lines(self, img: RgbImage) -> GrayImage: ...


def _broadcast_embeds(embeds: EmbedArg, n: int) -> List[PromptEmbedding]:
    if isinstance(embeds, PromptEmbedding):
        return [embeds] * n
    embeds = list(embeds)
    if len(embeds) != n:
        raise ValueError(f"got {len(embeds)} embeddings for a batch of {n}")
    return embeds


def _seeded_rng(*parts) -> np.random.Generator:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            h.update(b"b")
            h.update(part)
        elif isinstance(part, str):
            h.update(b"s")
            h.update(part.encode("utf-8"))
        elif isinstance(part, (int, np.integer)):
            h.update(b"i")
            h.update(str(int(part)).encode())
        else:
            raise TypeError(f"unhashable seed part {type(part)}")
        h.update(b"\x00")
    return np.random.default_rng(int.from_bytes(h.digest()[:8], "little"))


class SyntheticBackend(ModelBackend):
    """Hash-seeded stand-in for the neural stack; pure and bit-reproducible."""

    def __init__(self, seed: int = 0, descriptor: "BackendDescriptor | None" = None):
        self.seed = seed
        self.descriptor = descriptor or BackendDescriptor(BackendKind.SYNTHETIC)

    def encode_prompt(self, text: str, style: str) -> PromptEmbedding:
        if style not in self.descriptor.styles:
            raise ValueError(f"unknown style {style!r}; known: {self.descriptor.styles}")
        rng = _seeded_rng("prompt", text, style, self.seed)
        return PromptEmbedding(rng.standard_normal((EMBED_TOKENS, EMBED_DIM)))

    @staticmethod
    def _block_mean(data: np.ndarray, ds: int) -> np.ndarray:
        # Blockwise mean via a pairwise-halving tree: (a + b) * 0.5 repeated
        # along each block axis. Averaging equal values is exact at every
        # level, so constant images pool to bit-identical constants.
        h, w = data.shape[:2]
        p = data.reshape(h // ds, ds, w // ds, ds, 3)
        while p.shape[1] > 1:
            p = 0.5 * (p[:, 0::2] + p[:, 1::2])
        while p.shape[3] > 1:
            p = 0.5 * (p[:, :, :, 0::2] + p[:, :, :, 1::2])
        return p[:, 0, :, 0, :]

    def vae_encode(self, img: RgbImage) -> Latent:
        ds = self.descriptor.latent_downscale
        h, w = img.data.shape[:2]
        if h % ds or w % ds:
            raise ValueError(f"image dims {w}x{h} not divisible by {ds}")
        if ds & (ds - 1):
            raise ValueError(f"latent downscale must be a power of two, got {ds}")
        pooled = self._block_mean(img.data, ds)
        lat = np.empty((4, h // ds, w // ds), dtype=np.float64)
        # channels 0..2 carry RGB through untouched so decoding is an exact
        # projection; channel 3 carries luma and is discarded on decode
        lat[0] = pooled[:, :, 0]
        lat[1] = pooled[:, :, 1]
        lat[2] = pooled[:, :, 2]
        lat[3] = 0.299 * pooled[:, :, 0] + 0.114 * pooled[:, :, 2] + 0.587 * pooled[:, :, 1]
        return Latent(lat)

    def vae_decode(self, lat: Latent) -> RgbImage:
        ds = self.descriptor.latent_downscale
        rgb = np.stack([lat.data[0], lat.data[1], lat.data[2]], axis=-1)
        up = np.repeat(np.repeat(rgb, ds, axis=0), ds, axis=1)
        return RgbImage(np.clip(up, 0.0, 1.0))

    def predict_noise(
        self, latents: Sequence[Latent], timesteps: Sequence[int], embeds: EmbedArg
    ) -> List[Latent]:
        if len(latents) != len(timesteps):
            raise ValueError(
                f"batch mismatch: {len(latents)} latents vs {len(timesteps)} timesteps"
            )
        embeds = _broadcast_embeds(embeds, len(latents))
        out = []
        for lat, t, emb in zip(latents, timesteps, embeds):
            if t < 1:
                raise ValueError(f"timestep must be >= 1, got {t}")
            rng = _seeded_rng(
                "noise", lat.data.tobytes(), int(t), emb.data.tobytes(), self.seed
            )
            out.append(Latent(rng.standard_normal(lat.data.shape)))
        return out

    def extract_lines(self, img: RgbImage) -> GrayImage:
        # no learned extractor here; the classical XDoG fallback is the
        # synthetic line source
        return xdog_extract(rgb_to_gray(img), XdogParams())
