"""One generation round: queue, noising, stream-batched denoising, refinement.

A round lifts the sketch to RGB, encodes it, noises one latent per candidate
slot with slot-indexed cached noise, then advances every slot through the
timestep plan. Each step issues a single batched noise prediction covering
all active slots (doubled with their unconditional twins under full CFG), so
batching changes scheduling only, never values. Final latents are decoded
and refined into guidance sketches.

The input queue holds at most one pending request per session: a newer
stroke-end replaces an unstarted older one (latest wins).
"""

from __future__ import annotations

import enum
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

from .backend import ModelBackend, PromptEmbedding
from .imaging import GrayImage, Latent, RgbImage, gray_to_rgb
from .optimizer import FilterParams, optimize
from .scheduler import (
    CfgMode,
    GuidanceConfig,
    NoiseSchedule,
    SchedulerCaches,
    TimestepPlan,
    add_noise,
    cfg_combine,
    get_prompt_embed,
    plan_with_strength,
    step,
)

logger = logging.getLogger(__name__)

_post_pool: Optional[ThreadPoolExecutor] = None
_post_pool_lock = threading.Lock()


def _post_processing_pool() -> ThreadPoolExecutor:
    global _post_pool
    with _post_pool_lock:
        if _post_pool is None:
            _post_pool = ThreadPoolExecutor(
                max_workers=os.cpu_count() or 2, thread_name_prefix="round-post"
            )
        return _post_pool


@dataclass(frozen=True)
class PipelineConfig:
    num_candidates: int = 4
    steps: TimestepPlan = field(default_factory=TimestepPlan.uniform)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    strength: float = 0.8

    def __post_init__(self):
        if self.num_candidates < 1:
            raise ValueError("num_candidates must be >= 1")
        if not (0.0 < self.strength <= 1.0):
            raise ValueError(f"strength must lie in (0, 1], got {self.strength}")


@dataclass(frozen=True)
class GenerationRequest:
    round_id: int
    sketch: GrayImage
    prompt: str
    style: str
    seed: int
    config: PipelineConfig


@dataclass(frozen=True)
class StageTimings:
    queue_wait: float = 0.0
    encode: float = 0.0
    denoise: float = 0.0
    decode: float = 0.0
    optimize: float = 0.0

    @property
    def total(self) -> float:
        return self.queue_wait + self.encode + self.denoise + self.decode + self.optimize


@dataclass(frozen=True)
class GenerationRound:
    request: GenerationRequest
    rgb_candidates: List[RgbImage]
    guidance_sketches: List[GrayImage]
    timings: StageTimings


@dataclass(frozen=True)
class SlotCursor:
    """Per-candidate state: current latent, remaining timesteps, slot noise."""

    latent: Latent
    remaining: Tuple[int, ...]
    fresh_noise: Latent

    @property
    def done(self) -> bool:
        return not self.remaining


def stream_batch_step(
    slots: Sequence[SlotCursor],
    backend: ModelBackend,
    cond_embed: PromptEmbedding,
    uncond_embed: Optional[PromptEmbedding],
    guidance: GuidanceConfig,
    schedule: NoiseSchedule,
    caches: SchedulerCaches,
) -> List[SlotCursor]:
    """Advance every unfinished slot one timestep with one predictor call.

    Slots may sit at different timesteps; each consumes the head of its own
    plan. Results are elementwise-equal to stepping each slot alone.
    """
    active = [(i, s) for i, s in enumerate(slots) if not s.done]
    if not active:
        return list(slots)

    latents = [s.latent for _, s in active]
    timesteps = [s.remaining[0] for _, s in active]
    full_cfg = guidance.cfg_mode is CfgMode.FULL
    if full_cfg:
        if uncond_embed is None:
            raise ValueError("full CFG needs an unconditional embedding")
        batch_latents = latents + latents
        batch_ts = timesteps + timesteps
        batch_embeds = [uncond_embed] * len(active) + [cond_embed] * len(active)
    else:
        batch_latents, batch_ts = latents, timesteps
        batch_embeds = [cond_embed] * len(active)

    eps_batch = backend.predict_noise(batch_latents, batch_ts, batch_embeds)

    out = list(slots)
    for k, (i, slot) in enumerate(active):
        if full_cfg:
            eps = cfg_combine(eps_batch[k], eps_batch[k + len(active)], guidance)
        else:
            eps = eps_batch[k]
        t = slot.remaining[0]
        rest = slot.remaining[1:]
        t_next = rest[0] if rest else None
        advanced = step(
            schedule, slot.latent, eps, t, t_next,
            fresh_noise=slot.fresh_noise if t_next is not None else None,
            caches=caches,
        )
        out[i] = replace(slot, latent=advanced, remaining=rest)
    return out


def run_round(
    request: GenerationRequest,
    backend: ModelBackend,
    caches: SchedulerCaches,
    schedule: NoiseSchedule,
    filter_params: FilterParams = FilterParams(),
    queue_wait: float = 0.0,
) -> GenerationRound:
    """Produce the candidates and guidance sketches for one stroke-end."""
    cfg = request.config
    ds = backend.descriptor.latent_downscale
    if request.sketch.width % ds or request.sketch.height % ds:
        raise ValueError(
            f"sketch dims {request.sketch.width}x{request.sketch.height} "
            f"not divisible by {ds}"
        )

    t0 = time.perf_counter()
    lift = gray_to_rgb(request.sketch)
    z = backend.vae_encode(lift)
    cond = get_prompt_embed(caches, backend, request.prompt, request.style)
    uncond = None
    if cfg.guidance.cfg_mode is CfgMode.FULL:
        uncond = get_prompt_embed(caches, backend, "", request.style)
    t_encode = time.perf_counter()

    timesteps = plan_with_strength(cfg.steps, cfg.strength, schedule.total_steps)
    slots = []
    for i in range(cfg.num_candidates):
        noise_i = caches.slot_noise(i, request.seed, z.data.shape)
        noised = add_noise(schedule, z, noise_i, timesteps[0], caches)
        slots.append(SlotCursor(latent=noised, remaining=timesteps, fresh_noise=noise_i))
    while any(not s.done for s in slots):
        slots = stream_batch_step(slots, backend, cond, uncond, cfg.guidance, schedule, caches)
    t_denoise = time.perf_counter()

    rgb_candidates = [backend.vae_decode(s.latent) for s in slots]
    t_decode = time.perf_counter()

    def refine(rgb: RgbImage) -> GrayImage:
        return optimize(backend.extract_lines(rgb), filter_params)

    if cfg.num_candidates > 1:
        guidance_sketches = list(_post_processing_pool().map(refine, rgb_candidates))
    else:
        guidance_sketches = [refine(rgb_candidates[0])]
    t_done = time.perf_counter()

    return GenerationRound(
        request=request,
        rgb_candidates=rgb_candidates,
        guidance_sketches=guidance_sketches,
        timings=StageTimings(
            queue_wait=queue_wait,
            encode=t_encode - t0,
            denoise=t_denoise - t_encode,
            decode=t_decode - t_denoise,
            optimize=t_done - t_decode,
        ),
    )


def format_metrics(round_: GenerationRound) -> str:
    t = round_.timings
    return (
        f"round_id={round_.request.round_id} candidates={len(round_.rgb_candidates)} "
        f"queue_wait_ms={t.queue_wait * 1e3:.2f} encode_ms={t.encode * 1e3:.2f} "
        f"denoise_ms={t.denoise * 1e3:.2f} decode_ms={t.decode * 1e3:.2f} "
        f"optimize_ms={t.optimize * 1e3:.2f} total_ms={t.total * 1e3:.2f}"
    )


class EnqueueResult(enum.Enum):
    ACCEPTED = "accepted"
    COALESCED = "coalesced"


class RoundQueue:
    """Latest-wins slot for pending requests: one producer, one consumer."""

    def __init__(self):
        self._cond = threading.Condition()
        self._pending: Optional[Tuple[GenerationRequest, float]] = None
        self._closed = False

    def enqueue(self, request: GenerationRequest) -> EnqueueResult:
        with self._cond:
            if self._closed:
                raise RuntimeError("queue is closed")
            replaced = self._pending is not None
            self._pending = (request, time.perf_counter())
            self._cond.notify()
        return EnqueueResult.COALESCED if replaced else EnqueueResult.ACCEPTED

    def take(self, timeout: Optional[float] = None) -> Optional[Tuple[GenerationRequest, float]]:
        """Pop the pending request and its queue-wait seconds; None on close/timeout."""
        with self._cond:
            if not self._cond.wait_for(lambda: self._pending or self._closed, timeout):
                return None
            if self._pending is None:
                return None
            (request, enqueued_at), self._pending = self._pending, None
        return request, time.perf_counter() - enqueued_at

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class PipelineWorker:
    """Single consumer thread draining one session's queue through run_round."""

    def __init__(
        self,
        backend: ModelBackend,
        caches: SchedulerCaches,
        schedule: NoiseSchedule,
        filter_params: FilterParams,
        on_round: Callable[[GenerationRound], None],
        on_error: Callable[[GenerationRequest, Exception], None],
    ):
        self.queue = RoundQueue()
        self._backend = backend
        self._caches = caches
        self._schedule = schedule
        self._filter_params = filter_params
        self._on_round = on_round
        self._on_error = on_error
        self._thread = threading.Thread(target=self._loop, daemon=True)
        self._thread.start()

    def _loop(self):
        while True:
            item = self.queue.take()
            if item is None:
                return
            request, waited = item
            try:
                round_ = run_round(
                    request, self._backend, self._caches, self._schedule,
                    self._filter_params, queue_wait=waited,
                )
                logger.info("%s", format_metrics(round_))
                self._on_round(round_)
            except Exception as exc:  # noqa: BLE001 - reported to the session
                logger.exception("round %d failed", request.round_id)
                self._on_error(request, exc)

    def stop(self, join: bool = True):
        self.queue.close()
        if join:
            self._thread.join(timeout=10.0)
