"""Few-step denoising math: schedule tables, forward noising, CFG, per-step updates.

The noise schedule is the conventional scaled-linear beta table (beta linear
in sqrt space from 0.00085 to 0.012 over 1000 steps). Few-step inference runs
over a short strictly-decreasing timestep plan; each step predicts the clean
latent and re-noises to the next timestep with a cached fixed noise tensor.

Three caches cut redundant work without changing results: per-slot fixed
noise, per-timestep schedule scalars, and prompt embeddings. Disabling any
cache recomputes the identical arithmetic, so outputs are bit-equal either way.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .imaging import Latent

DEFAULT_TOTAL_STEPS = 1000
DEFAULT_BETA_START = 0.00085
DEFAULT_BETA_END = 0.012
DEFAULT_PLAN_SIZE = 4


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative signal-retention table alpha_bar[0..T], alpha_bar[0] = 1."""

    alpha_bar: np.ndarray

    def __post_init__(self):
        ab = np.ascontiguousarray(self.alpha_bar, dtype=np.float64)
        if ab.ndim != 1 or ab.shape[0] < 2:
            raise ValueError("alpha_bar must be a 1-D table with at least two entries")
        if ab[0] != 1.0:
            raise ValueError(f"alpha_bar[0] must be 1, got {ab[0]}")
        if not (np.diff(ab) < 0).all():
            raise ValueError("alpha_bar must be strictly decreasing")
        if ab[-1] <= 0.0:
            raise ValueError("alpha_bar values must stay positive")
        ab.flags.writeable = False
        object.__setattr__(self, "alpha_bar", ab)

    @property
    def total_steps(self) -> int:
        return self.alpha_bar.shape[0] - 1

    @classmethod
    def scaled_linear(
        cls,
        total_steps: int = DEFAULT_TOTAL_STEPS,
        beta_start: float = DEFAULT_BETA_START,
        beta_end: float = DEFAULT_BETA_END,
    ) -> "NoiseSchedule":
        betas = (
            np.linspace(beta_start**0.5, beta_end**0.5, total_steps, dtype=np.float64) ** 2
        )
        alpha_bar = np.empty(total_steps + 1, dtype=np.float64)
        alpha_bar[0] = 1.0
        alpha_bar[1:] = np.cumprod(1.0 - betas)
        return cls(alpha_bar)


def _scalars(schedule: NoiseSchedule, t: int) -> Tuple[float, float]:
    if not (0 <= t <= schedule.total_steps):
        raise ValueError(f"timestep {t} outside [0, {schedule.total_steps}]")
    ab = schedule.alpha_bar[t]
    return float(np.sqrt(ab)), float(np.sqrt(1.0 - ab))


@dataclass(frozen=True)
class TimestepPlan:
    """Strictly decreasing designated timesteps for few-step inference."""

    steps: Tuple[int, ...]

    def __post_init__(self):
        steps = tuple(int(t) for t in self.steps)
        if not steps:
            raise ValueError("timestep plan must not be empty")
        if any(t < 1 for t in steps):
            raise ValueError(f"timesteps must be >= 1, got {steps}")
        if any(a <= b for a, b in zip(steps, steps[1:])):
            raise ValueError(f"timesteps must be strictly decreasing, got {steps}")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def uniform(cls, count: int = DEFAULT_PLAN_SIZE, total_steps: int = DEFAULT_TOTAL_STEPS) -> "TimestepPlan":
        if not (1 <= count <= total_steps):
            raise ValueError(f"plan size {count} outside [1, {total_steps}]")
        return cls(tuple(round(total_steps * (count - i) / count) for i in range(count)))


def plan_with_strength(plan: TimestepPlan, strength: float, total_steps: int) -> Tuple[int, ...]:
    """Timesteps actually run for an image-to-image round at a given strength.

    The input latent is noised to t_start = round(strength * T) exactly, then
    denoised through the designated plan timesteps that lie below t_start.
    """
    if not (0.0 < strength <= 1.0):
        raise ValueError(f"strength must lie in (0, 1], got {strength}")
    t_start = max(1, min(total_steps, round(strength * total_steps)))
    return (t_start,) + tuple(t for t in plan.steps if t < t_start)


class CfgMode(enum.Enum):
    NONE = "none"
    FULL = "full"


@dataclass(frozen=True)
class GuidanceConfig:
    cfg_mode: CfgMode = CfgMode.NONE
    scale: float = 1.0

    def __post_init__(self):
        if self.scale < 0.0:
            raise ValueError(f"guidance scale must be >= 0, got {self.scale}")


def _check_shapes(a: Latent, b: Latent, what: str) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"{what}: shape mismatch {a.data.shape} vs {b.data.shape}")


def add_noise(
    schedule: NoiseSchedule,
    x0: Latent,
    noise: Latent,
    t: int,
    caches: Optional["SchedulerCaches"] = None,
) -> Latent:
    """Forward-noise x0 to level t: sqrt(ab_t) x0 + sqrt(1 - ab_t) noise."""
    _check_shapes(x0, noise, "add_noise")
    sa, sb = caches.scalars(schedule, t) if caches is not None else _scalars(schedule, t)
    return Latent(sa * x0.data + sb * noise.data)


def predict_x0(
    schedule: NoiseSchedule,
    x_t: Latent,
    eps: Latent,
    t: int,
    caches: Optional["SchedulerCaches"] = None,
) -> Latent:
    """Invert the forward process: (x_t - sqrt(1 - ab_t) eps) / sqrt(ab_t)."""
    _check_shapes(x_t, eps, "predict_x0")
    sa, sb = caches.scalars(schedule, t) if caches is not None else _scalars(schedule, t)
    return Latent((x_t.data - sb * eps.data) / sa)


def cfg_combine(eps_uncond: Latent, eps_cond: Latent, cfg: GuidanceConfig) -> Latent:
    """Blend unconditional and conditional noise predictions at the guidance scale."""
    if cfg.cfg_mode is CfgMode.NONE:
        return eps_cond
    _check_shapes(eps_uncond, eps_cond, "cfg_combine")
    s = cfg.scale
    # Affine form of eps_u + s (eps_c - eps_u); collapses bit-exactly at s = 0, 1.
    return Latent((1.0 - s) * eps_uncond.data + s * eps_cond.data)


def step(
    schedule: NoiseSchedule,
    x_t: Latent,
    eps: Latent,
    t: int,
    t_next: Optional[int],
    fresh_noise: Optional[Latent] = None,
    caches: Optional["SchedulerCaches"] = None,
) -> Latent:
    """Advance one plan step: predict the clean latent, re-noise to t_next.

    t_next None means the final step: the clean prediction is returned as is.
    """
    x0_hat = predict_x0(schedule, x_t, eps, t, caches)
    if t_next is None:
        return x0_hat
    if t_next >= t:
        raise ValueError(f"t_next {t_next} must be below t {t}")
    if fresh_noise is None:
        raise ValueError("fresh_noise is required when stepping to a non-final timestep")
    return add_noise(schedule, x0_hat, fresh_noise, t_next, caches)


class SchedulerCaches:
    """Noise, scheduler-scalar, and prompt-embedding caches.

    Every cached value is a pure function of its key, so lookups never change
    results; each cache can be disabled independently for verification.
    Concurrent readers are fine; insertion is serialized (single-flight).
    """

    def __init__(self, noise: bool = True, scalars: bool = True, prompts: bool = True):
        self.noise_enabled = noise
        self.scalars_enabled = scalars
        self.prompts_enabled = prompts
        self._noise: Dict[tuple, np.ndarray] = {}
        self._scalars: Dict[float, Tuple[float, float]] = {}
        self._prompts: Dict[Tuple[str, str], object] = {}
        self._lock = threading.Lock()

    @staticmethod
    def _make_noise(slot: int, seed: int, shape: Tuple[int, ...]) -> np.ndarray:
        rng = np.random.default_rng([slot, seed & 0xFFFFFFFFFFFFFFFF])
        out = rng.standard_normal(shape)
        out.flags.writeable = False
        return out

    def slot_noise(self, slot: int, seed: int, shape: Tuple[int, ...]) -> Latent:
        """Fixed noise tensor for one candidate slot of one round seed."""
        if not self.noise_enabled:
            return Latent(self._make_noise(slot, seed, shape))
        key = (slot, seed, shape)
        with self._lock:
            cached = self._noise.get(key)
            if cached is None:
                cached = self._make_noise(slot, seed, shape)
                self._noise[key] = cached
        return Latent(cached)

    def scalars(self, schedule: NoiseSchedule, t: int) -> Tuple[float, float]:
        """(sqrt(ab_t), sqrt(1 - ab_t)), cached per timestep."""
        if not self.scalars_enabled:
            return _scalars(schedule, t)
        if not (0 <= t <= schedule.total_steps):
            raise ValueError(f"timestep {t} outside [0, {schedule.total_steps}]")
        # Keyed on the table value itself so distinct schedules cannot alias.
        key = float(schedule.alpha_bar[t])
        with self._lock:
            cached = self._scalars.get(key)
            if cached is None:
                cached = _scalars(schedule, t)
                self._scalars[key] = cached
        return cached

    def prompt_embedding(self, backend, prompt: str, style: str):
        if not self.prompts_enabled:
            return backend.encode_prompt(prompt, style)
        key = (prompt, style)
        with self._lock:
            cached = self._prompts.get(key)
            if cached is None:
                cached = backend.encode_prompt(prompt, style)
                self._prompts[key] = cached
        return cached


def get_prompt_embed(caches: SchedulerCaches, backend, prompt: str, style: str):
    """Embedding for (prompt, style); a cache hit never touches the backend."""
    return caches.prompt_embedding(backend, prompt, style)
