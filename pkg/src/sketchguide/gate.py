"""Similarity gate deciding whether a stroke-end triggers a generation round.

The skip probability is max(0, (x - tau) / (1 - tau)) where x is the cosine
similarity between the incoming sketch and the reference sketch. The gate
realizes the probability as a seeded Bernoulli draw, so decision sequences
are reproducible from the seed. Whatever the decision, the incoming sketch
becomes the new reference.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .imaging import GrayImage, cosine_similarity

DEFAULT_TAU = 0.95


class GateAction(enum.Enum):
    SKIP = "skip"
    GENERATE = "generate"


class GateReason(enum.Enum):
    FIRST_INPUT = "first_input"
    PROMPT_CHANGED = "prompt_changed"
    SAMPLED_SKIP = "sampled_skip"
    SAMPLED_GENERATE = "sampled_generate"


@dataclass(frozen=True)
class GateDecision:
    action: GateAction
    similarity: float
    probability: float
    reason: GateReason


@dataclass(frozen=True)
class GateState:
    """Gate memory: reference sketch, threshold, seeded randomness, conditioning.

    Owned by exactly one session; evaluate/observe return a successor state
    (the random stream object is shared across successors).
    """

    tau: float
    rng: np.random.Generator
    reference: Optional[GrayImage] = None
    last_prompt: Optional[str] = None
    last_style: Optional[str] = None

    def __post_init__(self):
        if not (0.0 <= self.tau < 1.0):
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")

    @classmethod
    def from_seed(cls, tau: float = DEFAULT_TAU, seed: int = 0) -> "GateState":
        return cls(tau=tau, rng=np.random.default_rng(seed))


def skip_probability(x: float, tau: float) -> float:
    """Probability of skipping generation at similarity x with threshold tau."""
    if tau >= 1.0:
        raise ValueError(f"tau must be < 1, got {tau}")
    return max(0.0, (x - tau) / (1.0 - tau))


def evaluate(
    state: GateState, sketch: GrayImage, prompt: str, style: str = ""
) -> Tuple[GateDecision, GateState]:
    """Decide SKIP or GENERATE for one stroke-end and advance the gate state.

    The first input and any prompt/style change force GENERATE without
    consuming randomness; otherwise a uniform draw is compared against the
    skip probability. The reference update is unconditional.
    """
    if state.reference is None:
        decision = GateDecision(GateAction.GENERATE, 0.0, 0.0, GateReason.FIRST_INPUT)
    elif prompt != state.last_prompt or style != state.last_style:
        decision = GateDecision(GateAction.GENERATE, 0.0, 0.0, GateReason.PROMPT_CHANGED)
    else:
        x = cosine_similarity(sketch, state.reference)
        p = skip_probability(x, state.tau)
        u = float(state.rng.random())
        if u < p:
            decision = GateDecision(GateAction.SKIP, x, p, GateReason.SAMPLED_SKIP)
        else:
            decision = GateDecision(GateAction.GENERATE, x, p, GateReason.SAMPLED_GENERATE)
    new_state = replace(state, reference=sketch, last_prompt=prompt, last_style=style)
    return decision, new_state


def observe(state: GateState, sketch: GrayImage, prompt: str, style: str = "") -> GateState:
    """Advance the reference without drawing a decision (paused-mode strokes)."""
    return replace(state, reference=sketch, last_prompt=prompt, last_style=style)
