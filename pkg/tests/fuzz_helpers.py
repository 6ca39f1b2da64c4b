"""Randomized session-event driver shared by module and acceptance tests."""

import numpy as np

from sketchguide.imaging import GrayImage
from sketchguide.pipeline import PipelineConfig
from sketchguide.session import (
    ClearBackground,
    ContinueDrawing,
    EmitRequest,
    Mode,
    RoundCompleted,
    SelectGuidance,
    SessionConfig,
    SetPrompt,
    SetStyle,
    StrokeBegin,
    StrokeEnd,
    StrokePoint,
    initial_state,
    transition,
)

PROMPTS = ["", "a cat", "a dog", "a castle at dusk"]
STYLES = ["anime", "realistic", "cubist"]  # last one is invalid on purpose


def quantized_canvas(rng: np.random.Generator, size: int) -> GrayImage:
    # PNG-representable intensities so log round-trips are exact
    return GrayImage(rng.integers(0, 256, size=(size, size)).astype(np.float64) / 255.0)


def fuzz_config(seed: int, size: int = 16) -> SessionConfig:
    return SessionConfig(
        width=size,
        height=size,
        tau=0.9,
        gate_seed=seed,
        base_seed=seed,
        pipeline=PipelineConfig(num_candidates=4),
    )


def random_event(rng: np.random.Generator, size: int, emitted_rounds: list):
    roll = rng.random()
    if roll < 0.30:
        return StrokeEnd(quantized_canvas(rng, size))
    if roll < 0.36:
        return StrokeBegin()
    if roll < 0.42:
        return StrokePoint(float(rng.random()), float(rng.random()), float(rng.random()))
    if roll < 0.52:
        return SelectGuidance(int(rng.integers(0, 6)))
    if roll < 0.60:
        return ClearBackground()
    if roll < 0.68:
        return ContinueDrawing()
    if roll < 0.76:
        return SetPrompt(PROMPTS[rng.integers(0, len(PROMPTS))])
    if roll < 0.84:
        return SetStyle(STYLES[rng.integers(0, len(STYLES))])
    # round completion: sometimes current, sometimes stale or bogus
    if emitted_rounds and rng.random() < 0.8:
        round_id = int(emitted_rounds[rng.integers(0, len(emitted_rounds))])
    else:
        round_id = int(rng.integers(1, 50))
    sketches = tuple(quantized_canvas(rng, size) for _ in range(4))
    return RoundCompleted(round_id, sketches)


def run_random_session(seed: int, steps: int = 20, size: int = 16, check=None):
    """Drive one random event sequence; returns (config, events, final_state).

    ``check(state, event, effects)`` runs after every transition.
    """
    rng = np.random.default_rng(seed)
    config = fuzz_config(seed, size)
    state = initial_state(config)
    events = []
    emitted = []
    for _ in range(steps):
        event = random_event(rng, size, emitted)
        state, effects = transition(state, event)
        events.append(event)
        for eff in effects:
            if isinstance(eff, EmitRequest):
                emitted.append(eff.request.round_id)
        if check is not None:
            check(state, event, effects)
    return config, events, state


def assert_session_invariants(state, event, effects):
    has_background = state.background is not None
    assert has_background == (state.mode is Mode.PAUSED_BG), (
        f"background/mode invariant broken after {type(event).__name__}"
    )
    for eff in effects:
        if isinstance(eff, EmitRequest):
            assert state.mode is Mode.ACTIVE, (
                f"request emitted outside ACTIVE after {type(event).__name__}"
            )


def assert_states_equal(a, b):
    from numpy.testing import assert_array_equal

    assert a.mode == b.mode
    assert_array_equal(a.canvas.data, b.canvas.data)
    assert (a.background is None) == (b.background is None)
    if a.background is not None:
        assert_array_equal(a.background.data, b.background.data)
    assert len(a.slots) == len(b.slots)
    for sa, sb in zip(a.slots, b.slots):
        assert (sa.index, sa.round_id) == (sb.index, sb.round_id)
        assert_array_equal(sa.sketch.data, sb.sketch.data)
    assert (a.prompt, a.style) == (b.prompt, b.style)
    assert (a.pending_prompt, a.pending_style) == (b.pending_prompt, b.pending_style)
    assert (a.next_round_id, a.latest_emitted) == (b.next_round_id, b.latest_emitted)
    assert (a.gate.last_prompt, a.gate.last_style) == (b.gate.last_prompt, b.gate.last_style)
    assert (a.gate.reference is None) == (b.gate.reference is None)
    if a.gate.reference is not None:
        assert_array_equal(a.gate.reference.data, b.gate.reference.data)
    assert a.gate.rng.bit_generator.state == b.gate.rng.bit_generator.state
