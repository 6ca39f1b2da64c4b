"""Interaction automaton: stroke lifecycle, guidance slots, pause semantics.

Drawing is ACTIVE by default; every stroke-end updates the canvas and, while
active, consults the skip gate. Clicking a guidance thumbnail pauses the
session and pins that sketch to the background layer for tracing; clearing
the background keeps the session paused until the user explicitly continues.
Prompt and style edits apply immediately while active and are deferred to
the resume while paused.

Event handling is a pure transition: (state, event) -> (state', effects).
Replaying a persisted event log therefore reproduces the final state bit for
bit, including the gate's random stream.
"""

from __future__ import annotations

import base64
import enum
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union

from .backend import DEFAULT_STYLES
from .gate import DEFAULT_TAU, GateAction, GateState, evaluate, observe
from .imaging import GrayImage, gray_from_png_bytes, png_bytes
from .pipeline import GenerationRequest, PipelineConfig


class Mode(enum.Enum):
    ACTIVE = "active"
    PAUSED_BG = "paused_bg"
    PAUSED_CLEARED = "paused_cleared"


@dataclass(frozen=True)
class GuidanceSlot:
    index: int
    sketch: GrayImage
    round_id: int


@dataclass(frozen=True)
class SessionConfig:
    width: int = 512
    height: int = 512
    tau: float = DEFAULT_TAU
    gate_seed: int = 0
    base_seed: int = 0
    styles: Tuple[str, ...] = DEFAULT_STYLES
    default_style: str = "anime"
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


@dataclass(frozen=True)
class SessionState:
    config: SessionConfig
    mode: Mode
    canvas: GrayImage
    background: Optional[GrayImage]
    slots: Tuple[GuidanceSlot, ...]
    prompt: str
    style: str
    pending_prompt: Optional[str]
    pending_style: Optional[str]
    gate: GateState
    next_round_id: int
    latest_emitted: int


def initial_state(config: SessionConfig = SessionConfig()) -> SessionState:
    return SessionState(
        config=config,
        mode=Mode.ACTIVE,
        canvas=GrayImage.full(config.width, config.height, 0.0),
        background=None,
        slots=(),
        prompt="",
        style=config.default_style,
        pending_prompt=None,
        pending_style=None,
        gate=GateState.from_seed(tau=config.tau, seed=config.gate_seed),
        next_round_id=1,
        latest_emitted=0,
    )


# -- events ------------------------------------------------------------------


@dataclass(frozen=True)
class StrokeBegin:
    pass


@dataclass(frozen=True)
class StrokePoint:
    x: float
    y: float
    pressure: float = 1.0


@dataclass(frozen=True)
class StrokeEnd:
    canvas: GrayImage


@dataclass(frozen=True)
class SelectGuidance:
    index: int


@dataclass(frozen=True)
class ClearBackground:
    pass


@dataclass(frozen=True)
class ContinueDrawing:
    pass


@dataclass(frozen=True)
class SetPrompt:
    text: str


@dataclass(frozen=True)
class SetStyle:
    style: str


@dataclass(frozen=True)
class RoundCompleted:
    round_id: int
    sketches: Tuple[GrayImage, ...]


Event = Union[
    StrokeBegin, StrokePoint, StrokeEnd, SelectGuidance, ClearBackground,
    ContinueDrawing, SetPrompt, SetStyle, RoundCompleted,
]


# -- effects -----------------------------------------------------------------


@dataclass(frozen=True)
class EmitRequest:
    request: GenerationRequest


@dataclass(frozen=True)
class NotifySkip:
    round_id: int
    similarity: float
    probability: float


@dataclass(frozen=True)
class NotifyError:
    code: str
    message: str


@dataclass(frozen=True)
class StateChanged:
    mode: Mode
    background: Optional[GrayImage]


@dataclass(frozen=True)
class GuidanceReady:
    round_id: int
    sketches: Tuple[GrayImage, ...]


Effect = Union[EmitRequest, NotifySkip, NotifyError, StateChanged, GuidanceReady]


# -- transition --------------------------------------------------------------


def _round_seed(config: SessionConfig, round_id: int) -> int:
    return (config.base_seed + round_id) & 0xFFFFFFFFFFFFFFFF


def _emit_round(state: SessionState, canvas: GrayImage) -> Tuple[SessionState, List[Effect]]:
    """Run the gate on an active-mode canvas and emit or skip one round."""
    round_id = state.next_round_id
    decision, gate = evaluate(state.gate, canvas, state.prompt, state.style)
    state = replace(state, gate=gate, next_round_id=round_id + 1)
    if decision.action is GateAction.GENERATE:
        request = GenerationRequest(
            round_id=round_id,
            sketch=canvas,
            prompt=state.prompt,
            style=state.style,
            seed=_round_seed(state.config, round_id),
            config=state.config.pipeline,
        )
        return replace(state, latest_emitted=round_id), [EmitRequest(request)]
    return state, [NotifySkip(round_id, decision.similarity, decision.probability)]


def transition(state: SessionState, event: Event) -> Tuple[SessionState, List[Effect]]:
    if isinstance(event, (StrokeBegin, StrokePoint)):
        # recorded for replay fidelity; generation triggers on stroke end only
        return state, []

    if isinstance(event, StrokeEnd):
        canvas = event.canvas
        if canvas.data.shape != state.canvas.data.shape:
            return state, [NotifyError("bad_canvas", "canvas dimensions changed mid-session")]
        state = replace(state, canvas=canvas)
        if state.mode is not Mode.ACTIVE:
            return replace(state, gate=observe(state.gate, canvas, state.prompt, state.style)), []
        return _emit_round(state, canvas)

    if isinstance(event, SelectGuidance):
        slot = next((s for s in state.slots if s.index == event.index), None)
        if slot is None:
            return state, [NotifyError("empty_slot", f"no guidance in slot {event.index}")]
        state = replace(state, mode=Mode.PAUSED_BG, background=slot.sketch)
        return state, [StateChanged(state.mode, state.background)]

    if isinstance(event, ClearBackground):
        if state.mode is Mode.PAUSED_BG:
            state = replace(state, mode=Mode.PAUSED_CLEARED, background=None)
            return state, [StateChanged(state.mode, None)]
        return state, []

    if isinstance(event, ContinueDrawing):
        if state.mode is Mode.ACTIVE:
            return state, []
        new_prompt = state.pending_prompt if state.pending_prompt is not None else state.prompt
        new_style = state.pending_style if state.pending_style is not None else state.style
        changed = new_prompt != state.prompt or new_style != state.style
        state = replace(
            state, mode=Mode.ACTIVE, background=None,
            prompt=new_prompt, style=new_style,
            pending_prompt=None, pending_style=None,
        )
        effects: List[Effect] = [StateChanged(state.mode, None)]
        if changed:
            state, more = _emit_round(state, state.canvas)
            effects.extend(more)
        return state, effects

    if isinstance(event, SetPrompt):
        if state.mode is Mode.ACTIVE:
            if event.text == state.prompt:
                return state, []
            state = replace(state, prompt=event.text)
            return _emit_round(state, state.canvas)
        return replace(state, pending_prompt=event.text), []

    if isinstance(event, SetStyle):
        if event.style not in state.config.styles:
            return state, [NotifyError("unknown_style", f"style {event.style!r} not offered")]
        if state.mode is Mode.ACTIVE:
            if event.style == state.style:
                return state, []
            state = replace(state, style=event.style)
            return _emit_round(state, state.canvas)
        return replace(state, pending_style=event.style), []

    if isinstance(event, RoundCompleted):
        if event.round_id != state.latest_emitted:
            return state, []  # stale round, a newer stroke superseded it
        slots = tuple(
            GuidanceSlot(index=i, sketch=sk, round_id=event.round_id)
            for i, sk in enumerate(event.sketches)
        )
        state = replace(state, slots=slots)
        return state, [GuidanceReady(event.round_id, event.sketches)]

    raise TypeError(f"unknown event {type(event).__name__}")


# -- event (de)serialization for the persisted log ---------------------------


def _b64png(img: GrayImage) -> str:
    return base64.b64encode(png_bytes(img)).decode("ascii")


def _png64(data: str) -> GrayImage:
    return gray_from_png_bytes(base64.b64decode(data))


def event_to_record(event: Event) -> dict:
    if isinstance(event, StrokeBegin):
        return {"event": "stroke_begin"}
    if isinstance(event, StrokePoint):
        return {"event": "stroke_point", "x": event.x, "y": event.y,
                "pressure": event.pressure}
    if isinstance(event, StrokeEnd):
        return {"event": "stroke_end", "canvas_png": _b64png(event.canvas)}
    if isinstance(event, SelectGuidance):
        return {"event": "select_guidance", "index": event.index}
    if isinstance(event, ClearBackground):
        return {"event": "clear_background"}
    if isinstance(event, ContinueDrawing):
        return {"event": "continue_drawing"}
    if isinstance(event, SetPrompt):
        return {"event": "set_prompt", "text": event.text}
    if isinstance(event, SetStyle):
        return {"event": "set_style", "style": event.style}
    if isinstance(event, RoundCompleted):
        return {
            "event": "round_completed",
            "round_id": event.round_id,
            "guidance_png": [_b64png(s) for s in event.sketches],
        }
    raise TypeError(f"unknown event {type(event).__name__}")


def record_to_event(record: dict) -> Event:
    kind = record["event"]
    if kind == "stroke_begin":
        return StrokeBegin()
    if kind == "stroke_point":
        return StrokePoint(record["x"], record["y"], record.get("pressure", 1.0))
    if kind == "stroke_end":
        return StrokeEnd(_png64(record["canvas_png"]))
    if kind == "select_guidance":
        return SelectGuidance(int(record["index"]))
    if kind == "clear_background":
        return ClearBackground()
    if kind == "continue_drawing":
        return ContinueDrawing()
    if kind == "set_prompt":
        return SetPrompt(record["text"])
    if kind == "set_style":
        return SetStyle(record["style"])
    if kind == "round_completed":
        return RoundCompleted(
            int(record["round_id"]),
            tuple(_png64(s) for s in record["guidance_png"]),
        )
    raise ValueError(f"unknown event record {kind!r}")


def replay(config: SessionConfig, events) -> SessionState:
    """Fold a recorded event sequence into its final state (effects dropped)."""
    state = initial_state(config)
    for event in events:
        state, _ = transition(state, event)
    return state
