/**
 * Message types spoken over the guidance service WebSocket.
 * Images travel as base64 PNG strings.
 */

export type SessionMode = "active" | "paused_bg" | "paused_cleared";

// client -> server

export interface OpenSession {
  type: "open_session";
  session_id?: string;
}

export interface StrokeBegin {
  type: "stroke_begin";
}

export interface StrokePoint {
  type: "stroke_point";
  x: number;
  y: number;
  pressure: number;
}

export interface StrokeEnd {
  type: "stroke_end";
  canvas_png: string;
}

export interface SetPrompt {
  type: "set_prompt";
  text: string;
}

export interface SetStyle {
  type: "set_style";
  id: string;
}

export interface SelectGuidance {
  type: "select_guidance";
  index: number;
}

export interface ClearBackground {
  type: "clear_background";
}

export interface ContinueDrawing {
  type: "continue_drawing";
}

export type ClientMessage =
  | OpenSession
  | StrokeBegin
  | StrokePoint
  | StrokeEnd
  | SetPrompt
  | SetStyle
  | SelectGuidance
  | ClearBackground
  | ContinueDrawing;

// server -> client

export interface SessionOpened {
  type: "session_opened";
  session_id: string;
  mode: SessionMode;
  config: {
    working_resolution: number;
    styles: string[];
    tau: number;
    num_candidates: number;
  };
}

export interface GuidanceSet {
  type: "guidance_set";
  round_id: number;
  images: string[];
}

export interface StateChanged {
  type: "state_changed";
  mode: SessionMode;
  background?: string;
}

export interface RoundSkipped {
  type: "round_skipped";
  round_id: number;
  similarity: number;
  probability: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export type ServerMessage =
  | SessionOpened
  | GuidanceSet
  | StateChanged
  | RoundSkipped
  | ErrorMessage;
