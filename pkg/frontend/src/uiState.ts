/**
 * Client-side mirror of the server session mode. The UI never transitions
 * modes on its own: button clicks send messages, and the mirror converges
 * to whatever the last state_changed said.
 */

import { ServerMessage, SessionMode } from "./protocol.js";

export type ConnectionStatus = "connected" | "disconnected" | "reconnecting";

export class UiState {
  mode: SessionMode = "active";
  background: string | null = null;
  sessionId: string | null = null;
  connection: ConnectionStatus = "disconnected";
  lastError: string | null = null;
  lastSkip: { roundId: number; similarity: number; probability: number } | null =
    null;

  applyServerMessage(message: ServerMessage): void {
    switch (message.type) {
      case "session_opened":
        this.sessionId = message.session_id;
        this.mode = message.mode;
        break;
      case "state_changed":
        this.mode = message.mode;
        this.background = message.background ?? null;
        break;
      case "round_skipped":
        this.lastSkip = {
          roundId: message.round_id,
          similarity: message.similarity,
          probability: message.probability,
        };
        break;
      case "error":
        this.lastError = `${message.code}: ${message.message}`;
        break;
      case "guidance_set":
        break; // handled by the panel
    }
  }
}
