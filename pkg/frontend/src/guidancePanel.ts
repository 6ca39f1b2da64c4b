/**
 * The four guidance thumbnails on the right of the canvas. Rounds complete
 * out of order when the user keeps drawing, so anything older than what is
 * already shown is dropped.
 */

import { GuidanceSet } from "./protocol.js";

export interface PanelSlot {
  index: number;
  image: string; // base64 PNG
  roundId: number;
}

export class GuidancePanel {
  private slots: PanelSlot[] = [];
  private shownRound = 0;
  selectedIndex: number | null = null;

  constructor(private readonly onChange?: (slots: PanelSlot[]) => void) {}

  get currentRound(): number {
    return this.shownRound;
  }

  get thumbnails(): readonly PanelSlot[] {
    return this.slots;
  }

  /** Returns true when the panel accepted the set (not stale). */
  apply(message: GuidanceSet): boolean {
    if (message.round_id < this.shownRound) return false;
    this.shownRound = message.round_id;
    this.slots = message.images.map((image, index) => ({
      index,
      image,
      roundId: message.round_id,
    }));
    this.selectedIndex = null;
    this.onChange?.(this.slots);
    return true;
  }

  select(index: number): PanelSlot | null {
    const slot = this.slots[index];
    if (!slot) return null;
    this.selectedIndex = index;
    return slot;
  }

  clearSelection(): void {
    this.selectedIndex = null;
  }
}
