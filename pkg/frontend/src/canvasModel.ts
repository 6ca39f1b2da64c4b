/**
 * Layered drawing surface: the user's strokes live on their own grayscale
 * layer; a selected guidance sketch can sit underneath as a background
 * reference. Exports for the server contain the stroke layer only, so the
 * skip gate always compares user drawing to user drawing, never to the
 * traced-over guidance.
 */

export const BACKGROUND_OPACITY = 0.3;

export interface BrushStamp {
  x: number;
  y: number;
  pressure: number; // 0..1, scales the radius
}

export class CanvasModel {
  readonly width: number;
  readonly height: number;
  /** stroke layer intensities in [0,1]; 1 = untouched white */
  private strokes: Float32Array;
  private background: Float32Array | null = null;
  readonly minBrush: number;
  readonly maxBrush: number;

  constructor(width: number, height: number, minBrush = 1, maxBrush = 8) {
    this.width = width;
    this.height = height;
    this.minBrush = minBrush;
    this.maxBrush = maxBrush;
    this.strokes = new Float32Array(width * height).fill(1.0);
  }

  brushRadius(pressure: number): number {
    const p = Math.min(1, Math.max(0, pressure));
    return (this.minBrush + p * (this.maxBrush - this.minBrush)) / 2;
  }

  /** Stamp one round dab of ink; darkness also scales with pressure. */
  stamp({ x, y, pressure }: BrushStamp, ink = 0.0): void {
    const radius = this.brushRadius(pressure);
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(x - radius));
    const x1 = Math.min(this.width - 1, Math.ceil(x + radius));
    const y0 = Math.max(0, Math.floor(y - radius));
    const y1 = Math.min(this.height - 1, Math.ceil(y + radius));
    for (let py = y0; py <= y1; py++) {
      for (let px = x0; px <= x1; px++) {
        const dx = px - x;
        const dy = py - y;
        if (dx * dx + dy * dy <= r2) {
          const i = py * this.width + px;
          if (ink < this.strokes[i]) this.strokes[i] = ink;
        }
      }
    }
  }

  /** Stamp along the segment from a to b so fast gestures stay solid. */
  stampLine(a: BrushStamp, b: BrushStamp): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(b.x - a.x, b.y - a.y)));
    for (let s = 0; s <= steps; s++) {
      const t = s / steps;
      this.stamp({
        x: a.x + t * (b.x - a.x),
        y: a.y + t * (b.y - a.y),
        pressure: a.pressure + t * (b.pressure - a.pressure),
      });
    }
  }

  setBackground(gray: Float32Array | null): void {
    if (gray !== null && gray.length !== this.width * this.height) {
      throw new Error(
        `background size ${gray.length} != canvas ${this.width * this.height}`,
      );
    }
    this.background = gray === null ? null : Float32Array.from(gray);
  }

  hasBackground(): boolean {
    return this.background !== null;
  }

  clearStrokes(): void {
    this.strokes.fill(1.0);
  }

  /** Strokes only; this is what stroke_end ships to the server. */
  exportStrokes(): Float32Array {
    return Float32Array.from(this.strokes);
  }

  /** Strokes over the (dimmed) background; this is what the user sees. */
  composite(): Float32Array {
    const out = new Float32Array(this.width * this.height);
    for (let i = 0; i < out.length; i++) {
      const under =
        this.background === null
          ? 1.0
          : 1.0 - BACKGROUND_OPACITY * (1.0 - this.background[i]);
      out[i] = Math.min(this.strokes[i], under);
    }
    return out;
  }

  /** 8-bit gray pixels of the stroke layer, for PNG export. */
  exportStrokeBytes(): Uint8ClampedArray {
    const out = new Uint8ClampedArray(this.strokes.length);
    for (let i = 0; i < this.strokes.length; i++) {
      out[i] = Math.round(this.strokes[i] * 255);
    }
    return out;
  }
}
