/**
 * Pointer lifecycle -> stroke messages. One down/move/up gesture produces
 * exactly one stroke_end, carrying the exported stroke layer; generation
 * is triggered by stroke ends only, so no messages fire mid-gesture except
 * lightweight point records.
 */

import { CanvasModel } from "./canvasModel.js";

export interface StrokeSink {
  strokeBegin(): void;
  strokePoint(x: number, y: number, pressure: number): void;
  strokeEnd(strokePixels: Uint8ClampedArray): void;
}

export interface PointerSample {
  x: number;
  y: number;
  pressure: number;
}

export class StrokeEngine {
  private drawing = false;
  private last: PointerSample | null = null;

  constructor(
    private readonly canvas: CanvasModel,
    private readonly sink: StrokeSink,
  ) {}

  get isDrawing(): boolean {
    return this.drawing;
  }

  pointerDown(sample: PointerSample): void {
    if (this.drawing) return; // second pointer or duplicate event
    this.drawing = true;
    this.last = sample;
    this.canvas.stamp(sample);
    this.sink.strokeBegin();
    this.sink.strokePoint(sample.x, sample.y, sample.pressure);
  }

  pointerMove(sample: PointerSample): void {
    if (!this.drawing || this.last === null) return; // hover, not drawing
    this.canvas.stampLine(this.last, sample);
    this.last = sample;
    this.sink.strokePoint(sample.x, sample.y, sample.pressure);
  }

  pointerUp(sample?: PointerSample): void {
    if (!this.drawing) return; // up without down is ignored
    if (sample && this.last) {
      this.canvas.stampLine(this.last, sample);
    }
    this.drawing = false;
    this.last = null;
    this.sink.strokeEnd(this.canvas.exportStrokeBytes());
  }

  /** Pointer left the surface or was cancelled: finish the stroke. */
  pointerCancel(): void {
    this.pointerUp();
  }
}
