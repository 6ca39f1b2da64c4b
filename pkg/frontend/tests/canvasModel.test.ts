import { describe, expect, it } from "vitest";

import { BACKGROUND_OPACITY, CanvasModel } from "../src/canvasModel.js";

function drawDiagonal(model: CanvasModel): void {
  model.stampLine(
    { x: 2, y: 2, pressure: 0.6 },
    { x: 20, y: 20, pressure: 0.6 },
  );
}

function darkBackground(size: number): Float32Array {
  return new Float32Array(size * size).fill(0.2);
}

describe("CanvasModel layers", () => {
  it("export contains strokes only, pixel-identical with or without background", () => {
    const withBg = new CanvasModel(24, 24);
    const withoutBg = new CanvasModel(24, 24);
    withBg.setBackground(darkBackground(24));
    drawDiagonal(withBg);
    drawDiagonal(withoutBg);
    expect(withBg.exportStrokeBytes()).toEqual(withoutBg.exportStrokeBytes());
    expect(withBg.exportStrokes()).toEqual(withoutBg.exportStrokes());
  });

  it("composite shows the background but export does not", () => {
    const model = new CanvasModel(16, 16);
    model.setBackground(darkBackground(16));
    const composite = model.composite();
    const exported = model.exportStrokes();
    // untouched canvas: export is pure white, composite is dimmed by the layer
    expect(exported.every((v) => v === 1.0)).toBe(true);
    const expected = 1.0 - BACKGROUND_OPACITY * (1.0 - 0.2);
    expect(composite.every((v) => Math.abs(v - expected) < 1e-6)).toBe(true);
  });

  it("clearing the background restores the composite", () => {
    const model = new CanvasModel(16, 16);
    model.setBackground(darkBackground(16));
    model.setBackground(null);
    expect(model.hasBackground()).toBe(false);
    expect(model.composite().every((v) => v === 1.0)).toBe(true);
  });

  it("ink darkens strokes monotonically and stays within bounds", () => {
    const model = new CanvasModel(16, 16);
    model.stamp({ x: 8, y: 8, pressure: 1.0 });
    const strokes = model.exportStrokes();
    expect(Math.min(...strokes)).toBe(0);
    expect(Math.max(...strokes)).toBe(1);
  });

  it("stamps clip at the canvas edge without wrapping", () => {
    const model = new CanvasModel(8, 8);
    model.stamp({ x: 0, y: 0, pressure: 1.0 });
    const strokes = model.exportStrokes();
    // bottom-right corner stays clean
    expect(strokes[63]).toBe(1.0);
  });

  it("rejects mismatched background sizes", () => {
    const model = new CanvasModel(8, 8);
    expect(() => model.setBackground(new Float32Array(9))).toThrow();
  });

  it("clearStrokes removes ink but keeps the background", () => {
    const model = new CanvasModel(8, 8);
    model.setBackground(darkBackground(8));
    model.stamp({ x: 4, y: 4, pressure: 1.0 });
    model.clearStrokes();
    expect(model.exportStrokes().every((v) => v === 1.0)).toBe(true);
    expect(model.hasBackground()).toBe(true);
  });
});
