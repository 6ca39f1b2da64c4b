/**
 * Browser entry: wires the drawing surface, prompt and style controls, the
 * four guidance thumbnails, and the background fix / clear / continue
 * buttons to the guidance service.
 */

import { CanvasModel, BACKGROUND_OPACITY } from "./canvasModel.js";
import { GuidanceClient } from "./client.js";
import { GuidancePanel } from "./guidancePanel.js";
import { ServerMessage } from "./protocol.js";
import { StrokeEngine } from "./strokeEngine.js";
import { UiState } from "./uiState.js";

const CANVAS_SIZE = 512;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function grayToImageData(gray: Float32Array, size: number): ImageData {
  const data = new Uint8ClampedArray(size * size * 4);
  for (let i = 0; i < gray.length; i++) {
    const v = Math.round(gray[i] * 255);
    data[i * 4] = v;
    data[i * 4 + 1] = v;
    data[i * 4 + 2] = v;
    data[i * 4 + 3] = 255;
  }
  return new ImageData(data, size, size);
}

async function pngToGray(pngBase64: string, size: number): Promise<Float32Array> {
  const img = new Image();
  img.src = `data:image/png;base64,${pngBase64}`;
  await img.decode();
  const scratch = document.createElement("canvas");
  scratch.width = size;
  scratch.height = size;
  const ctx = scratch.getContext("2d")!;
  ctx.drawImage(img, 0, 0, size, size);
  const rgba = ctx.getImageData(0, 0, size, size).data;
  const gray = new Float32Array(size * size);
  for (let i = 0; i < gray.length; i++) {
    gray[i] = rgba[i * 4] / 255;
  }
  return gray;
}

function strokesToPngBase64(pixels: Uint8ClampedArray, size: number): string {
  const scratch = document.createElement("canvas");
  scratch.width = size;
  scratch.height = size;
  const ctx = scratch.getContext("2d")!;
  const rgba = new Uint8ClampedArray(size * size * 4);
  for (let i = 0; i < pixels.length; i++) {
    rgba[i * 4] = pixels[i];
    rgba[i * 4 + 1] = pixels[i];
    rgba[i * 4 + 2] = pixels[i];
    rgba[i * 4 + 3] = 255;
  }
  ctx.putImageData(new ImageData(rgba, size, size), 0, 0);
  return scratch.toDataURL("image/png").split(",", 2)[1];
}

function main(): void {
  const surface = el<HTMLCanvasElement>("surface");
  surface.width = CANVAS_SIZE;
  surface.height = CANVAS_SIZE;
  const ctx = surface.getContext("2d")!;

  const model = new CanvasModel(CANVAS_SIZE, CANVAS_SIZE);
  const ui = new UiState();
  const statusLine = el<HTMLSpanElement>("status");
  const skipLine = el<HTMLSpanElement>("skip-info");

  function redraw(): void {
    ctx.putImageData(grayToImageData(model.composite(), CANVAS_SIZE), 0, 0);
  }

  function refreshStatus(): void {
    statusLine.textContent = `${ui.connection} | mode: ${ui.mode}`;
    el<HTMLButtonElement>("clear-bg").disabled = ui.mode !== "paused_bg";
    el<HTMLButtonElement>("continue-drawing").disabled = ui.mode === "active";
  }

  const panel = new GuidancePanel((slots) => {
    for (const slot of slots) {
      const thumb = el<HTMLImageElement>(`thumb-${slot.index}`);
      thumb.src = `data:image/png;base64,${slot.image}`;
      thumb.dataset.roundId = String(slot.roundId);
    }
  });

  const client = new GuidanceClient({
    url: `ws://${location.host}/ws`,
    onMessage: (message: ServerMessage) => {
      ui.applyServerMessage(message);
      if (message.type === "guidance_set") {
        panel.apply(message);
      } else if (message.type === "state_changed") {
        if (message.background) {
          void pngToGray(message.background, CANVAS_SIZE).then((gray) => {
            model.setBackground(gray);
            redraw();
          });
        } else {
          model.setBackground(null);
          redraw();
        }
      } else if (message.type === "round_skipped") {
        skipLine.textContent =
          `round ${message.round_id} skipped ` +
          `(similarity ${message.similarity.toFixed(3)})`;
      } else if (message.type === "error") {
        skipLine.textContent = ui.lastError ?? "";
      }
      refreshStatus();
    },
    onStatus: (status) => {
      ui.connection = status;
      refreshStatus();
    },
  });

  const engine = new StrokeEngine(model, {
    strokeBegin: () => client.send({ type: "stroke_begin" }),
    strokePoint: (x, y, pressure) =>
      client.send({ type: "stroke_point", x, y, pressure }),
    strokeEnd: (pixels) =>
      client.send({
        type: "stroke_end",
        canvas_png: strokesToPngBase64(pixels, CANVAS_SIZE),
      }),
  });

  const samplePointer = (ev: PointerEvent) => {
    const rect = surface.getBoundingClientRect();
    return {
      x: ((ev.clientX - rect.left) / rect.width) * CANVAS_SIZE,
      y: ((ev.clientY - rect.top) / rect.height) * CANVAS_SIZE,
      pressure: ev.pressure > 0 ? ev.pressure : 0.5,
    };
  };

  surface.addEventListener("pointerdown", (ev) => {
    surface.setPointerCapture(ev.pointerId);
    engine.pointerDown(samplePointer(ev));
    redraw();
  });
  surface.addEventListener("pointermove", (ev) => {
    engine.pointerMove(samplePointer(ev));
    if (engine.isDrawing) redraw();
  });
  surface.addEventListener("pointerup", (ev) => {
    engine.pointerUp(samplePointer(ev));
    redraw();
  });
  surface.addEventListener("pointercancel", () => engine.pointerCancel());

  // prompt submits on explicit action, not per keystroke
  const promptInput = el<HTMLInputElement>("prompt");
  const submitPrompt = () =>
    client.send({ type: "set_prompt", text: promptInput.value });
  el<HTMLButtonElement>("apply-prompt").addEventListener("click", submitPrompt);
  promptInput.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") submitPrompt();
  });

  el<HTMLSelectElement>("style").addEventListener("change", (ev) => {
    client.send({ type: "set_style", id: (ev.target as HTMLSelectElement).value });
  });

  for (let i = 0; i < 4; i++) {
    el<HTMLImageElement>(`thumb-${i}`).addEventListener("click", () => {
      if (panel.select(i)) {
        client.send({ type: "select_guidance", index: i });
      }
    });
  }

  el<HTMLButtonElement>("clear-bg").addEventListener("click", () =>
    client.send({ type: "clear_background" }),
  );
  el<HTMLButtonElement>("continue-drawing").addEventListener("click", () =>
    client.send({ type: "continue_drawing" }),
  );
  el<HTMLButtonElement>("clear-canvas").addEventListener("click", () => {
    model.clearStrokes();
    redraw();
  });

  redraw();
  refreshStatus();
  client.connect();
}

document.addEventListener("DOMContentLoaded", main);

export { BACKGROUND_OPACITY };
