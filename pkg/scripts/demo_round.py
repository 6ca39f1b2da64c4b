"""Run one guidance round end to end on a synthetic backend and save outputs.

Draws a procedural sketch (a face-ish arrangement of circles and strokes),
runs the full pipeline, and writes the candidates, guidance sketches, and a
side-by-side sheet under --out. Prints the per-stage metrics line.

Usage: python scripts/demo_round.py [--out demo_out] [--seed 7] [--prompt ...]
"""

import argparse
from pathlib import Path

import numpy as np

from sketchguide.backend import SyntheticBackend
from sketchguide.imaging import GrayImage, save_png
from sketchguide.pipeline import GenerationRequest, PipelineConfig, format_metrics, run_round
from sketchguide.scheduler import NoiseSchedule, SchedulerCaches


def procedural_sketch(size=512, seed=0) -> GrayImage:
    rng = np.random.default_rng(seed)
    img = np.ones((size, size))
    yy, xx = np.mgrid[0:size, 0:size]

    def circle(cx, cy, r, thickness=2.0):
        d = np.abs(np.hypot(xx - cx, yy - cy) - r)
        img[d < thickness] = 0.0

    circle(size * 0.5, size * 0.45, size * 0.28)          # head
    circle(size * 0.42, size * 0.4, size * 0.035)          # eyes
    circle(size * 0.58, size * 0.4, size * 0.035)
    # a few freehand-ish strokes
    for _ in range(4):
        x0, y0 = rng.uniform(0.2, 0.8, 2) * size
        angle = rng.uniform(0, np.pi)
        length = rng.uniform(0.1, 0.3) * size
        ts = np.linspace(0, 1, int(length) * 2)
        xs = (x0 + ts * length * np.cos(angle)).astype(int)
        ys = (y0 + ts * length * np.sin(angle)).astype(int)
        keep = (xs >= 1) & (xs < size - 1) & (ys >= 1) & (ys < size - 1)
        for dx in (-1, 0, 1):
            img[ys[keep], xs[keep] + dx] = 0.0
    return GrayImage(img)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="demo_out")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--prompt", default="a cheerful character portrait")
    parser.add_argument("--style", default="anime")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    sketch = procedural_sketch(seed=args.seed)
    save_png(sketch, out / "input_sketch.png")

    backend = SyntheticBackend(seed=0)
    request = GenerationRequest(
        round_id=1, sketch=sketch, prompt=args.prompt, style=args.style,
        seed=args.seed, config=PipelineConfig(),
    )
    round_ = run_round(request, backend, SchedulerCaches(), NoiseSchedule.scaled_linear())
    for i, rgb in enumerate(round_.rgb_candidates):
        save_png(rgb, out / f"candidate_{i}.png")
    for i, guidance in enumerate(round_.guidance_sketches):
        save_png(guidance, out / f"guidance_{i}.png")
    print(format_metrics(round_))
    print(f"outputs in {out}/")


if __name__ == "__main__":
    main()
