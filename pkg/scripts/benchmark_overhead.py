"""Measure pipeline orchestration cost with a zero-cost backend stub.

Every neural capability answers instantly from preallocated tensors, so the
timings cover queueing, noising, stepping, caching, and sketch refinement
only. This is the desk-measurable budget; model inference time on a GPU is
additive on top.

Usage: python scripts/benchmark_overhead.py [--rounds 25] [--candidates 4]
"""

import argparse
import statistics
import time

import numpy as np

from sketchguide.backend import BackendDescriptor, BackendKind, ModelBackend, PromptEmbedding
from sketchguide.imaging import GrayImage, Latent, RgbImage
from sketchguide.pipeline import GenerationRequest, PipelineConfig, run_round
from sketchguide.scheduler import NoiseSchedule, SchedulerCaches


class ZeroCostBackend(ModelBackend):
    def __init__(self, resolution=512):
        self.descriptor = BackendDescriptor(BackendKind.SYNTHETIC,
                                            working_resolution=resolution)
        ds = self.descriptor.latent_downscale
        self._embed = PromptEmbedding(np.zeros((8, 32)))
        self._latent = Latent(np.zeros((4, resolution // ds, resolution // ds)))
        self._rgb = RgbImage(np.full((resolution, resolution, 3), 0.5))
        rng = np.random.default_rng(0)
        lines = np.ones((resolution, resolution))
        for _ in range(40):
            y = int(rng.integers(10, resolution - 10))
            lines[y, 10 : resolution - 10] = rng.random() * 0.2
        self._lines = GrayImage(lines)

    def encode_prompt(self, text, style):
        return self._embed

    def vae_encode(self, img):
        return self._latent

    def vae_decode(self, lat):
        return self._rgb

    def predict_noise(self, latents, timesteps, embeds):
        return [self._latent] * len(latents)

    def extract_lines(self, img):
        return self._lines


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rounds", type=int, default=25)
    parser.add_argument("--candidates", type=int, default=4)
    parser.add_argument("--resolution", type=int, default=512)
    args = parser.parse_args()

    backend = ZeroCostBackend(args.resolution)
    caches = SchedulerCaches()
    schedule = NoiseSchedule.scaled_linear()
    sketch = GrayImage(np.random.default_rng(1).random((args.resolution, args.resolution)))
    request = GenerationRequest(
        round_id=1, sketch=sketch, prompt="bench", style="anime", seed=0,
        config=PipelineConfig(num_candidates=args.candidates),
    )

    for _ in range(3):  # warm the JIT and caches
        run_round(request, backend, caches, schedule)

    samples = []
    stages = {"encode": [], "denoise": [], "decode": [], "optimize": []}
    for _ in range(args.rounds):
        t0 = time.perf_counter()
        round_ = run_round(request, backend, caches, schedule)
        samples.append(time.perf_counter() - t0)
        t = round_.timings
        stages["encode"].append(t.encode)
        stages["denoise"].append(t.denoise)
        stages["decode"].append(t.decode)
        stages["optimize"].append(t.optimize)

    print(f"{args.candidates}-candidate {args.resolution}x{args.resolution} rounds "
          f"(zero-cost backend), n={args.rounds}")
    print(f"  total   median {statistics.median(samples) * 1e3:7.2f} ms   "
          f"p90 {sorted(samples)[int(0.9 * len(samples))] * 1e3:7.2f} ms")
    for stage, values in stages.items():
        print(f"  {stage:8s}median {statistics.median(values) * 1e3:7.2f} ms")


if __name__ == "__main__":
    main()
