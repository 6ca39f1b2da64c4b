"""Command-line interface: headless generation rounds and the service runner."""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from .config import ENV_CONFIG_PATH, ServiceConfig, load_config, override
from .gate import GateAction, GateState, evaluate
from .imaging import load_gray_png, resize_bilinear, save_png
from .pipeline import GenerationRequest, format_metrics, run_round
from .scheduler import SchedulerCaches


def _resolve_config(config_path, **overrides) -> ServiceConfig:
    path = config_path or os.environ.get(ENV_CONFIG_PATH)
    base = load_config(path) if path else ServiceConfig()
    return override(base, **overrides)


def common_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     default=None, help="TOML config file (env GUIDANCE_CONFIG also works)."),
        click.option("--backend", type=click.Choice(["synthetic", "remote"]), default=None),
        click.option("--remote", "remote_addr", default=None, metavar="HOST:PORT"),
        click.option("--tau", type=float, default=None, help="Skip-gate threshold."),
        click.option("--seed", type=int, default=None, help="Gate and round seed."),
        click.option("--steps", type=int, default=None, help="Denoising plan size."),
        click.option("--guidance-scale", type=float, default=None),
        click.option("--cfg", "cfg_mode", type=click.Choice(["none", "full"]), default=None),
        click.option("--sigma-s", type=float, default=None, help="Filter spatial scale."),
        click.option("--sigma-r", type=float, default=None, help="Filter range scale."),
        click.option("--iterations", type=int, default=None, help="Filter iterations."),
        click.option("--strength", type=float, default=None, help="Noising depth in (0, 1]."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Real-time drawing guidance engine."""


@main.command()
@common_options
@click.option("--prompt", default="", help="Text prompt conditioning the round.")
@click.option("--style", default=None, help="Style id from the configured list.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out",
              show_default=True)
@click.argument("inputs", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
def generate(config_path, prompt, style, out_dir, inputs, **overrides):
    """Run generation rounds headlessly over one or more input sketch PNGs.

    Consecutive inputs share one skip gate, so near-identical sketches can be
    skipped exactly as they would be in an interactive session.
    """
    config = _resolve_config(config_path, **overrides)
    style = style if style is not None else config.styles[0]
    if style not in config.styles:
        raise click.UsageError(f"style {style!r} not in configured styles {config.styles}")

    backend = config.build_backend()
    schedule = config.build_schedule()
    caches = SchedulerCaches()
    filter_params = config.filter_params()
    pipeline_config = config.pipeline_config()
    gate = GateState.from_seed(tau=config.tau, seed=config.seed)

    out_root = Path(out_dir)
    res = config.working_resolution
    for index, input_path in enumerate(inputs, start=1):
        sketch = load_gray_png(input_path)
        if (sketch.width, sketch.height) != (res, res):
            sketch = resize_bilinear(sketch, res, res)
        decision, gate = evaluate(gate, sketch, prompt, style)
        if decision.action is GateAction.SKIP:
            click.echo(
                f"input={input_path} round_id={index} action=skip "
                f"similarity={decision.similarity:.6f} "
                f"probability={decision.probability:.6f}"
            )
            continue

        request = GenerationRequest(
            round_id=index,
            sketch=sketch,
            prompt=prompt,
            style=style,
            seed=(config.seed + index) & 0xFFFFFFFFFFFFFFFF,
            config=pipeline_config,
        )
        round_ = run_round(request, backend, caches, schedule, filter_params)
        target = out_root if len(inputs) == 1 else out_root / f"round_{index:03d}"
        target.mkdir(parents=True, exist_ok=True)
        for i, rgb in enumerate(round_.rgb_candidates):
            save_png(rgb, target / f"candidate_{i}.png")
        for i, sketch_out in enumerate(round_.guidance_sketches):
            save_png(sketch_out, target / f"guidance_{i}.png")
        click.echo(
            f"input={input_path} action=generate "
            f"similarity={decision.similarity:.6f} "
            f"probability={decision.probability:.6f} {format_metrics(round_)}"
        )


@main.command()
@common_options
@click.option("--listen", default=None, metavar="HOST:PORT")
@click.option("--data-dir", default=None, type=click.Path(file_okay=False))
@click.option("--static-dir", default=None, type=click.Path(file_okay=False),
              help="Directory with the built web UI to serve at /.")
def serve(config_path, listen, data_dir, static_dir, **overrides):
    """Run the WebSocket guidance service."""
    from .service import serve as run_service

    config = _resolve_config(config_path, listen=listen, data_dir=data_dir,
                             static_dir=static_dir, **overrides)
    run_service(config)


if __name__ == "__main__":
    sys.exit(main())
