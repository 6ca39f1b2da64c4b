"""Service configuration: defaults, TOML loading, and component builders.

The config file is TOML with [service], [backend], [gate], [pipeline] and
[filter] tables; unknown tables or keys are rejected outright so typos fail
loudly. The GUIDANCE_CONFIG environment variable supplies the path when the
CLI is not given one explicitly.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backend import (
    BackendDescriptor,
    BackendKind,
    DEFAULT_STYLES,
    ModelBackend,
    SyntheticBackend,
)
from .optimizer import FilterParams
from .pipeline import PipelineConfig
from .scheduler import CfgMode, GuidanceConfig, NoiseSchedule, TimestepPlan
from .session import SessionConfig

ENV_CONFIG_PATH = "GUIDANCE_CONFIG"


@dataclass(frozen=True)
class ServiceConfig:
    # [service]
    listen: str = "127.0.0.1:8765"
    data_dir: str = "guidance-data"
    static_dir: str = ""
    # [backend]
    backend: str = "synthetic"
    remote_addr: str = ""
    remote_timeout: float = 30.0
    remote_in_flight: int = 4
    fallback_to_synthetic: bool = False
    backend_seed: int = 0
    working_resolution: int = 512
    styles: Tuple[str, ...] = DEFAULT_STYLES
    # [gate]
    tau: float = 0.95
    seed: int = 0
    # [pipeline]
    num_candidates: int = 4
    steps: int = 4
    total_steps: int = 1000
    beta_start: float = 0.00085
    beta_end: float = 0.012
    cfg_mode: str = "none"
    guidance_scale: float = 1.0
    strength: float = 0.8
    # [filter]
    sigma_s: float = 8.0
    sigma_r: float = 0.1
    iterations: int = 3

    def __post_init__(self):
        if self.backend not in ("synthetic", "remote"):
            raise ValueError(f"backend must be synthetic or remote, got {self.backend!r}")
        if self.backend == "remote" and not self.remote_addr:
            raise ValueError("remote backend requires remote_addr")
        if self.cfg_mode not in ("none", "full"):
            raise ValueError(f"cfg_mode must be none or full, got {self.cfg_mode!r}")
        if not (0.0 <= self.tau < 1.0):
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")
        # delegate the remaining range checks to the component types
        self.pipeline_config()
        self.filter_params()
        self.descriptor()

    # -- builders ---------------------------------------------------------

    def descriptor(self) -> BackendDescriptor:
        kind = BackendKind.SYNTHETIC if self.backend == "synthetic" else BackendKind.REMOTE
        return BackendDescriptor(
            kind=kind,
            working_resolution=self.working_resolution,
            styles=tuple(self.styles),
        )

    def build_backend(self) -> ModelBackend:
        if self.backend == "synthetic":
            return SyntheticBackend(seed=self.backend_seed, descriptor=self.descriptor())
        from .remote import RemoteBackend  # deferred: only needed for remote mode

        return RemoteBackend(
            self.remote_addr,
            descriptor=self.descriptor(),
            timeout=self.remote_timeout,
            max_in_flight=self.remote_in_flight,
        )

    def build_schedule(self) -> NoiseSchedule:
        return NoiseSchedule.scaled_linear(
            total_steps=self.total_steps,
            beta_start=self.beta_start,
            beta_end=self.beta_end,
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            num_candidates=self.num_candidates,
            steps=TimestepPlan.uniform(self.steps, self.total_steps),
            guidance=GuidanceConfig(CfgMode(self.cfg_mode), self.guidance_scale),
            strength=self.strength,
        )

    def filter_params(self) -> FilterParams:
        return FilterParams(self.sigma_s, self.sigma_r, self.iterations)

    def session_config(self) -> SessionConfig:
        return SessionConfig(
            width=self.working_resolution,
            height=self.working_resolution,
            tau=self.tau,
            gate_seed=self.seed,
            base_seed=self.seed,
            styles=tuple(self.styles),
            default_style=self.styles[0],
            pipeline=self.pipeline_config(),
        )


_TABLES = {
    "service": ("listen", "data_dir", "static_dir"),
    "backend": ("backend", "remote_addr", "remote_timeout", "remote_in_flight",
                "fallback_to_synthetic", "backend_seed", "working_resolution", "styles"),
    "gate": ("tau", "seed"),
    "pipeline": ("num_candidates", "steps", "total_steps", "beta_start", "beta_end",
                 "cfg_mode", "guidance_scale", "strength"),
    "filter": ("sigma_s", "sigma_r", "iterations"),
}


def load_config(path) -> ServiceConfig:
    with open(Path(path), "rb") as fh:
        raw = tomllib.load(fh)

    kwargs = {}
    for table, content in raw.items():
        if table not in _TABLES:
            raise ValueError(f"unknown config table [{table}]")
        if not isinstance(content, dict):
            raise ValueError(f"[{table}] must be a table of key/value pairs")
        for key, value in content.items():
            if key not in _TABLES[table]:
                raise ValueError(f"unknown key {key!r} in [{table}]")
            if key == "styles":
                value = tuple(value)
            kwargs[key] = value
    return ServiceConfig(**kwargs)


def override(config: ServiceConfig, **kwargs) -> ServiceConfig:
    """Apply non-None keyword overrides (CLI flags beat the file)."""
    known = {f.name for f in fields(ServiceConfig)}
    updates = {}
    for key, value in kwargs.items():
        if key not in known:
            raise ValueError(f"unknown config field {key!r}")
        if value is not None:
            updates[key] = value
    return replace(config, **updates) if updates else config
