"""Experiment configuration (versioned YAML; unknown keys are rejected)."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError, TraceIOError
from .fileio import digest_json

CONFIG_SCHEMA_VERSION = 1
DEFAULT_SEED = 2023
OUT_ENV = "ACTDESYNC_OUT"

DELAY_NAMES = ("auto", "reference", "long", "none")


@dataclass
class ExperimentConfig:
    schema_version: int = CONFIG_SCHEMA_VERSION
    seed: int = DEFAULT_SEED
    profiles: str = "reference"  # "reference" or a profile YAML path
    activations: list[str] = field(default_factory=lambda: ["relu", "sigmoid", "tanh"])
    input_domain: list[float] = field(default_factory=lambda: [-2.0, 2.0])
    n_profile: int = 2000
    protected_delay: Any = "long"  # delay name or {mean, variance}
    tvla_delay: Any = "auto"
    n_tvla: int = 5000
    fixed_input: Any = "random"  # "random" or a number
    tvla_aggregate: str = "per-call"
    layer_width: int = 1
    threshold: float = 4.5
    distinguisher_queries: int = 10
    distinguisher_trials: int = 1000
    network: Any = None  # None = VGG-19 classifier scenario; a mapping or a YAML path
    overhead_ranges: str = "reference"  # "reference" or "simulated"
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.schema_version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema_version {self.schema_version!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.activations:
            raise ConfigError("activations must be non-empty")
        if len(self.input_domain) != 2 or not self.input_domain[0] < self.input_domain[1]:
            raise ConfigError("input_domain must be [lo, hi] with lo < hi")
        if self.n_profile < 1 or self.n_tvla < 2:
            raise ConfigError("n_profile must be >= 1 and n_tvla >= 2")
        for name in ("protected_delay", "tvla_delay"):
            v = getattr(self, name)
            if isinstance(v, dict):
                if set(v) != {"mean", "variance"}:
                    raise ConfigError(f"{name} mapping needs exactly 'mean' and 'variance'")
            elif v not in DELAY_NAMES:
                raise ConfigError(f"{name} must be one of {DELAY_NAMES} or a mapping, got {v!r}")
        if not (self.fixed_input == "random" or isinstance(self.fixed_input, (int, float))):
            raise ConfigError("fixed_input must be 'random' or a number")
        if self.tvla_aggregate not in ("per-call", "per-layer"):
            raise ConfigError("tvla_aggregate must be 'per-call' or 'per-layer'")
        if self.layer_width < 1 or self.distinguisher_queries < 1 or self.distinguisher_trials < 1:
            raise ConfigError("layer_width, distinguisher_queries and distinguisher_trials must be >= 1")
        if self.overhead_ranges not in ("reference", "simulated"):
            raise ConfigError("overhead_ranges must be 'reference' or 'simulated'")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config document must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    @property
    def digest(self) -> str:
        # the output location is not part of the experiment
        d = self.to_dict()
        d.pop("out")
        return digest_json(d)

    @property
    def out_dir(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or "actdesync-out")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise TraceIOError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(doc)
