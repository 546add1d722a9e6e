"""Experiment configuration, scale presets and config-file handling.

Precedence is command-line flags > JSON config file > preset defaults.
"""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..dataset import DATA_ENV_VAR, OCULAR_SNR_LEVELS
from ..errors import ConfigError
from ..models import ARCHITECTURES, PAPER_EPOCHS, ModelSpec

BASELINES = ("filter", "EMD")
METHODS = ARCHITECTURES + BASELINES
SCALES = ("desk", "paper")

# Geometry per scale and artifact type:
# (eeg_fs, eeg_len, artifact_fs, artifact_len, n_eeg, n_artifact)
GEOMETRY = {
    ("desk", "ocular"): (64, 64, 64, 64, 100, 100),
    ("desk", "myogenic"): (64, 64, 128, 128, 100, 124),
    ("paper", "ocular"): (256, 512, 256, 512, 4514, 3400),
    ("paper", "myogenic"): (256, 512, 512, 1024, 4514, 5598),
}

WIDTHS = {
    "desk": {"feature_maps": 8, "branch_width": 4, "hidden_size": 1},
    "paper": {"feature_maps": 64, "branch_width": 32, "hidden_size": 1},
}

DEFAULT_SEEDS = {"desk": (0, 1, 2), "paper": tuple(range(10))}


@dataclass(frozen=True)
class ExperimentConfig:
    artifact_type: str = "ocular"
    models: tuple = METHODS
    scale: str = "desk"
    seeds: tuple = DEFAULT_SEEDS["desk"]
    epochs: dict = field(default_factory=dict)  # per-model overrides
    snr_levels: tuple = OCULAR_SNR_LEVELS
    data_root: str | None = None
    surrogate: bool = False
    out: str = "results"
    batch_size: int = 64
    lr: float = 5e-5
    beta1: float = 0.5
    beta2: float = 0.9
    dropout: float = 0.2
    workers: int = 1

    def __post_init__(self):
        if self.artifact_type not in ("ocular", "myogenic"):
            raise ConfigError(f"artifact_type must be 'ocular' or 'myogenic', got {self.artifact_type!r}")
        if self.scale not in SCALES:
            raise ConfigError(f"scale must be one of {SCALES}, got {self.scale!r}")
        models = tuple(self.models)
        if not models:
            raise ConfigError("at least one model or baseline is required")
        bad = [m for m in models if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {METHODS}")
        object.__setattr__(self, "models", models)
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ConfigError("at least one seed is required")
        if any(s < 0 or s >= 2**64 for s in seeds):
            raise ConfigError("seeds must be unsigned 64-bit integers")
        object.__setattr__(self, "seeds", seeds)
        levels = tuple(float(v) for v in self.snr_levels)
        if not levels:
            raise ConfigError("snr_levels must not be empty")
        object.__setattr__(self, "snr_levels", levels)
        bad = [k for k in self.epochs if k not in ARCHITECTURES]
        if bad:
            raise ConfigError(f"epoch overrides for unknown models {bad}")
        if any(int(v) < 1 for v in self.epochs.values()):
            raise ConfigError("epoch overrides must be >= 1")
        if self.batch_size < 1 or self.workers < 1:
            raise ConfigError("batch_size and workers must be >= 1")

    @property
    def geometry(self):
        return GEOMETRY[(self.scale, self.artifact_type)]

    @property
    def input_len(self):
        return self.geometry[3]

    @property
    def fs(self):
        return self.geometry[2]

    def epochs_for(self, arch: str) -> int:
        return int(self.epochs.get(arch, PAPER_EPOCHS[self.artifact_type][arch]))

    def model_spec(self, arch: str) -> ModelSpec:
        return ModelSpec(arch, self.input_len, dropout=self.dropout, **WIDTHS[self.scale])

    def resolved_data_root(self):
        return self.data_root or os.environ.get(DATA_ENV_VAR)

    def to_dict(self):
        d = asdict(self)
        d["models"] = list(self.models)
        d["seeds"] = list(self.seeds)
        d["snr_levels"] = list(self.snr_levels)
        d["epochs"] = {k: int(v) for k, v in sorted(self.epochs.items())}
        return d


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    return data


def make_config(file_values: dict | None = None, **flags) -> ExperimentConfig:
    """Merge preset defaults, config file values and non-None flag values."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in flags.items() if v is not None})
    scale = merged.get("scale", "desk")
    if "seeds" not in merged and scale in DEFAULT_SEEDS:
        merged["seeds"] = DEFAULT_SEEDS[scale]
    try:
        return ExperimentConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
