"""Structured pipeline configuration loaded from JSON.

Every section is validated strictly: unknown keys are rejected so a typo in
a config file fails loudly instead of silently using a default.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import SchemaError
from .hrv import SamplingStrategy
from .signal import FilterSpec
from .survival import AftConfig, LossConfig, MlpSpec, TimeGrid, TrainParams


@dataclass(frozen=True)
class DetectorOptions:
    ectopic_filter: bool = False
    max_jump_ratio: float = 1.3


@dataclass(frozen=True)
class SynthOptions:
    """Synthetic cohort generation for the end-to-end pipeline."""

    n_subjects: int = 60
    ecg_duration_s: float = 30.0
    fs: float = 200.0
    day_hours: float = 24.0
    risk_strength: float = 2.4
    censor_quantile: float = 0.8


@dataclass(frozen=True)
class StudyOptions:
    strip_lengths_min: tuple[float, ...] = (1.0, 5.0, 10.0, 30.0, 60.0)
    strip_counts: tuple[int, ...] = (3, 6, 12, 24)
    n_days: int = 50
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    comparison: bool = False
    cohort_n: int = 1200
    hrv_signal: float = 1.5


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    filter: FilterSpec = field(default_factory=FilterSpec)
    detector: DetectorOptions = field(default_factory=DetectorOptions)
    sampling: SamplingStrategy = field(default_factory=SamplingStrategy)
    grid: TimeGrid = field(default_factory=TimeGrid)
    loss: LossConfig = field(default_factory=LossConfig)
    aft: AftConfig = field(default_factory=AftConfig)
    mlp: MlpSpec = field(default_factory=MlpSpec)
    train: TrainParams = field(default_factory=TrainParams)
    synth: SynthOptions = field(default_factory=SynthOptions)
    study: StudyOptions = field(default_factory=StudyOptions)


_SECTIONS = {
    "filter": FilterSpec,
    "detector": DetectorOptions,
    "sampling": SamplingStrategy,
    "grid": TimeGrid,
    "loss": LossConfig,
    "aft": AftConfig,
    "mlp": MlpSpec,
    "train": TrainParams,
    "synth": SynthOptions,
    "study": StudyOptions,
}

_TUPLE_FIELDS = {"strip_lengths_min", "strip_counts", "seeds", "augment_range"}


def _build_section(cls, payload: dict, section: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(payload) - known
    if unknown:
        raise SchemaError(f"config section {section!r}: unknown keys {sorted(unknown)}")
    kwargs = {
        key: tuple(value) if key in _TUPLE_FIELDS and isinstance(value, list) else value
        for key, value in payload.items()
    }
    return cls(**kwargs)


def config_from_dict(payload: dict) -> PipelineConfig:
    unknown = set(payload) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise SchemaError(f"config: unknown keys {sorted(unknown)}")
    kwargs = {}
    if "seed" in payload:
        if not isinstance(payload["seed"], int):
            raise SchemaError("config: seed must be an integer")
        kwargs["seed"] = payload["seed"]
    for section, cls in _SECTIONS.items():
        if section in payload:
            if not isinstance(payload[section], dict):
                raise SchemaError(f"config section {section!r} must be an object")
            kwargs[section] = _build_section(cls, payload[section], section)
    return PipelineConfig(**kwargs)


def load_config(path) -> PipelineConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise SchemaError(f"{path}: config root must be an object")
    return config_from_dict(payload)
