"""Versioned JSON persistence for trained survival models."""
from __future__ import annotations

import json

from ..errors import SchemaError
from .aft import BoostedAftModel
from .mlp import MlpSurvivalModel
from .normalize import QuantileNormalizer

SCHEMA_VERSION = 1

__all__ = ["model_to_dict", "model_from_dict", "save_model", "load_model", "SCHEMA_VERSION"]


def model_to_dict(model, normalizer: QuantileNormalizer | None = None) -> dict:
    payload = model.to_dict()
    payload["schema_version"] = SCHEMA_VERSION
    payload["normalizer"] = normalizer.to_dict() if normalizer is not None else None
    return payload


def model_from_dict(payload: dict):
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported model schema version {version!r}; expected {SCHEMA_VERSION}")
    kind = payload.get("kind")
    if kind == "boosted_aft":
        model = BoostedAftModel.from_dict(payload)
    elif kind == "mlp_deephit":
        model = MlpSurvivalModel.from_dict(payload)
    else:
        raise SchemaError(f"unknown model kind {kind!r}")
    normalizer = None
    if payload.get("normalizer") is not None:
        normalizer = QuantileNormalizer.from_dict(payload["normalizer"])
    return model, normalizer


def save_model(model, path, normalizer: QuantileNormalizer | None = None) -> None:
    from ..io import atomic_write_text

    atomic_write_text(path, json.dumps(model_to_dict(model, normalizer), sort_keys=True))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
