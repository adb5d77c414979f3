"""Pydantic request/response models for the HTTP service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class EcgPayload(BaseModel):
    samples_mv: list[float]
    fs: float = Field(gt=0)
    lead: str = "I"


class RrDayPayload(BaseModel):
    intervals_ms: list[float]
    onset_times_s: list[float] | None = None
    segment_ids: list[int] | None = None


class SynthRequest(BaseModel):
    n_beats: int = Field(default=40, ge=3, le=600)
    rr_ms: float = Field(default=800.0, ge=250.0, le=3000.0)
    fs: float = Field(default=200.0, ge=100.0)
    noise_std: float = Field(default=0.0, ge=0.0)
    seed: int = 0


class SynthResponse(BaseModel):
    ecg: EcgPayload
    r_peak_indices: list[int]


class ExtractRequest(BaseModel):
    ecg: EcgPayload
    rr_day: RrDayPayload | None = None
    sampling_seed: int = 0


class ExtractResponse(BaseModel):
    features: dict[str, float | None]
    n_peaks: int


class ModelUpload(BaseModel):
    model_id: str = Field(min_length=1, max_length=64)
    payload: dict


class PredictRequest(BaseModel):
    model_id: str
    features: dict[str, float | None]
    horizon_years: float = 5.0


class PredictResponse(BaseModel):
    times: list[float]
    survival: list[float]
    risk_within_horizon: float


class OutcomeRow(BaseModel):
    features: dict[str, float | None]
    y: float = Field(gt=0)
    delta: int = Field(ge=0, le=1)


class EvaluateRequest(BaseModel):
    model_id: str
    rows: list[OutcomeRow]


class EvaluateResponse(BaseModel):
    c_index: float | None
    auc_5y: float | None
    ibs: float | None
    mean_cd_auc: float | None
