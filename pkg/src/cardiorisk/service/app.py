"""FastAPI service wrapping the scoring pipeline.

Models live in an in-memory registry, optionally preloaded from a directory
of model JSON files at startup. Batch work (training, studies) stays with
the CLI; the service covers the multi-client surface: synthesize a test ECG,
extract features, predict survival, evaluate a labeled batch.
"""
from __future__ import annotations

import glob
import json
import math
import os

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import PipelineConfig
from ..errors import CardioriskError, SchemaError
from ..pipeline import evaluate_rows, extract_signal_features, predict_rows
from ..rpeak import BeatToBeatSeries, detect_r_peaks
from ..signal import EcgRecord, SynthEcgSpec, bandpass_filter, synth_ecg
from ..survival import model_from_dict
from .schemas import (
    EcgPayload,
    EvaluateRequest,
    EvaluateResponse,
    ExtractRequest,
    ExtractResponse,
    ModelUpload,
    PredictRequest,
    PredictResponse,
    SynthRequest,
    SynthResponse,
)


def _none_for_nan(value: float) -> float | None:
    return None if isinstance(value, float) and math.isnan(value) else value


def create_app(model_dir: str | None = None, config: PipelineConfig | None = None) -> FastAPI:
    app = FastAPI(title="cardiorisk", version=__version__)
    app.state.config = config or PipelineConfig()
    app.state.models = {}

    if model_dir:
        for path in sorted(glob.glob(os.path.join(model_dir, "*.json"))):
            with open(path, encoding="utf-8") as fh:
                model, normalizer = model_from_dict(json.load(fh))
            app.state.models[os.path.splitext(os.path.basename(path))[0]] = (model, normalizer)

    def _get_model(model_id: str):
        entry = app.state.models.get(model_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown model {model_id!r}")
        return entry

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__, "models": sorted(app.state.models)}

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest):
        record, truth = synth_ecg(
            SynthEcgSpec(
                rr_series_ms=(req.rr_ms,) * req.n_beats,
                fs=req.fs,
                noise_std=req.noise_std,
                seed=req.seed,
            )
        )
        return SynthResponse(
            ecg=EcgPayload(samples_mv=record.samples.tolist(), fs=record.fs, lead=record.lead),
            r_peak_indices=[int(i) for i in truth],
        )

    @app.post("/extract", response_model=ExtractResponse)
    def extract(req: ExtractRequest):
        record = EcgRecord(samples=np.asarray(req.ecg.samples_mv), fs=req.ecg.fs, lead=req.ecg.lead)
        day = None
        if req.rr_day is not None:
            day = BeatToBeatSeries(
                intervals=np.asarray(req.rr_day.intervals_ms),
                onset_times=np.asarray(req.rr_day.onset_times_s) if req.rr_day.onset_times_s else None,
                segment_ids=np.asarray(req.rr_day.segment_ids) if req.rr_day.segment_ids else None,
            )
        try:
            features = extract_signal_features(record, day, app.state.config, sampling_seed=req.sampling_seed)
            n_peaks = len(detect_r_peaks(bandpass_filter(record, app.state.config.filter)))
        except CardioriskError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return ExtractResponse(
            features={k: _none_for_nan(v) for k, v in features.items()},
            n_peaks=n_peaks,
        )

    @app.post("/models", status_code=201)
    def upload_model(req: ModelUpload):
        try:
            app.state.models[req.model_id] = model_from_dict(req.payload)
        except SchemaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"model_id": req.model_id}

    @app.post("/predict", response_model=PredictResponse)
    def predict(req: PredictRequest):
        model, normalizer = _get_model(req.model_id)
        row = {k: (math.nan if v is None else v) for k, v in req.features.items()}
        try:
            [pred] = predict_rows(model, normalizer, [row], horizon=req.horizon_years)
        except SchemaError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return PredictResponse(
            times=pred["times"],
            survival=pred["survival"],
            risk_within_horizon=pred["risk_5y"],
        )

    @app.post("/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest):
        model, normalizer = _get_model(req.model_id)
        rows = []
        for item in req.rows:
            row = {k: (math.nan if v is None else v) for k, v in item.features.items()}
            row["y"] = item.y
            row["delta"] = item.delta
            rows.append(row)
        try:
            report = evaluate_rows(model, normalizer, rows)
        except (SchemaError, CardioriskError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return EvaluateResponse(
            c_index=_none_for_nan(report.c_index),
            auc_5y=_none_for_nan(report.auc_5y),
            ibs=_none_for_nan(report.ibs),
            mean_cd_auc=_none_for_nan(report.mean_cd_auc),
        )

    return app
