"""End-to-end orchestration shared by the CLI and the HTTP service."""
from __future__ import annotations

import math

import numpy as np

from . import io as rio
from .config import PipelineConfig
from .errors import DataError, SchemaError
from .hrv import hrv_single_vector, sample_strips
from .metrics import EvaluationReport, evaluate_survival
from .morphology import build_template, delineate, extract_cycles, rhythm_features
from .rpeak import BeatToBeatSeries, compute_rri, detect_r_peaks, ectopic_filter
from .signal import EcgRecord, SynthEcgSpec, bandpass_filter, synth_ecg
from .study import SyntheticDaySpec, synth_day
from .survival import (
    QuantileNormalizer,
    risk_within,
    train_boosted_aft,
    train_mlp_deephit,
)
from .survival.grid import SurvivalCurve

AFT_KIND = "aft"
MLP_KIND = "mlp"


def extract_signal_features(
    record: EcgRecord,
    day: BeatToBeatSeries | None,
    config: PipelineConfig,
    sampling_seed: int | None = None,
) -> dict[str, float]:
    """Rhythm, shape and (when day data exists) long-term HRV features."""
    filtered = bandpass_filter(record, config.filter)
    peaks = detect_r_peaks(filtered)
    bb = compute_rri(peaks)
    if config.detector.ectopic_filter:
        bb = ectopic_filter(bb, config.detector.max_jump_ratio)
    features: dict[str, float] = dict(rhythm_features(bb).as_dict())
    try:
        cycles = extract_cycles(filtered, peaks)
        template = build_template(cycles, filtered.fs)
        features.update(delineate(template).as_dict())
    except DataError:
        features.update({name: math.nan for name in rio.SHAPE_COLUMNS})
    if day is not None:
        strategy = config.sampling
        if sampling_seed is not None:
            import dataclasses

            strategy = dataclasses.replace(strategy, seed=sampling_seed)
        strips = sample_strips(day, strategy)
        features.update(hrv_single_vector(strips).as_dict())
    else:
        features.update({name: math.nan for name in rio.HRV_COLUMNS})
    return features


def _subject_latents(rng: np.random.Generator, n: int) -> dict[str, np.ndarray]:
    u = rng.normal(0.0, 1.0, size=n)
    return {
        "u": u,
        "sex": (rng.random(n) < 0.5).astype(float),
        "age": np.clip(58.0 + 9.0 * u + 9.0 * rng.normal(size=n), 18.0, 95.0),
        "hr_shift": 8.0 * u + 3.0 * rng.normal(size=n),
        "t_amp": np.clip(0.20 - 0.06 * u + 0.02 * rng.normal(size=n), 0.02, 0.5),
        "hrv_level": np.exp(3.6 - 0.35 * u + 0.15 * rng.normal(size=n)),
    }


def synth_cohort(config: PipelineConfig, out_dir) -> list[dict]:
    """Generate a synthetic cohort: per-subject 30 s ECG, 24 h RR day and outcomes.

    One latent risk factor drives heart rate, T-wave amplitude, long-term
    variability, comorbidity prevalence and the planted log-logistic event
    time, so extracted features genuinely predict the outcome.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    opts = config.synth
    rng = np.random.default_rng(config.seed)
    lat = _subject_latents(rng, opts.n_subjects)
    tau = 1.2 - opts.risk_strength * lat["u"]
    t_event = np.exp(tau + 0.5 * rng.logistic(0.0, 1.0, size=opts.n_subjects))
    censor = np.exp(
        np.quantile(np.log(t_event), opts.censor_quantile)
        + 0.5 * rng.logistic(0.0, 1.0, size=opts.n_subjects)
    )
    y = np.maximum(np.minimum(t_event, censor), 1e-3)
    delta = (t_event <= censor).astype(int)

    rows = []
    for i in range(opts.n_subjects):
        sid = f"s{i:04d}"
        base_hr = float(np.clip(72.0 + lat["hr_shift"][i], 45.0, 110.0))
        n_beats = max(int(opts.ecg_duration_s * base_hr / 60.0) + 2, 8)
        rr_ms = np.clip(
            60000.0 / base_hr + rng.normal(0.0, 20.0, size=n_beats), 350.0, 1800.0
        )
        waves = {
            "p": (-160.0, 0.10, 25.0),
            "q": (-35.0, -0.10, 8.0),
            "r": (0.0, 1.00, 10.0),
            "s": (30.0, -0.15, 8.0),
            "t": (250.0, float(lat["t_amp"][i]), 60.0),
        }
        ecg, _truth = synth_ecg(
            SynthEcgSpec(
                rr_series_ms=tuple(rr_ms),
                fs=opts.fs,
                waves=waves,
                noise_std=0.02,
                baseline_amp=0.05,
                seed=int(rng.integers(0, 2**31)),
            )
        )
        day = synth_day(
            SyntheticDaySpec(
                base_hr=float(np.clip(70.0 + lat["hr_shift"][i], 45.0, 110.0)),
                circadian_amp=8.0,
                hrv_level_ms=float(np.clip(lat["hrv_level"][i], 5.0, 120.0)),
                ectopic_rate_per_hour=1.0,
                duration_hours=opts.day_hours,
                seed=int(rng.integers(0, 2**31)),
            )
        )
        rio.write_ecg_csv(ecg, f"{out_dir}/{sid}_ecg.csv")
        rio.write_rr_csv(day, f"{out_dir}/{sid}_rr.csv")
        row = {"subject_id": sid, "sex": lat["sex"][i], "age": float(lat["age"][i])}
        flag_p = 1.0 / (1.0 + np.exp(-(-2.2 + 0.9 * lat["u"][i])))
        for flag in rio.COMORBIDITY_COLUMNS:
            row[flag] = float(rng.random() < flag_p)
        row["y"] = float(y[i])
        row["delta"] = int(delta[i])
        rows.append(row)
    rio.write_cohort_csv(rows, f"{out_dir}/cohort.csv")
    return rows


def extract_cohort_features(
    cohort_rows: list[dict],
    signals_dir,
    config: PipelineConfig,
    workers: int = 4,
) -> list[dict]:
    """Join subject records with features extracted from their signal files.

    Records are processed in parallel with per-record isolation: each
    subject's sampling seed derives from its cohort position alone, so the
    output is identical to a sequential run.
    """
    import os
    from concurrent.futures import ThreadPoolExecutor

    def one(args):
        k, subject = args
        sid = subject["subject_id"]
        ecg = rio.read_ecg_csv(f"{signals_dir}/{sid}_ecg.csv")
        if isinstance(ecg, list):
            ecg = ecg[0]
        rr_path = f"{signals_dir}/{sid}_rr.csv"
        day = rio.read_rr_csv(rr_path) if os.path.exists(rr_path) else None
        feats = extract_signal_features(
            ecg, day, config, sampling_seed=int(np.random.SeedSequence((config.seed, k)).generate_state(1)[0])
        )
        row = dict(subject)
        row.update(feats)
        return row

    if workers <= 1:
        return [one(item) for item in enumerate(cohort_rows)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, enumerate(cohort_rows)))


def feature_matrix(rows: list[dict]) -> tuple[np.ndarray, list[str]]:
    columns = list(rio.FEATURE_COLUMNS)
    X = np.array([[float(row.get(c, math.nan)) for c in columns] for row in rows])
    return X, columns


def train_from_features(rows: list[dict], kind: str, config: PipelineConfig):
    """Fit the normalizer and a survival model of the requested kind."""
    X, columns = feature_matrix(rows)
    y = np.array([row["y"] for row in rows], dtype=float)
    delta = np.array([row["delta"] for row in rows], dtype=float).astype(int)
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise DataError("training rows need positive observation times")
    normalizer = QuantileNormalizer().fit({c: X[:, j] for j, c in enumerate(columns)})
    Xn = normalizer.apply_matrix(X)
    Xn = np.nan_to_num(Xn, nan=0.5) if kind == MLP_KIND else Xn
    if kind == AFT_KIND:
        model = train_boosted_aft(Xn, y, delta, config.aft, config.grid, feature_names=columns)
    elif kind == MLP_KIND:
        model = train_mlp_deephit(
            Xn, y, delta, config.mlp, config.loss, config.grid, config.train, feature_names=columns
        )
    else:
        raise SchemaError(f"unknown model kind {kind!r}; use {AFT_KIND!r} or {MLP_KIND!r}")
    return model, normalizer


def _model_inputs(model, normalizer: QuantileNormalizer, rows: list[dict]) -> np.ndarray:
    missing = [c for c in model.feature_names if c not in rio.FEATURE_COLUMNS]
    if missing or list(model.feature_names) != list(normalizer.columns):
        raise SchemaError("model/normalizer feature columns do not match the features schema")
    for row in rows:
        absent = [c for c in model.feature_names if c not in row]
        if absent:
            raise SchemaError(f"feature row is missing columns {absent[:3]}")
    X = np.array([[float(row[c]) for c in model.feature_names] for row in rows])
    Xn = normalizer.apply_matrix(X)
    if type(model).__name__ == "MlpSurvivalModel":
        Xn = np.nan_to_num(Xn, nan=0.5)
    return Xn


def predict_rows(model, normalizer, rows: list[dict], horizon: float = 5.0):
    """Survival curves and horizon risks for feature rows."""
    Xn = _model_inputs(model, normalizer, rows)
    curves = model.predict_survival(Xn)
    return [
        {
            "subject_id": row.get("subject_id", str(k)),
            "times": curve.times.tolist(),
            "survival": curve.survival.tolist(),
            "risk_5y": risk_within(curve, horizon),
        }
        for k, (row, curve) in enumerate(zip(rows, curves))
    ]


def evaluate_rows(model, normalizer, rows: list[dict]) -> EvaluationReport:
    Xn = _model_inputs(model, normalizer, rows)
    y = np.array([row["y"] for row in rows], dtype=float)
    delta = np.array([row["delta"] for row in rows], dtype=float).astype(int)
    curves: list[SurvivalCurve] = model.predict_survival(Xn)
    return evaluate_survival(curves, y, delta)
