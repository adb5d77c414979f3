"""File formats: ECG CSV, day RR CSV, feature tables and reports.

All writers are atomic (temp file in the target directory, then rename) and
format floats with ``repr`` so identical inputs produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
import os
import tempfile

import numpy as np

from .errors import SchemaError
from .rpeak import BeatToBeatSeries
from .signal import EcgRecord

FEATURES_SCHEMA_VERSION = 1

COMORBIDITY_COLUMNS = (
    "atrial_fibrillation",
    "chronic_kidney_disease",
    "chronic_obstructive_pulmonary_disease",
    "diabetes_mellitus",
    "hyperlipidemia",
    "hypertension",
    "ischemic_heart_disease",
    "myocardial_infarction",
    "stroke",
    "valvular_heart_disease",
)

RHYTHM_COLUMNS = ("mean_hr", "sd1_sd2", "sdnn")

SHAPE_COLUMNS = (
    "p_timing",
    "q_timing",
    "r_timing",
    "s_timing",
    "t_timing",
    "p_amplitude",
    "q_amplitude",
    "r_amplitude",
    "s_amplitude",
    "t_amplitude",
)

# Long-term HRV columns carry an hrv_ prefix where a short-strip rhythm
# column of the same name exists.
HRV_COLUMNS = (
    "hr_at_rest",
    "active_hr",
    "hrv_sdnn",
    "hrv_rmssd",
    "hrv_pnn50",
    "hrv_sd1_sd2",
    "hrv_ellipse_area",
    "hrv_sample_entropy",
)

DEMOGRAPHIC_COLUMNS = ("sex", "age")

FEATURE_COLUMNS = DEMOGRAPHIC_COLUMNS + COMORBIDITY_COLUMNS + RHYTHM_COLUMNS + SHAPE_COLUMNS + HRV_COLUMNS

FEATURES_HEADER = ("subject_id",) + FEATURE_COLUMNS + ("y", "delta")


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return ""
        return repr(v)
    return str(value)


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ecg_csv(record: EcgRecord, path) -> None:
    lines = [f"# fs={_fmt(record.fs)}", f"# lead={record.lead}"]
    lines.extend(_fmt(v) for v in record.samples)
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_multichannel_ecg_csv(channels: list[EcgRecord], path) -> None:
    leads = ",".join(ch.lead for ch in channels)
    lines = [f"# fs={_fmt(channels[0].fs)}", f"# leads={leads}"]
    for row in zip(*(ch.samples for ch in channels)):
        lines.append(",".join(_fmt(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_ecg_csv(path):
    """Returns an EcgRecord, or a list of them for multi-channel files."""
    fs = None
    leads = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("fs="):
                    fs = float(body[3:])
                elif body.startswith("leads="):
                    leads = body[6:].split(",")
                elif body.startswith("lead="):
                    leads = [body[5:]]
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise SchemaError(f"{path}: malformed value on line {lineno}: {line!r}") from exc
    if fs is None or leads is None or not rows:
        raise SchemaError(f"{path}: missing fs/lead headers or samples")
    data = np.asarray(rows)
    if data.shape[1] != len(leads):
        raise SchemaError(f"{path}: {data.shape[1]} columns but {len(leads)} lead labels")
    records = [EcgRecord(samples=data[:, k], fs=fs, lead=lead) for k, lead in enumerate(leads)]
    return records[0] if len(records) == 1 else records


def write_rr_csv(bb: BeatToBeatSeries, path) -> None:
    lines = ["# schema=rr_day_v1", "interval_ms,onset_s,segment_id"]
    for iv, onset, seg in zip(bb.intervals, bb.onset_times, bb.segment_ids):
        lines.append(f"{_fmt(iv)},{_fmt(onset)},{seg}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_rr_csv(path) -> BeatToBeatSeries:
    intervals, onsets, segs = [], [], []
    with open(path, encoding="utf-8") as fh:
        header_seen = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != "interval_ms,onset_s,segment_id":
                    raise SchemaError(f"{path}: unexpected RR header on line {lineno}")
                header_seen = True
                continue
            parts = line.split(",")
            try:
                intervals.append(float(parts[0]))
                onsets.append(float(parts[1]))
                segs.append(int(parts[2]))
            except (IndexError, ValueError) as exc:
                raise SchemaError(f"{path}: malformed RR row on line {lineno}") from exc
    return BeatToBeatSeries(
        intervals=np.asarray(intervals),
        onset_times=np.asarray(onsets),
        segment_ids=np.asarray(segs, dtype=int),
    )


def write_features_csv(rows: list[dict], path) -> None:
    """Rows are dicts keyed by FEATURES_HEADER names; missing values are blank."""
    lines = [f"# schema_version={FEATURES_SCHEMA_VERSION}", ",".join(FEATURES_HEADER)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col, math.nan)) for col in FEATURES_HEADER))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_features_csv(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        version = None
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("schema_version="):
                    version = int(body.split("=", 1)[1])
                continue
            if header is None:
                header = tuple(line.split(","))
                if version != FEATURES_SCHEMA_VERSION:
                    raise SchemaError(f"{path}: features schema version {version!r} != {FEATURES_SCHEMA_VERSION}")
                if header != FEATURES_HEADER:
                    raise SchemaError(f"{path}: unexpected feature columns {header[:4]}...")
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise SchemaError(f"{path}: wrong field count on line {lineno}")
            row: dict = {"subject_id": parts[0]}
            for name, value in zip(header[1:], parts[1:]):
                row[name] = math.nan if value == "" else float(value)
            rows.append(row)
    if header is None:
        raise SchemaError(f"{path}: empty features file")
    return rows


def read_cohort_csv(path) -> list[dict]:
    """Subject table: id, demographics, comorbidity flags and outcome."""
    import warnings

    rows = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for lineno, rec in enumerate(reader, start=2):
            if rec.get("subject_id") in (None, ""):
                raise SchemaError(f"{path}: missing subject_id on line {lineno}")
            row = {"subject_id": rec["subject_id"]}
            try:
                row["sex"] = float(rec["sex"])
                row["age"] = float(rec["age"])
                row["y"] = float(rec["y"]) if rec.get("y") not in (None, "") else math.nan
                row["delta"] = float(rec["delta"]) if rec.get("delta") not in (None, "") else math.nan
            except (KeyError, ValueError) as exc:
                raise SchemaError(f"{path}: malformed cohort row on line {lineno}") from exc
            for flag in COMORBIDITY_COLUMNS:
                value = rec.get(flag)
                if value in (None, ""):
                    warnings.warn(
                        f"{path}: line {lineno}: missing {flag}, defaulting to 0", stacklevel=2
                    )
                    row[flag] = 0.0
                else:
                    row[flag] = float(value)
            rows.append(row)
    if not rows:
        raise SchemaError(f"{path}: empty cohort file")
    return rows


def write_cohort_csv(rows: list[dict], path) -> None:
    header = ("subject_id", "sex", "age") + COMORBIDITY_COLUMNS + ("y", "delta")
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in header))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_study_csv(rows: list[dict], path) -> None:
    lines = ["feature,length_min,count,r"]
    for row in rows:
        lines.append(f"{row['feature']},{_fmt(row['length_min'])},{row['count']},{_fmt(row['r'])}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_comparison_csv(rows: list[dict], path) -> None:
    lines = ["model,c_index,auc5,ibs,cd_auc"]
    for row in rows:
        lines.append(
            f"{row['model']},{_fmt(row['c_index'])},{_fmt(row['auc5'])},{_fmt(row['ibs'])},{_fmt(row['cd_auc'])}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(payload, path) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_template_csv(template, path) -> None:
    """Cycle template as (position ms relative to R, mV) pairs."""
    ms = (np.arange(template.samples.size) - template.r_index) * 1000.0 / template.fs
    lines = ["position_ms,mv"]
    for pos, value in zip(ms, template.samples):
        lines.append(f"{_fmt(pos)},{_fmt(value)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_hrv_features_csv(rows: list[tuple[str, "object"]], path) -> None:
    """One row per subject with the eight long-term HRV statistics."""
    lines = ["subject_id," + ",".join(HRV_COLUMNS)]
    for subject_id, feats in rows:
        d = feats.as_dict()
        lines.append(subject_id + "," + ",".join(_fmt(d[c]) for c in HRV_COLUMNS))
    atomic_write_text(path, "\n".join(lines) + "\n")


HRV_STEP_COLUMNS = ("mean_hr", "sdnn", "rmssd", "pnn50", "sample_entropy", "sd1_sd2", "ellipse_area")


def write_hrv_series_csv(rows: list[tuple[str, "object"]], path) -> None:
    """Per-strip HRV statistics: one line per (subject, hour) step."""
    lines = ["subject_id,hour_index," + ",".join(HRV_STEP_COLUMNS)]
    for subject_id, series in rows:
        for step in series.steps:
            values = ",".join(_fmt(getattr(step, c)) for c in HRV_STEP_COLUMNS)
            lines.append(f"{subject_id},{step.hour_index},{values}")
    atomic_write_text(path, "\n".join(lines) + "\n")
