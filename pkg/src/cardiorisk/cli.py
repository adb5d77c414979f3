"""Command-line entry points: synth, extract, train, predict, evaluate, hrv-study.

The CLI is a thin client over the same handler layer the HTTP service uses;
all randomness flows from the config seed and outputs are written atomically.
Log verbosity is controlled by the CARDIORISK_LOG environment variable only.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from . import io as rio
from .config import PipelineConfig, load_config
from .errors import CardioriskError, SchemaError
from .pipeline import (
    evaluate_rows,
    extract_cohort_features,
    predict_rows,
    synth_cohort,
    train_from_features,
)
from .study import StudyConfig, correlation_study, make_cohort, model_comparison
from .survival import load_model, save_model

log = logging.getLogger("cardiorisk")


def _setup_logging():
    level = os.environ.get("CARDIORISK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


def _load_pipeline_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def cmd_synth(args) -> int:
    config = _load_pipeline_config(args)
    rows = synth_cohort(config, args.out)
    log.info("wrote %d subjects to %s", len(rows), args.out)
    return 0


def cmd_extract(args) -> int:
    config = _load_pipeline_config(args)
    cohort = rio.read_cohort_csv(args.cohort)
    rows = extract_cohort_features(cohort, args.signals, config)
    rio.write_features_csv(rows, args.out)
    log.info("wrote features for %d subjects to %s", len(rows), args.out)
    return 0


def cmd_train(args) -> int:
    config = _load_pipeline_config(args)
    rows = rio.read_features_csv(args.features)
    model, normalizer = train_from_features(rows, args.kind, config)
    save_model(model, args.out, normalizer)
    log.info("trained %s model on %d rows -> %s", args.kind, len(rows), args.out)
    return 0


def cmd_predict(args) -> int:
    model, normalizer = load_model(args.model)
    rows = rio.read_features_csv(args.features)
    predictions = predict_rows(model, normalizer, rows)
    rio.write_json({"schema_version": 1, "predictions": predictions}, args.out)
    log.info("wrote %d predictions to %s", len(predictions), args.out)
    return 0


def cmd_evaluate(args) -> int:
    model, normalizer = load_model(args.model)
    rows = rio.read_features_csv(args.features)
    report = evaluate_rows(model, normalizer, rows)
    rio.write_json({"schema_version": 1, "report": report.as_dict()}, args.out)
    if args.csv:
        rio.write_comparison_csv(
            [
                {
                    "model": args.model,
                    "c_index": report.c_index,
                    "auc5": report.auc_5y,
                    "ibs": report.ibs,
                    "cd_auc": report.mean_cd_auc,
                }
            ],
            args.csv,
        )
    log.info("evaluation report written to %s", args.out)
    return 0


def cmd_hrv_study(args) -> int:
    config = _load_pipeline_config(args)
    opts = config.study
    os.makedirs(args.out, exist_ok=True)
    study_cfg = StudyConfig(
        strip_lengths_min=opts.strip_lengths_min,
        strip_counts=opts.strip_counts,
        n_days=opts.n_days,
        seeds=opts.seeds,
        day_seed=config.seed + 1000,
    )
    rows = correlation_study(study_cfg)
    rio.write_study_csv(rows, os.path.join(args.out, "study.csv"))
    if opts.comparison:
        train = make_cohort(opts.cohort_n, seed=config.seed + 1, hrv_signal=opts.hrv_signal)
        test = make_cohort(opts.cohort_n // 2, seed=config.seed + 2, hrv_signal=opts.hrv_signal)
        comparison = model_comparison(train, test, seed=config.seed)
        rio.write_comparison_csv(comparison, os.path.join(args.out, "comparison.csv"))
    log.info("study outputs written to %s", args.out)
    return 0


def cmd_serve(args) -> int:  # pragma: no cover - thin launcher
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(model_dir=args.models), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cardiorisk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--seed", type=int, help="override the config seed")
        if out_required:
            p.add_argument("--out", required=True, help="output path")

    p = sub.add_parser("synth", help="generate a synthetic cohort with signal files")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract the feature table from signal files")
    common(p)
    p.add_argument("--cohort", required=True, help="cohort CSV")
    p.add_argument("--signals", required=True, help="directory with <id>_ecg.csv / <id>_rr.csv")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train a survival model from a features CSV")
    common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--kind", choices=("aft", "mlp"), default="aft")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="survival curves and 5-year risks")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="evaluation report on a test features CSV")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--csv", help="also write a comparison-style CSV row")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("hrv-study", help="sampling study (and optional model comparison)")
    common(p)
    p.set_defaults(func=cmd_hrv_study)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--models", help="directory of model JSON files to load")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except CardioriskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
