import json
import math

import numpy as np
import pytest

from cardiorisk import io as rio
from cardiorisk.cli import main
from cardiorisk.errors import SchemaError
from cardiorisk.rpeak import BeatToBeatSeries
from cardiorisk.signal import EcgRecord


class TestEcgCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        record = EcgRecord(samples=rng.normal(size=500), fs=200.0, lead="I")
        path = tmp_path / "ecg.csv"
        rio.write_ecg_csv(record, path)
        back = rio.read_ecg_csv(path)
        assert back.fs == 200.0
        assert back.lead == "I"
        assert np.array_equal(back.samples, record.samples)

    def test_multichannel_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        channels = [EcgRecord(samples=rng.normal(size=100), fs=250.0, lead=l) for l in ("a", "b", "c")]
        path = tmp_path / "multi.csv"
        rio.write_multichannel_ecg_csv(channels, path)
        back = rio.read_ecg_csv(path)
        assert [r.lead for r in back] == ["a", "b", "c"]
        for orig, readback in zip(channels, back):
            assert np.array_equal(orig.samples, readback.samples)

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# fs=200\n# lead=I\n0.5\nnot_a_number\n")
        with pytest.raises(SchemaError, match="line 4"):
            rio.read_ecg_csv(path)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "no_header.csv"
        path.write_text("0.5\n0.6\n")
        with pytest.raises(SchemaError):
            rio.read_ecg_csv(path)


class TestRrCsv:
    def test_round_trip(self, tmp_path):
        bb = BeatToBeatSeries(
            intervals=np.array([800.0, 810.5, 790.25]),
            segment_ids=np.array([0, 0, 1]),
        )
        path = tmp_path / "rr.csv"
        rio.write_rr_csv(bb, path)
        back = rio.read_rr_csv(path)
        assert np.array_equal(back.intervals, bb.intervals)
        assert np.array_equal(back.onset_times, bb.onset_times)
        assert np.array_equal(back.segment_ids, bb.segment_ids)


class TestFeaturesCsv:
    def make_row(self, sid="s1"):
        row = {"subject_id": sid, "y": 3.5, "delta": 1}
        for col in rio.FEATURE_COLUMNS:
            row[col] = 0.5
        return row

    def test_round_trip_with_nan(self, tmp_path):
        row = self.make_row()
        row["hrv_sample_entropy"] = math.nan
        path = tmp_path / "features.csv"
        rio.write_features_csv([row], path)
        [back] = rio.read_features_csv(path)
        assert back["subject_id"] == "s1"
        assert math.isnan(back["hrv_sample_entropy"])
        assert back["y"] == 3.5

    def test_schema_version_mismatch(self, tmp_path):
        path = tmp_path / "features.csv"
        rio.write_features_csv([self.make_row()], path)
        text = path.read_text().replace("schema_version=1", "schema_version=99")
        path.write_text(text)
        with pytest.raises(SchemaError, match="version"):
            rio.read_features_csv(path)

    def test_wrong_columns_rejected(self, tmp_path):
        path = tmp_path / "features.csv"
        path.write_text("# schema_version=1\nsubject_id,foo\nx,1\n")
        with pytest.raises(SchemaError):
            rio.read_features_csv(path)


class TestCohortCsv:
    def test_missing_flag_defaults_with_warning(self, tmp_path):
        path = tmp_path / "cohort.csv"
        header = "subject_id,sex,age,y,delta"
        path.write_text(f"{header}\ns1,1,60,2.5,1\n")
        with pytest.warns(UserWarning, match="defaulting"):
            [row] = rio.read_cohort_csv(path)
        assert row["atrial_fibrillation"] == 0.0


class TestAtomicWrite:
    def test_no_partial_file_on_error(self, tmp_path):
        target = tmp_path / "out.txt"
        rio.atomic_write_text(target, "hello")
        assert target.read_text() == "hello"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


class TestAuxiliaryExports:
    def test_template_csv(self, tmp_path):
        from cardiorisk.morphology import CycleTemplate

        template = CycleTemplate(
            samples=np.linspace(-0.1, 0.4, 101), r_index=50, fs=200.0,
            baseline=0.15, coverage=np.full(101, 5),
        )
        path = tmp_path / "template.csv"
        rio.write_template_csv(template, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "position_ms,mv"
        first_ms = float(lines[1].split(",")[0])
        assert first_ms == -250.0  # 50 samples before R at 200 Hz

    def test_hrv_features_and_series_csv(self, tmp_path):
        from cardiorisk.hrv import hrv_single_vector, hrv_time_series

        def strip(hour):
            iv = np.array([800.0, 830.0, 790.0, 815.0] * 6)
            return BeatToBeatSeries(
                intervals=iv, onset_times=hour * 3600.0 + np.cumsum(iv) / 1000.0
            )

        strips = [strip(h) for h in range(6)]
        feats_path = tmp_path / "hrv.csv"
        rio.write_hrv_features_csv([("s1", hrv_single_vector(strips))], feats_path)
        lines = feats_path.read_text().splitlines()
        assert lines[0].startswith("subject_id,hr_at_rest,active_hr")
        assert len(lines) == 2

        series_path = tmp_path / "hrv_series.csv"
        rio.write_hrv_series_csv([("s1", hrv_time_series(strips))], series_path)
        lines = series_path.read_text().splitlines()
        assert lines[0].startswith("subject_id,hour_index,")
        assert len(lines) == 7


@pytest.fixture(scope="module")
def pipeline_dir(tmp_path_factory):
    """Small synth -> extract -> train -> predict/evaluate run."""
    root = tmp_path_factory.mktemp("pipeline")
    config = root / "config.json"
    config.write_text(json.dumps({"seed": 3, "synth": {"n_subjects": 25}, "aft": {"trees": 60}}))
    data = root / "data"
    assert main(["synth", "--config", str(config), "--out", str(data)]) == 0
    features = root / "features.csv"
    assert main([
        "extract", "--config", str(config), "--cohort", str(data / "cohort.csv"),
        "--signals", str(data), "--out", str(features),
    ]) == 0
    model = root / "model.json"
    assert main([
        "train", "--config", str(config), "--features", str(features),
        "--kind", "aft", "--out", str(model),
    ]) == 0
    return root, config, data, features, model


class TestCliPipeline:
    def test_feature_columns_match_schema(self, pipeline_dir):
        _root, _config, _data, features, _model = pipeline_dir
        rows = rio.read_features_csv(features)
        assert len(rows) == 25
        assert set(rows[0]) == set(rio.FEATURES_HEADER)

    def test_predict_and_evaluate(self, pipeline_dir):
        root, _config, _data, features, model = pipeline_dir
        pred = root / "pred.json"
        assert main(["predict", "--model", str(model), "--features", str(features), "--out", str(pred)]) == 0
        payload = json.loads(pred.read_text())
        assert len(payload["predictions"]) == 25
        first = payload["predictions"][0]
        assert 0.0 <= first["risk_5y"] <= 1.0
        assert all(b <= a + 1e-12 for a, b in zip(first["survival"], first["survival"][1:]))

        report_path = root / "report.json"
        assert main(["evaluate", "--model", str(model), "--features", str(features), "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())["report"]
        assert report["c_index"] > 0.7  # training-set fit on planted risk

    def test_feature_schema_mismatch_exits_2(self, pipeline_dir, tmp_path):
        root, _config, _data, features, model = pipeline_dir
        broken = tmp_path / "broken.csv"
        text = features.read_text().replace("mean_hr", "mean_hr_x")
        broken.write_text(text)
        code = main(["predict", "--model", str(model), "--features", str(broken), "--out", str(tmp_path / "p.json")])
        assert code == 2

    def test_hrv_study_outputs(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({
            "seed": 5,
            "study": {"n_days": 4, "seeds": [0], "strip_lengths_min": [5.0], "strip_counts": [3]},
        }))
        out = tmp_path / "study"
        assert main(["hrv-study", "--config", str(config), "--out", str(out)]) == 0
        text = (out / "study.csv").read_text()
        assert text.splitlines()[0] == "feature,length_min,count,r"
        assert len(text.splitlines()) > 8

    def test_unknown_config_key_exits_2(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"seed": 1, "nonsense": {}}))
        code = main(["synth", "--config", str(config), "--out", str(tmp_path / "d")])
        assert code == 2


class TestDeterminism:
    def test_pipeline_outputs_byte_identical(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({
            "seed": 11,
            "synth": {"n_subjects": 22, "day_hours": 4.0},
            "sampling": {"strips_per_day": 4},
            "aft": {"trees": 20},
            "mlp": {"seed": 1},
            "train": {"epochs": 3, "batch_size": 8},
        }))

        def run(tag):
            base = tmp_path / tag
            data = base / "data"
            main(["synth", "--config", str(config), "--out", str(data)])
            features = base / "features.csv"
            main(["extract", "--config", str(config), "--cohort", str(data / "cohort.csv"),
                  "--signals", str(data), "--out", str(features)])
            aft = base / "aft.json"
            main(["train", "--config", str(config), "--features", str(features), "--kind", "aft", "--out", str(aft)])
            mlp = base / "mlp.json"
            main(["train", "--config", str(config), "--features", str(features), "--kind", "mlp", "--out", str(mlp)])
            report = base / "report.json"
            main(["evaluate", "--model", str(aft), "--features", str(features), "--out", str(report)])
            return features, aft, mlp, report

        first = run("one")
        second = run("two")
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes(), a.name
