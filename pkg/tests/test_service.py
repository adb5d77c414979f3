import numpy as np
import pytest
from fastapi.testclient import TestClient

from cardiorisk.service.app import create_app
from cardiorisk.study import make_cohort
from cardiorisk.survival import AftConfig, TimeGrid, model_to_dict, train_boosted_aft
from cardiorisk.survival.normalize import QuantileNormalizer


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def uploaded_model(client):
    cohort = make_cohort(300, seed=1, hrv_signal=1.0)
    columns = cohort.columns
    norm = QuantileNormalizer().fit({c: cohort.features[c] for c in columns})
    model = train_boosted_aft(
        norm.apply_matrix(cohort.matrix(columns)),
        cohort.y,
        cohort.delta,
        AftConfig(sigma=0.5, trees=30, depth=2),
        TimeGrid(horizon=10.0, n_bins=25),
        feature_names=columns,
    )
    payload = model_to_dict(model, norm)
    response = client.post("/models", json={"model_id": "demo", "payload": payload})
    assert response.status_code == 201
    return columns, cohort


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_synth_round_trip(client):
    response = client.post("/synth", json={"n_beats": 30, "rr_ms": 800.0, "fs": 200.0, "seed": 4})
    assert response.status_code == 200
    body = response.json()
    assert len(body["r_peak_indices"]) == 30
    assert len(body["ecg"]["samples_mv"]) > 4000


def test_extract_without_day_data(client):
    synth = client.post("/synth", json={"n_beats": 40, "rr_ms": 750.0, "fs": 200.0, "seed": 9}).json()
    response = client.post("/extract", json={"ecg": synth["ecg"]})
    assert response.status_code == 200
    body = response.json()
    assert body["n_peaks"] == 40
    assert body["features"]["mean_hr"] == pytest.approx(80.0, abs=1.0)
    assert body["features"]["hrv_sdnn"] is None  # no day data supplied


def test_extract_with_day_data(client):
    synth = client.post("/synth", json={"n_beats": 40, "rr_ms": 800.0, "fs": 200.0, "seed": 2}).json()
    rng = np.random.default_rng(0)
    intervals = rng.uniform(700, 900, size=3000).tolist()
    response = client.post(
        "/extract",
        json={"ecg": synth["ecg"], "rr_day": {"intervals_ms": intervals}},
    )
    assert response.status_code == 200
    feats = response.json()["features"]
    assert feats["hrv_sdnn"] is not None
    assert feats["hr_at_rest"] <= feats["active_hr"]


def test_extract_rejects_flat_signal(client):
    response = client.post(
        "/extract", json={"ecg": {"samples_mv": [0.0] * 2000, "fs": 200.0}}
    )
    assert response.status_code == 422


def test_predict_with_uploaded_model(client, uploaded_model):
    columns, cohort = uploaded_model
    features = {c: float(cohort.features[c][0]) for c in columns}
    response = client.post("/predict", json={"model_id": "demo", "features": features})
    assert response.status_code == 200
    body = response.json()
    assert 0.0 <= body["risk_within_horizon"] <= 1.0
    survival = body["survival"]
    assert all(b <= a + 1e-12 for a, b in zip(survival, survival[1:]))


def test_predict_unknown_model_404(client):
    assert client.post("/predict", json={"model_id": "ghost", "features": {}}).status_code == 404


def test_predict_missing_columns_422(client, uploaded_model):
    response = client.post("/predict", json={"model_id": "demo", "features": {"age": 50.0}})
    assert response.status_code == 422


def test_evaluate_batch(client, uploaded_model):
    columns, cohort = uploaded_model
    rows = [
        {
            "features": {c: float(cohort.features[c][i]) for c in columns},
            "y": float(cohort.y[i]),
            "delta": int(cohort.delta[i]),
        }
        for i in range(120)
    ]
    response = client.post("/evaluate", json={"model_id": "demo", "rows": rows})
    assert response.status_code == 200
    body = response.json()
    assert 0.5 <= body["c_index"] <= 1.0


def test_model_upload_rejects_bad_schema(client):
    response = client.post("/models", json={"model_id": "bad", "payload": {"schema_version": 42}})
    assert response.status_code == 422


def test_models_preloaded_from_directory(tmp_path, uploaded_model):
    import json

    from cardiorisk.survival import save_model

    cohort = make_cohort(200, seed=9, hrv_signal=0.5)
    columns = cohort.columns
    norm = QuantileNormalizer().fit({c: cohort.features[c] for c in columns})
    model = train_boosted_aft(
        norm.apply_matrix(cohort.matrix(columns)), cohort.y, cohort.delta,
        AftConfig(trees=5, depth=2), TimeGrid(horizon=10.0, n_bins=25),
        feature_names=columns,
    )
    save_model(model, tmp_path / "frommdir.json", norm)
    app = create_app(model_dir=str(tmp_path))
    local = TestClient(app)
    assert local.get("/health").json()["models"] == ["frommdir"]
    features = {c: float(cohort.features[c][0]) for c in columns}
    assert local.post("/predict", json={"model_id": "frommdir", "features": features}).status_code == 200
