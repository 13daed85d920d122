import json

import pytest
from fastapi.testclient import TestClient

from orthoplan.config import AppConfig
from orthoplan.schemas import canonical_json
from orthoplan.service import create_app
from orthoplan.store import PatientStore, StoreConflict


@pytest.fixture()
def client(tmp_path):
    app = create_app(AppConfig(), data_dir=str(tmp_path / "data"))
    with TestClient(app) as c:
        yield c


def make_payload(tz=0.0, label="case"):
    return {
        "label": label,
        "arch": {
            "schema_version": 1,
            "arch": "upper",
            "teeth": [
                {
                    "fdi": 11,
                    "centroid": [0.0, 40.0, 2.0],
                    "orientation_wxyz": [1.0, 0.0, 0.0, 0.0],
                    "confidence": 0.9,
                    "present": True,
                },
                {
                    "fdi": 21,
                    "centroid": [-8.0, 40.0, 2.0],
                    "orientation_wxyz": [1.0, 0.0, 0.0, 0.0],
                    "confidence": 0.9,
                    "present": True,
                },
            ],
        },
        "plan": {
            "schema_version": 1,
            "entries": [
                {"fdi": 11, "tx_mm": 1.0, "tz_mm": tz},
                {"fdi": 21, "tx_mm": 1.0},
            ],
        },
    }


class TestStore:
    def test_create_get_round_trip(self, tmp_path):
        store = PatientStore(tmp_path / "s")
        doc = store.create({"id": "p1", "label": "x"})
        assert doc["version"] == 1
        assert store.get("p1")["label"] == "x"

    def test_duplicate_create_conflicts(self, tmp_path):
        store = PatientStore(tmp_path / "s")
        store.create({"id": "p1"})
        with pytest.raises(StoreConflict):
            store.create({"id": "p1"})

    def test_version_check(self, tmp_path):
        store = PatientStore(tmp_path / "s")
        store.create({"id": "p1", "label": "a"})
        store.update("p1", {"label": "b"}, expected_version=1)
        with pytest.raises(StoreConflict):
            store.update("p1", {"label": "c"}, expected_version=1)
        assert store.get("p1")["version"] == 2

    def test_persistence_across_instances(self, tmp_path):
        store = PatientStore(tmp_path / "s")
        store.create({"id": "p1", "label": "a"})
        store.update("p1", {"label": "b"})
        reloaded = PatientStore(tmp_path / "s")
        assert reloaded.get("p1")["label"] == "b"
        assert reloaded.get("p1")["version"] == 2


class TestPatientEndpoints:
    def test_create_then_get_round_trip_bytes(self, client):
        created = client.post("/api/patients", json=make_payload()).json()
        fetched = client.get(f"/api/patients/{created['id']}").json()
        assert canonical_json(created["plan"]) == canonical_json(fetched["plan"])
        assert canonical_json(created["score"]) == canonical_json(fetched["score"])
        assert created["content_hash"] == fetched["content_hash"]

    def test_create_status_and_fields(self, client):
        resp = client.post("/api/patients", json=make_payload())
        assert resp.status_code == 201
        doc = resp.json()
        assert doc["version"] == 1
        assert doc["score"]["grade"]
        assert doc["frames_ref"]["url"].endswith("/frames")
        frames = client.get(doc["frames_ref"]["url"])
        assert frames.status_code == 200
        assert len(frames.json()["frames"]) == doc["frames_ref"]["frame_count"] + 1

    def test_unknown_patient_404(self, client):
        assert client.get("/api/patients/nope").status_code == 404

    def test_schema_violation_422(self, client):
        payload = make_payload()
        payload["plan"]["entries"][0]["fdi"] = 99
        assert client.post("/api/patients", json=payload).status_code == 422
        payload = make_payload()
        del payload["arch"]
        assert client.post("/api/patients", json=payload).status_code == 422

    def test_bad_patient_id_rejected(self, client):
        payload = make_payload()
        payload["id"] = "../evil"
        assert client.post("/api/patients", json=payload).status_code == 422

    def test_duplicate_id_conflicts(self, client):
        payload = make_payload()
        payload["id"] = "twice"
        assert client.post("/api/patients", json=payload).status_code == 201
        assert client.post("/api/patients", json=payload).status_code == 409

    def test_list_patients(self, client):
        client.post("/api/patients", json=make_payload(label="a"))
        client.post("/api/patients", json=make_payload(label="b"))
        listing = client.get("/api/patients").json()["patients"]
        labels = {p["label"] for p in listing}
        assert {"a", "b"} <= labels
        assert all({"id", "grade", "composite", "version"} <= set(p) for p in listing)


class TestRescore:
    def test_rescore_zero_plan_scores_100(self, client):
        created = client.post("/api/patients", json=make_payload()).json()
        zero_plan = {
            "schema_version": 1,
            "entries": [{"fdi": 11}, {"fdi": 21}],
        }
        resp = client.post(f"/api/patients/{created['id']}/rescore", json={"plan": zero_plan})
        assert resp.status_code == 200
        body = resp.json()
        assert body["score"]["composite"] == 100.0
        assert body["version"] == created["version"] + 1

    def test_rescore_idempotent(self, client):
        created = client.post("/api/patients", json=make_payload()).json()
        new_plan = {"schema_version": 1, "entries": [{"fdi": 11, "tx_mm": 0.5}, {"fdi": 21}]}
        first = client.post(f"/api/patients/{created['id']}/rescore", json={"plan": new_plan}).json()
        second = client.post(f"/api/patients/{created['id']}/rescore", json={"plan": new_plan}).json()
        assert canonical_json(first["score"]) == canonical_json(second["score"])
        assert second["content_hash"] == first["content_hash"]
        assert second["version"] == first["version"]  # no bump for identical plan

    def test_rescore_version_conflict_409(self, client):
        created = client.post("/api/patients", json=make_payload()).json()
        resp = client.post(
            f"/api/patients/{created['id']}/rescore",
            json={"plan": created["plan"], "version": 999},
        )
        assert resp.status_code == 409

    def test_rescore_unknown_404(self, client):
        resp = client.post("/api/patients/nope/rescore", json={"plan": {"entries": [{"fdi": 11}]}})
        assert resp.status_code == 404

    def test_rescore_critical_extrusion_surfaces_finding(self, client):
        created = client.post("/api/patients", json=make_payload()).json()
        plan = {
            "schema_version": 1,
            "entries": [{"fdi": 11, "tz_mm": -2.0}, {"fdi": 21}],
        }
        body = client.post(f"/api/patients/{created['id']}/rescore", json={"plan": plan}).json()
        severities = [f["severity"] for f in body["score"]["findings"]]
        assert "critical" in severities


class TestDemoAndStatus:
    def test_all_presets_served(self, client):
        for key in ("class1_crowding", "open_bite", "diastema", "class2_div1"):
            resp = client.get(f"/api/demo?case={key}")
            assert resp.status_code == 200
            doc = resp.json()
            assert doc["score"]["grade"]
            assert doc["frames_ref"]["frame_count"] > 0

    def test_unknown_preset_404(self, client):
        assert client.get("/api/demo?case=unknown").status_code == 404

    def test_demo_does_no_inference(self, client):
        before = client.get("/api/training/status").json()["counters"]
        client.get("/api/demo?case=class1_crowding")
        client.get("/api/demo?case=open_bite")
        after = client.get("/api/training/status").json()["counters"]
        assert after["agent_invocations"] == before["agent_invocations"] == 0
        assert after["demo_requests"] == before["demo_requests"] + 2

    def test_open_bite_preset_has_critical_findings(self, client):
        doc = client.get("/api/demo?case=open_bite").json()
        severities = [f["severity"] for f in doc["score"]["findings"]]
        assert "critical" in severities

    def test_status_shape(self, client):
        status = client.get("/api/training/status").json()
        assert status["service"] == "orthoplan"
        assert status["pipeline"]["mode"] == "parallel"
        assert status["pipeline"]["w1"] == 0.4
        assert set(status["presets_loaded"]) == {"class1_crowding", "open_bite", "diastema", "class2_div1"}
        assert status["limits"]["incisor"]["tx_mm"] == 4.0
        assert status["limits"]["molar"]["rz_deg"] == 20.0
        assert status["limits"]["canine"]["tz_extrusion_mm"] == 1.5

    def test_demo_round_trip_via_patients(self, client):
        demo = client.get("/api/demo?case=class1_crowding").json()
        fetched = client.get(f"/api/patients/{demo['id']}").json()
        assert canonical_json(demo["plan"]) == canonical_json(fetched["plan"])
