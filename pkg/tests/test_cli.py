import json

import pytest

from orthoplan.cli import main
from orthoplan.config import AppConfig, load_config


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture()
def plan_and_arch(tmp_path):
    plan = {
        "schema_version": 1,
        "entries": [{"fdi": 11, "tx_mm": 1.0}, {"fdi": 21, "tx_mm": 1.0}],
    }
    arch = {
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
    }
    return write_json(tmp_path / "plan.json", plan), write_json(tmp_path / "arch.json", arch)


class TestScoreCommand:
    def test_writes_score(self, tmp_path, plan_and_arch):
        plan, arch = plan_and_arch
        out = tmp_path / "score.json"
        assert main(["score", plan, arch, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert 0.0 <= doc["composite"] <= 100.0
        assert doc["grade"] in "ABCDF"

    def test_schema_error_exit_code(self, tmp_path, plan_and_arch):
        _, arch = plan_and_arch
        bad = write_json(tmp_path / "bad.json", {"entries": [{"fdi": 99}]})
        assert main(["score", bad, arch]) == 2

    def test_missing_file_exit_code(self, plan_and_arch):
        _, arch = plan_and_arch
        assert main(["score", "missing.json", arch]) == 2


class TestSimulateCommand:
    def test_writes_frames(self, tmp_path, plan_and_arch):
        plan, arch = plan_and_arch
        out = tmp_path / "frames.json"
        assert main(["simulate", plan, arch, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["aligners"] >= 20
        assert len(doc["frames"]) == doc["aligners"] * doc["frames_per_aligner"] + 1


class TestDemoCommand:
    def test_demo_preset(self, tmp_path):
        out = tmp_path / "demo.json"
        assert main(["demo", "class1_crowding", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["preset"] == "class1_crowding"
        assert len(doc["score"]["sub_scores"]) == 6
        assert doc["frames"]["frames"]


class TestBenchmarkCommand:
    def test_small_run(self, tmp_path):
        out = tmp_path / "report.json"
        csv_out = tmp_path / "rows.csv"
        assert (
            main(
                [
                    "benchmark",
                    "--n",
                    "4",
                    "--seed",
                    "7",
                    "--modes",
                    "agent1,agent2",
                    "--out",
                    str(out),
                    "--csv",
                    str(csv_out),
                ]
            )
            == 0
        )
        doc = json.loads(out.read_text())
        assert doc["n"] == 4
        assert set(doc["modes"]) == {"agent1", "agent2"}
        lines = csv_out.read_text().strip().splitlines()
        assert len(lines) == 1 + 4 * 2  # header + rows

    def test_unknown_mode(self, tmp_path):
        assert main(["benchmark", "--n", "1", "--modes", "warp"]) == 2


class TestConfig:
    def test_defaults(self):
        cfg = AppConfig()
        assert cfg.fusion.w1 == 0.4
        assert cfg.staging.delta_trans_mm == 0.25
        assert cfg.scoring.eta["extrusion"] == 0.42

    def test_load_from_toml(self, tmp_path, monkeypatch):
        path = tmp_path / "orthoplan.toml"
        path.write_text(
            """
[orchestrator]
mode = "sequential"
w1 = 0.3
w2 = 0.7
threshold = 0.6
boosted_w1 = 0.9

[staging]
delta_trans_mm = 0.2
defer_vertical_only = true

[scoring]
attachment_rotation_deg = 12.0

[scoring.eta]
torque = 0.6

[service]
port = 9999
data_dir = "/tmp/op-data"

[benchmark]
workers = 4
"""
        )
        cfg = load_config(str(path))
        assert cfg.fusion.mode.value == "sequential"
        assert cfg.fusion.w1 == 0.3
        assert cfg.fusion.sequential_threshold == 0.6
        assert cfg.staging.delta_trans_mm == 0.2
        assert cfg.staging.defer_vertical_only is True
        assert cfg.scoring.attachment_rotation_deg == 12.0
        assert cfg.scoring.eta["torque"] == 0.6
        assert cfg.scoring.eta["extrusion"] == 0.42  # untouched default
        assert cfg.scoring.staging is cfg.staging
        assert cfg.service.port == 9999
        assert cfg.benchmark.workers == 4

    def test_env_var_config_path(self, tmp_path, monkeypatch):
        path = tmp_path / "custom.toml"
        path.write_text("[orchestrator]\nmode = \"agent2\"\n")
        monkeypatch.setenv("ORTHOPLAN_CONFIG", str(path))
        cfg = load_config()
        assert cfg.fusion.mode.value == "agent2"

    def test_env_var_data_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ORTHOPLAN_DATA_DIR", str(tmp_path / "override"))
        cfg = load_config()
        assert cfg.service.data_dir == str(tmp_path / "override")
