import json

import pytest

from orthoplan.dental import Arch, ArchState, MovementPlan, ToothMovement, ToothState
from orthoplan.geometry import UnitQuaternion, Vec3
from orthoplan.schemas import (
    SCHEMA_VERSION,
    SchemaError,
    arch_state_from_dict,
    arch_state_to_dict,
    canonical_json,
    frames_to_dict,
    movement_plan_from_dict,
    movement_plan_to_dict,
    treatment_score_from_dict,
    treatment_score_to_dict,
)
from orthoplan.scoring import score_plan
from orthoplan.staging import StagingConfig, generate_frames


def sample_arch():
    q = UnitQuaternion.from_axis_angle(Vec3(0, 0, 1), 15.0)
    return ArchState(
        Arch.UPPER,
        {
            11: ToothState(
                11,
                Vec3(1.0, 40.0, 2.0),
                q,
                0.93,
                landmarks={"mesial": Vec3(3.0, 40.0, 1.5), "occlusal": Vec3(1.0, 40.0, 6.0)},
                extents=(2.0, 1.5, 1.0),
            ),
            18: ToothState(18, Vec3(38.0, 2.0, 2.0), UnitQuaternion.identity(), 0.2, present=False),
        },
    )


def sample_plan():
    return MovementPlan({11: ToothMovement(1.0, -0.5, 0.25, 3.0, -2.0, 10.0)})


class TestPlanSchema:
    def test_round_trip(self):
        plan = sample_plan()
        doc = movement_plan_to_dict(plan)
        assert doc["schema_version"] == SCHEMA_VERSION
        assert doc["entries"][0] == {
            "fdi": 11,
            "tx_mm": 1.0,
            "ty_mm": -0.5,
            "tz_mm": 0.25,
            "rx_deg": 3.0,
            "ry_deg": -2.0,
            "rz_deg": 10.0,
        }
        assert movement_plan_from_dict(doc) == plan

    def test_missing_fields_default_to_zero(self):
        plan = movement_plan_from_dict({"entries": [{"fdi": 11, "tx_mm": 2.0}]})
        assert plan.entries[11] == ToothMovement(tx=2.0)

    def test_rejects_duplicates(self):
        doc = {"entries": [{"fdi": 11}, {"fdi": 11}]}
        with pytest.raises(SchemaError):
            movement_plan_from_dict(doc)

    def test_rejects_bad_fdi(self):
        with pytest.raises(SchemaError):
            movement_plan_from_dict({"entries": [{"fdi": 99}]})

    def test_rejects_non_numeric(self):
        with pytest.raises(SchemaError):
            movement_plan_from_dict({"entries": [{"fdi": 11, "tx_mm": "big"}]})

    def test_rejects_empty(self):
        with pytest.raises(SchemaError):
            movement_plan_from_dict({"entries": []})


class TestArchSchema:
    def test_round_trip(self):
        arch = sample_arch()
        doc = arch_state_to_dict(arch)
        assert doc["arch"] == "upper"
        field_names = set(doc["teeth"][0])
        assert {"fdi", "centroid", "orientation_wxyz", "confidence", "present", "extents"} <= field_names
        restored = arch_state_from_dict(doc)
        assert arch_state_to_dict(restored) == doc

    def test_absent_tooth_round_trips_probability(self):
        doc = arch_state_to_dict(sample_arch())
        restored = arch_state_from_dict(doc)
        assert restored.teeth[18].present is False
        assert restored.teeth[18].confidence == 0.2

    def test_rejects_wrong_arch_membership(self):
        doc = arch_state_to_dict(sample_arch())
        doc["arch"] = "lower"
        with pytest.raises(SchemaError):
            arch_state_from_dict(doc)

    def test_rejects_bad_quaternion(self):
        doc = arch_state_to_dict(sample_arch())
        doc["teeth"][0]["orientation_wxyz"] = [0, 0, 0, 0]
        with pytest.raises(SchemaError):
            arch_state_from_dict(doc)

    def test_rejects_confidence_out_of_range(self):
        doc = arch_state_to_dict(sample_arch())
        doc["teeth"][0]["confidence"] = 1.5
        with pytest.raises(SchemaError):
            arch_state_from_dict(doc)


class TestScoreSchema:
    def test_round_trip(self):
        plan = MovementPlan({11: ToothMovement(tz=-1.2), 12: ToothMovement(tx=1.0)})
        arch = ArchState(
            Arch.UPPER,
            {
                11: ToothState(11, Vec3(0, 40, 2), UnitQuaternion.identity(), 0.9),
                12: ToothState(12, Vec3(8, 38, 2), UnitQuaternion.identity(), 0.9),
            },
        )
        score = score_plan(plan, arch)
        doc = treatment_score_to_dict(score)
        assert set(doc) == {
            "schema_version",
            "sub_scores",
            "composite_raw",
            "composite",
            "grade",
            "findings",
            "v1_score",
        }
        assert set(doc["sub_scores"]) == {"bio", "staging", "attachments", "ipr", "occlusion", "predictability"}
        restored = treatment_score_from_dict(doc)
        assert treatment_score_to_dict(restored) == doc

    def test_findings_fields(self):
        plan = MovementPlan({11: ToothMovement(tz=-1.2)})
        arch = ArchState(
            Arch.UPPER, {11: ToothState(11, Vec3(0, 40, 2), UnitQuaternion.identity(), 0.9)}
        )
        doc = treatment_score_to_dict(score_plan(plan, arch))
        for finding in doc["findings"]:
            assert set(finding) == {"severity", "code", "fdi", "message", "principle"}


class TestFramesSchema:
    def test_shape(self):
        plan = MovementPlan({11: ToothMovement(tx=2.0)})
        arch = ArchState(
            Arch.UPPER, {11: ToothState(11, Vec3(0, 40, 2), UnitQuaternion.identity(), 0.9)}
        )
        cfg = StagingConfig()
        frames, summary = generate_frames(arch, plan, cfg)
        doc = frames_to_dict(frames, summary.aligner_count, cfg)
        assert doc["aligners"] == summary.aligner_count
        assert doc["frames_per_aligner"] == 3
        assert len(doc["frames"]) == summary.frame_count + 1
        first = doc["frames"][0]
        assert first["index"] == 0 and first["t"] == 0.0
        assert set(first["poses"]) == {"11"}
        assert set(first["poses"]["11"]) == {"centroid", "orientation_wxyz"}

    def test_canonical_json_stable(self):
        doc = {"b": 1.5, "a": [1, 2], "c": {"y": 0.1, "x": None}}
        assert canonical_json(doc) == canonical_json(json.loads(canonical_json(doc)))
