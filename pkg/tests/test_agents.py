import numpy as np
import pytest

from orthoplan.agents import (
    HEATMAP_CHANNELS,
    AgentError,
    AgentUnavailableError,
    FileHeatmapSource,
    HeatmapSet,
    LandmarkAgent,
    PresenceVector,
    SyntheticOracleSource,
    char_condition,
    extract_landmarks,
    landmark_agent_infer,
    load_heatmaps,
    null_point,
    save_heatmaps,
    segmentation_agent_infer,
)
from orthoplan.dental import (
    ARCH_SEQUENCE,
    LANDMARK_GROUPS,
    Arch,
    ArchState,
    PointCloud,
    ToothState,
)
from orthoplan.geometry import UnitQuaternion, Vec3

from oracles import argmax_bruteforce, char_condition_bruteforce


def cube_cloud():
    pts = np.array(
        [[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)]
    )
    return PointCloud(pts)


def heatmap_with_row(slot, group, row, columns, fill=0.0):
    values = np.full((HEATMAP_CHANNELS, columns), fill)
    values[HeatmapSet.channel(slot, group)] = row
    return HeatmapSet(values)


def presence_for_slot(slot, p, default=1.0):
    vec = np.full(16, default)
    vec[slot - 1] = p
    return PresenceVector(vec)


def synthetic_truth(missing_slots=(), arch=Arch.UPPER):
    """Full-arch ground truth with 5 landmarks per present tooth."""
    sequence = ARCH_SEQUENCE[arch]
    teeth = {}
    for slot, fdi in enumerate(sequence, start=1):
        angle = np.pi * (slot - 0.5) / 16
        cx, cy, cz = 25 * np.cos(angle), 30 * np.sin(angle), 2.0
        if slot in missing_slots:
            teeth[fdi] = ToothState(
                fdi=fdi,
                centroid=Vec3(cx, cy, cz),
                orientation=UnitQuaternion.identity(),
                confidence=0.0,
                present=False,
            )
            continue
        landmarks = {
            "mesial": Vec3(cx + 2.0, cy, cz - 0.5),
            "distal": Vec3(cx - 2.0, cy, cz - 0.5),
            "buccal": Vec3(cx, cy + 1.5, cz - 0.5),
            "lingual": Vec3(cx, cy - 1.5, cz - 0.5),
            "occlusal": Vec3(cx, cy, cz + 2.0),
        }
        teeth[fdi] = ToothState(
            fdi=fdi,
            centroid=Vec3(cx, cy, cz),
            orientation=UnitQuaternion.identity(),
            confidence=1.0,
            present=True,
            landmarks=landmarks,
        )
    return ArchState(arch, teeth)


def cloud_from_truth(truth):
    """Cloud containing exactly the ground-truth landmark points, labeled."""
    pts, labels = [], []
    for fdi, state in sorted(truth.teeth.items()):
        if not state.present:
            continue
        for name in LANDMARK_GROUPS:
            pts.append(state.landmarks[name].as_tuple())
            labels.append(fdi)
    return PointCloud(np.array(pts), labels=np.array(labels))


class TestNullPoint:
    def test_unit_cube(self):
        np_ = null_point(cube_cloud())
        assert np_.as_tuple() == (0.5, 1.0, 0.5)

    def test_single_point(self):
        np_ = null_point(PointCloud(np.array([[2.0, 3.0, 4.0]])))
        assert np_.as_tuple() == (2.0, 3.0, 4.0)

    def test_y_span_only(self):
        cloud = PointCloud(np.array([[0.0, 0.0, 0.0], [0.0, 40.0, 0.0]]))
        np_ = null_point(cloud)
        assert np_.as_tuple() == (0.0, 40.0, 0.0)  # centroid y=20 plus 20


class TestCharCondition:
    def test_fully_open_gate(self):
        raw = heatmap_with_row(1, 0, [0.9, 0.1, 0.2, 0.05], 4, fill=0.3)
        out = char_condition(raw, PresenceVector(np.ones(16)))
        np.testing.assert_array_equal(out.values[0, :3], raw.values[0, :3])
        assert np.all(out.values[:, -1] == 0.0)

    def test_fully_closed_gate(self):
        raw = heatmap_with_row(1, 0, [0.9, 0.1, 0.2, 0.05], 4, fill=0.3)
        out = char_condition(raw, PresenceVector(np.zeros(16)))
        assert np.all(out.values[:, :-1] == 0.0)
        np.testing.assert_array_equal(out.values[:, -1], raw.values[:, -1])

    def test_half_gate_example(self):
        raw = heatmap_with_row(3, 2, [0.9, 0.1, 0.2, 0.05], 4)
        out = char_condition(raw, presence_for_slot(3, 0.5))
        row = out.values[HeatmapSet.channel(3, 2)]
        np.testing.assert_allclose(row, [0.45, 0.05, 0.10, 0.025], rtol=0, atol=1e-15)

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(100)
        for _ in range(25):
            cols = int(rng.integers(2, 30))
            raw = rng.uniform(0.0, 1.0, size=(HEATMAP_CHANNELS, cols))
            presence = rng.uniform(0.0, 1.0, size=16)
            out = char_condition(HeatmapSet(raw), PresenceVector(presence))
            expected = char_condition_bruteforce(raw.tolist(), presence.tolist())
            np.testing.assert_allclose(out.values, np.array(expected), rtol=0, atol=1e-15)

    def test_linearity(self):
        rng = np.random.default_rng(101)
        raw = rng.uniform(0.0, 1.0, size=(HEATMAP_CHANNELS, 10))
        presence = PresenceVector(rng.uniform(0.0, 1.0, size=16))
        for alpha in (0.0, 0.5, 2.0, 7.25):
            a = char_condition(HeatmapSet(alpha * raw), presence)
            b = char_condition(HeatmapSet(raw), presence)
            np.testing.assert_allclose(a.values, alpha * b.values, rtol=0, atol=1e-12)

    def test_gate_complementarity(self):
        # Per channel, real scale + null scale = p + (1 - p) = 1.
        rng = np.random.default_rng(102)
        presence = rng.uniform(0.0, 1.0, size=16)
        ones = np.ones((HEATMAP_CHANNELS, 5))
        out = char_condition(HeatmapSet(ones), PresenceVector(presence))
        total = out.values[:, 0] + out.values[:, -1]
        np.testing.assert_allclose(total, np.ones(HEATMAP_CHANNELS), rtol=0, atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(AgentError):
            PresenceVector(np.ones(15))
        with pytest.raises(AgentError):
            HeatmapSet(np.ones((79, 4)))


class TestExtractLandmarks:
    def test_argmax_and_null(self):
        cloud = PointCloud(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [2.0, 2.0, 2.0]]))
        nullp = null_point(cloud)
        raw = heatmap_with_row(3, 2, [0.45, 0.05, 0.10, 0.025], 4)
        out = extract_landmarks(raw, cloud, nullp)
        point, is_null = out[(3, 2)]
        assert not is_null
        assert point.as_tuple() == (0.0, 0.0, 0.0)
        # All-zero rows tie-break to column 0, a real point.
        point0, is_null0 = out[(1, 0)]
        assert not is_null0
        assert point0.as_tuple() == (0.0, 0.0, 0.0)

    def test_null_column_wins(self):
        cloud = PointCloud(np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]))
        nullp = null_point(cloud)
        raw = heatmap_with_row(2, 1, [0.1, 0.2, 0.9], 3)
        point, is_null = extract_landmarks(raw, cloud, nullp)[(2, 1)]
        assert is_null
        assert point.as_tuple() == nullp.as_tuple()

    def test_closed_gate_always_null(self):
        rng = np.random.default_rng(103)
        cloud = PointCloud(rng.uniform(size=(10, 3)))
        nullp = null_point(cloud)
        # Strictly positive raw values: with p_t = 0 the null column wins.
        raw = HeatmapSet(rng.uniform(0.01, 1.0, size=(HEATMAP_CHANNELS, 11)))
        conditioned = char_condition(raw, presence_for_slot(5, 0.0))
        out = extract_landmarks(conditioned, cloud, nullp)
        for group in range(5):
            assert out[(5, group)][1] is True

    def test_argmax_scale_invariance(self):
        rng = np.random.default_rng(104)
        cloud = PointCloud(rng.uniform(size=(8, 3)))
        nullp = null_point(cloud)
        raw = rng.uniform(0.0, 1.0, size=(HEATMAP_CHANNELS, 9))
        base = extract_landmarks(HeatmapSet(raw), cloud, nullp)
        scaled = extract_landmarks(HeatmapSet(raw * 17.3), cloud, nullp)
        assert base == scaled

    def test_matches_bruteforce_argmax(self):
        rng = np.random.default_rng(105)
        cloud = PointCloud(rng.uniform(size=(6, 3)))
        nullp = null_point(cloud)
        raw = rng.uniform(0.0, 1.0, size=(HEATMAP_CHANNELS, 7))
        out = extract_landmarks(HeatmapSet(raw), cloud, nullp)
        for slot in range(1, 17):
            for group in range(5):
                idx = argmax_bruteforce(list(raw[HeatmapSet.channel(slot, group)]))
                point, is_null = out[(slot, group)]
                if idx == 6:
                    assert is_null
                else:
                    assert point.as_tuple() == tuple(cloud.points[idx])

    def test_dimension_mismatch(self):
        cloud = PointCloud(np.zeros((3, 3)))
        raw = HeatmapSet(np.ones((HEATMAP_CHANNELS, 3)))
        with pytest.raises(AgentError):
            extract_landmarks(raw, cloud, Vec3(0, 0, 0))


class TestLandmarkAgent:
    def test_oracle_source_complete_arch(self):
        truth = synthetic_truth()
        cloud = cloud_from_truth(truth)
        out = landmark_agent_infer(cloud, SyntheticOracleSource(truth))
        present = out.arch.present_teeth()
        assert len(present) == 16
        for fdi, state in present.items():
            assert out.per_tooth_confidence[fdi] == 1.0
            expected = truth.teeth[fdi]
            # Landmarks are cloud points; at zero noise they are exact.
            for name in LANDMARK_GROUPS:
                assert state.landmarks[name].as_tuple() == expected.landmarks[name].as_tuple()
            np.testing.assert_allclose(
                state.centroid.as_array(), expected.centroid.as_array(), atol=1e-12
            )

    def test_missing_slot_absent(self):
        truth = synthetic_truth(missing_slots=(8,))
        cloud = cloud_from_truth(truth)
        out = landmark_agent_infer(cloud, SyntheticOracleSource(truth))
        fdi = ARCH_SEQUENCE[Arch.UPPER][7]
        assert not out.arch.teeth[fdi].present
        assert out.per_tooth_confidence[fdi] == 0.0
        assert len(out.arch.present_teeth()) == 15

    def test_degenerate_landmarks_identity_frame(self):
        cloud = PointCloud(np.array([[1.0, 2.0, 3.0], [50.0, 50.0, 50.0]]))
        values = np.full((HEATMAP_CHANNELS, 3), 0.001)
        for group in range(5):
            values[HeatmapSet.channel(1, group)] = [1.0, 0.0, 0.0]
        out = landmark_agent_infer(
            cloud, _StaticSource(HeatmapSet(values), PresenceVector(np.full(16, 0.9))),
        )
        first = ARCH_SEQUENCE[Arch.UPPER][0]
        state = out.arch.teeth[first]
        assert state.present
        assert state.orientation.as_wxyz() == (1.0, 0.0, 0.0, 0.0)
        assert state.centroid.as_tuple() == (1.0, 2.0, 3.0)

    def test_source_failure_wrapped(self):
        cloud = cube_cloud()

        class FailingSource:
            arch = Arch.UPPER

            def generate(self, cloud):
                raise RuntimeError("model exploded")

        with pytest.raises(AgentUnavailableError):
            landmark_agent_infer(cloud, FailingSource())


class _StaticSource:
    arch = Arch.UPPER

    def __init__(self, heatmaps, presence):
        self._payload = (heatmaps, presence)

    def generate(self, cloud):
        return self._payload


class TestSegmentationAgent:
    def test_labeled_centroids_exact(self):
        rng = np.random.default_rng(7)
        offsets = rng.normal(scale=1.5, size=(40, 3))
        pts_11 = offsets + np.array([0.0, 45.0, 2.0])
        pts_12 = offsets + np.array([8.0, 43.0, 2.0])
        cloud = PointCloud(
            np.vstack([pts_11, pts_12]),
            labels=np.array([11] * 40 + [12] * 40),
        )
        out = segmentation_agent_infer(cloud)
        assert set(out.arch.teeth) == {11, 12}
        np.testing.assert_allclose(
            out.arch.teeth[11].centroid.as_array(), pts_11.mean(axis=0), atol=1e-12
        )
        np.testing.assert_allclose(
            out.arch.teeth[12].centroid.as_array(), pts_12.mean(axis=0), atol=1e-12
        )

    def test_14_labeled_teeth(self):
        truth = synthetic_truth(missing_slots=(1, 16))
        cloud = cloud_from_truth(truth)
        out = segmentation_agent_infer(cloud)
        assert len(out.arch.present_teeth()) == 14

    def test_confidence_clamps(self):
        rng = np.random.default_rng(8)
        many = rng.normal(size=(400, 3))
        few = rng.normal(size=(20, 3)) + 30.0
        cloud = PointCloud(
            np.vstack([many, few]), labels=np.array([11] * 400 + [12] * 20)
        )
        out = segmentation_agent_infer(cloud)
        assert out.arch.teeth[11].confidence == 0.99
        assert out.arch.teeth[12].confidence == 0.3

    def test_unlabeled_clustering_structure(self):
        truth = synthetic_truth()
        cloud = cloud_from_truth(truth)
        unlabeled = PointCloud(cloud.points)
        out = segmentation_agent_infer(unlabeled, arch=Arch.UPPER)
        assert 1 <= len(out.arch.teeth) <= 16
        again = segmentation_agent_infer(unlabeled, arch=Arch.UPPER)
        assert {f: s.centroid.as_tuple() for f, s in out.arch.teeth.items()} == {
            f: s.centroid.as_tuple() for f, s in again.arch.teeth.items()
        }

    def test_lower_arch_inferred_from_labels(self):
        pts = np.random.default_rng(9).normal(size=(30, 3))
        cloud = PointCloud(pts, labels=np.array([35] * 30))
        out = segmentation_agent_infer(cloud)
        assert out.arch.arch is Arch.LOWER


class TestHeatmapFiles:
    def test_binary_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        heatmaps = HeatmapSet(rng.uniform(size=(HEATMAP_CHANNELS, 9)))
        presence = PresenceVector(rng.uniform(size=16))
        path = tmp_path / "maps.ophm"
        save_heatmaps(path, heatmaps, presence)
        loaded_maps, loaded_presence = load_heatmaps(path)
        np.testing.assert_array_equal(loaded_maps.values, heatmaps.values)
        np.testing.assert_array_equal(loaded_presence.p, presence.p)

    def test_json_round_trip(self, tmp_path):
        rng = np.random.default_rng(12)
        heatmaps = HeatmapSet(rng.uniform(size=(HEATMAP_CHANNELS, 4)))
        presence = PresenceVector(rng.uniform(size=16))
        path = tmp_path / "maps.json"
        save_heatmaps(path, heatmaps, presence)
        loaded_maps, loaded_presence = load_heatmaps(path)
        np.testing.assert_array_equal(loaded_maps.values, heatmaps.values)
        np.testing.assert_array_equal(loaded_presence.p, presence.p)

    def test_file_source_column_mismatch(self, tmp_path):
        heatmaps = HeatmapSet(np.ones((HEATMAP_CHANNELS, 4)))
        presence = PresenceVector(np.ones(16))
        path = tmp_path / "maps.ophm"
        save_heatmaps(path, heatmaps, presence)
        source = FileHeatmapSource(path)
        with pytest.raises(AgentUnavailableError):
            source.generate(cube_cloud())  # 8 points needs 9 columns

    def test_file_source_feeds_agent(self, tmp_path):
        truth = synthetic_truth()
        cloud = cloud_from_truth(truth)
        heatmaps, presence = SyntheticOracleSource(truth).generate(cloud)
        path = tmp_path / "maps.ophm"
        save_heatmaps(path, heatmaps, presence)
        out = landmark_agent_infer(cloud, FileHeatmapSource(path))
        assert len(out.arch.present_teeth()) == 16

    def test_corrupt_file_rejected(self, tmp_path):
        path = tmp_path / "bad.ophm"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(AgentError):
            load_heatmaps(path)


class TestAgentWrappers:
    def test_landmark_agent_class(self):
        truth = synthetic_truth()
        cloud = cloud_from_truth(truth)
        agent = LandmarkAgent(SyntheticOracleSource(truth))
        out = agent.infer(cloud)
        assert out.agent_name == "landmark"
        assert out.elapsed_s >= 0.0
