"""Tooth-state estimators sharing one contract.

Two agents are provided:

* a segmentation-style geometric agent that derives per-tooth centroids and
  PCA orientation frames from labeled (or arc-clustered) points, and
* a landmark agent that gates per-point heatmap likelihoods with tooth
  presence probabilities and reads landmarks off the conditioned argmax.

Heatmaps are indexed by channel k = (slot - 1) * 5 + group, with 16 tooth
slots per arch (see ``ARCH_SEQUENCE``) and 5 landmark groups per tooth. The
last heatmap column belongs to the null point that absorbs absent teeth.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .dental import (
    ARCH_SEQUENCE,
    LANDMARK_GROUPS,
    LANDMARKS_PER_TOOTH,
    TEETH_PER_ARCH,
    Arch,
    ArchState,
    DentalModelError,
    PointCloud,
    ToothState,
    arch_of,
)
from .geometry import UnitQuaternion, Vec3, frame_to_quaternion, principal_axes

__all__ = [
    "AgentError",
    "AgentUnavailableError",
    "HeatmapSet",
    "PresenceVector",
    "AgentOutput",
    "HeatmapSource",
    "SyntheticOracleSource",
    "FileHeatmapSource",
    "null_point",
    "char_condition",
    "extract_landmarks",
    "landmark_agent_infer",
    "segmentation_agent_infer",
    "save_heatmaps",
    "load_heatmaps",
    "LandmarkAgent",
    "SegmentationAgent",
    "HEATMAP_CHANNELS",
]

HEATMAP_CHANNELS = TEETH_PER_ARCH * LANDMARKS_PER_TOOTH  # 80 per arch


class AgentError(ValueError):
    """Invalid input to an estimator."""


class AgentUnavailableError(RuntimeError):
    """An agent (or its heatmap source) failed; callers may fall back."""


class HeatmapSet:
    """Per-point landmark likelihoods: 80 channels x (N + 1) columns.

    The final column is the null point; all values are finite and >= 0.
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != HEATMAP_CHANNELS:
            raise AgentError(f"heatmaps must have {HEATMAP_CHANNELS} rows, got {values.shape}")
        if values.shape[1] < 2:
            raise AgentError("heatmaps need at least one real column plus the null column")
        if not np.all(np.isfinite(values)) or np.any(values < 0.0):
            raise AgentError("heatmap values must be finite and non-negative")
        self.values = values

    @property
    def columns(self) -> int:
        return int(self.values.shape[1])

    @staticmethod
    def channel(slot: int, group: int) -> int:
        """Row index for tooth slot (1..16) and landmark group (0..4)."""
        if not 1 <= slot <= TEETH_PER_ARCH or not 0 <= group < LANDMARKS_PER_TOOTH:
            raise AgentError(f"bad channel address: slot={slot}, group={group}")
        return (slot - 1) * LANDMARKS_PER_TOOTH + group


class PresenceVector:
    """Tooth presence probabilities for the 16 slots of one arch."""

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape != (TEETH_PER_ARCH,):
            raise AgentError(f"presence vector must have {TEETH_PER_ARCH} entries, got {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise AgentError("presence probabilities must lie in [0, 1]")
        self.p = p

    def __getitem__(self, slot: int) -> float:
        """Probability for tooth slot 1..16."""
        if not 1 <= slot <= TEETH_PER_ARCH:
            raise AgentError(f"tooth slot out of range: {slot}")
        return float(self.p[slot - 1])


@dataclass(frozen=True)
class AgentOutput:
    """One estimator's view of an arch plus its per-tooth confidence."""

    arch: ArchState
    per_tooth_confidence: dict[int, float]
    elapsed_s: float
    agent_name: str = ""

    def __post_init__(self) -> None:
        for fdi in self.arch.teeth:
            if fdi not in self.per_tooth_confidence:
                raise AgentError(f"missing confidence entry for tooth {fdi}")


def null_point(cloud: PointCloud) -> Vec3:
    """Artificial point offset from the cloud centroid that absorbs absent teeth.

    Placed half the maximal bounding-box extent beyond the centroid in +y.
    """
    c = cloud.centroid()
    half_extent = cloud.bounding_box_max_extent() / 2.0
    return Vec3(c.x, c.y + half_extent, c.z)


def char_condition(raw: HeatmapSet, presence: PresenceVector) -> HeatmapSet:
    """Gate heatmap likelihoods with presence probabilities.

    For every channel of tooth slot t, real-point columns are scaled by p_t
    and the null column by (1 - p_t).
    """
    scale = np.repeat(presence.p, LANDMARKS_PER_TOOTH)  # (80,)
    out = raw.values * scale[:, None]
    out[:, -1] = raw.values[:, -1] * (1.0 - scale)
    return HeatmapSet(out)


def extract_landmarks(
    conditioned: HeatmapSet, cloud: PointCloud, nullp: Vec3
) -> dict[tuple[int, int], tuple[Vec3, bool]]:
    """Argmax landmark per channel; ties resolve to the lowest column index.

    Returns (slot, group) -> (coordinates, is_null); channels whose argmax is
    the null column report the null point with is_null = True.
    """
    if conditioned.columns != len(cloud) + 1:
        raise AgentError(
            f"heatmap columns ({conditioned.columns}) must equal cloud size + 1 ({len(cloud) + 1})"
        )
    best = np.argmax(conditioned.values, axis=1)
    result: dict[tuple[int, int], tuple[Vec3, bool]] = {}
    n = len(cloud)
    for slot in range(1, TEETH_PER_ARCH + 1):
        for group in range(LANDMARKS_PER_TOOTH):
            idx = int(best[HeatmapSet.channel(slot, group)])
            if idx == n:
                result[(slot, group)] = (nullp, True)
            else:
                result[(slot, group)] = (Vec3.from_array(cloud.points[idx]), False)
    return result


class HeatmapSource(Protocol):
    """Anything that yields heatmaps plus presence for a cloud.

    Implementations stand in for the trained landmark-regression encoder;
    raising makes the landmark agent report itself unavailable.
    """

    arch: Arch

    def generate(self, cloud: PointCloud) -> tuple[HeatmapSet, PresenceVector]: ...


class SyntheticOracleSource:
    """Heatmap source built from known ground truth, for end-to-end testing.

    Emits Gaussian likelihood bumps (sigma in mm) around the true landmarks,
    evaluated at every cloud point and at the null point. Optional additive
    heatmap noise, presence noise, and presence flips turn estimator error
    into a controllable dial. Fully seeded.
    """

    # Raw likelihood for channels of absent teeth; conditioning decides
    # whether the null column survives.
    ABSENT_BASELINE = 0.01

    def __init__(
        self,
        truth: ArchState,
        sigma_mm: float = 1.5,
        heatmap_noise: float = 0.0,
        presence_noise: float = 0.0,
        flip_prob: float = 0.0,
        seed: int = 0,
    ):
        if sigma_mm <= 0:
            raise AgentError("sigma must be positive")
        self.truth = truth
        self.arch = truth.arch
        self.sigma_mm = sigma_mm
        self.heatmap_noise = heatmap_noise
        self.presence_noise = presence_noise
        self.flip_prob = flip_prob
        self.seed = seed

    def generate(self, cloud: PointCloud) -> tuple[HeatmapSet, PresenceVector]:
        rng = np.random.default_rng(self.seed)
        nullp = null_point(cloud)
        coords = np.vstack([cloud.points, nullp.as_array()])  # (N+1, 3)

        sequence = ARCH_SEQUENCE[self.arch]
        values = np.full((HEATMAP_CHANNELS, coords.shape[0]), self.ABSENT_BASELINE)
        presence = np.zeros(TEETH_PER_ARCH)
        inv_two_sigma2 = 1.0 / (2.0 * self.sigma_mm * self.sigma_mm)

        for slot, fdi in enumerate(sequence, start=1):
            state = self.truth.teeth.get(fdi)
            if state is None or not state.present or not state.landmarks:
                continue
            presence[slot - 1] = 1.0
            for group, name in enumerate(LANDMARK_GROUPS):
                lm = state.landmarks.get(name)
                if lm is None:
                    continue
                d2 = ((coords - lm.as_array()) ** 2).sum(axis=1)
                values[HeatmapSet.channel(slot, group)] = np.exp(-d2 * inv_two_sigma2)

        if self.heatmap_noise > 0:
            values = values + rng.uniform(0.0, self.heatmap_noise, size=values.shape)
        if self.presence_noise > 0:
            presence = np.clip(
                presence + rng.uniform(-self.presence_noise, self.presence_noise, TEETH_PER_ARCH),
                0.0,
                1.0,
            )
        if self.flip_prob > 0:
            flips = rng.uniform(size=TEETH_PER_ARCH) < self.flip_prob
            presence = np.where(flips, 1.0 - presence, presence)

        return HeatmapSet(values), PresenceVector(presence)


_HEATMAP_MAGIC = b"OPHM"
_HEATMAP_VERSION = 1


def save_heatmaps(path, heatmaps: HeatmapSet, presence: PresenceVector) -> None:
    """Write heatmaps + presence to disk.

    ``.json`` paths get ``{"presence": [...], "values": [[...]]}``; anything
    else uses the flat binary layout:

    ======  =====  ==========================================
    offset  bytes  field
    ======  =====  ==========================================
    0       4      magic ``OPHM``
    4       4      format version, u32 little-endian (= 1)
    8       4      row count K, u32 little-endian (= 80)
    12      4      column count N + 1, u32 little-endian
    16      128    presence vector, 16 x f64 little-endian
    144     K*8*C  heatmap values, row-major f64 little-endian
    ======  =====  ==========================================
    """
    path = str(path)
    if path.endswith(".json"):
        payload = {"presence": presence.p.tolist(), "values": heatmaps.values.tolist()}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f)
        return
    with open(path, "wb") as f:
        f.write(_HEATMAP_MAGIC)
        f.write(struct.pack("<III", _HEATMAP_VERSION, heatmaps.values.shape[0], heatmaps.values.shape[1]))
        f.write(presence.p.astype("<f8").tobytes())
        f.write(heatmaps.values.astype("<f8").tobytes())


def load_heatmaps(path) -> tuple[HeatmapSet, PresenceVector]:
    """Inverse of :func:`save_heatmaps`."""
    path = str(path)
    if path.endswith(".json"):
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        return HeatmapSet(np.array(payload["values"])), PresenceVector(np.array(payload["presence"]))
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != _HEATMAP_MAGIC:
        raise AgentError(f"not a heatmap file: {path}")
    version, rows, cols = struct.unpack("<III", blob[4:16])
    if version != _HEATMAP_VERSION:
        raise AgentError(f"unsupported heatmap format version {version}")
    presence = np.frombuffer(blob[16:144], dtype="<f8").copy()
    values = np.frombuffer(blob[144 : 144 + rows * cols * 8], dtype="<f8").reshape(rows, cols).copy()
    return HeatmapSet(values), PresenceVector(presence)


class FileHeatmapSource:
    """Serves precomputed heatmaps from disk, e.g. external model outputs."""

    def __init__(self, path, arch: Arch = Arch.UPPER):
        self.path = str(path)
        self.arch = arch

    def generate(self, cloud: PointCloud) -> tuple[HeatmapSet, PresenceVector]:
        try:
            heatmaps, presence = load_heatmaps(self.path)
        except (OSError, AgentError) as exc:
            raise AgentUnavailableError(f"heatmap file unusable: {exc}") from exc
        if heatmaps.columns != len(cloud) + 1:
            raise AgentUnavailableError(
                f"heatmap file has {heatmaps.columns} columns, cloud needs {len(cloud) + 1}"
            )
        return heatmaps, presence


# Presence threshold mirroring the orchestrator's sequential-mode threshold.
PRESENT_THRESHOLD = 0.5


def _orientation_from_points(points: list[Vec3]) -> tuple[UnitQuaternion, tuple[float, float, float]]:
    res = principal_axes(points)
    if res.degenerate:
        return UnitQuaternion.identity(), res.extents
    return frame_to_quaternion(res.axes), res.extents


def landmark_agent_infer(
    cloud: PointCloud, source: HeatmapSource, arch: Optional[Arch] = None
) -> AgentOutput:
    """Estimate tooth states from presence-gated landmark heatmaps.

    Emits a state for every tooth slot; absent slots carry the presence
    probability as their confidence and the null point as a placeholder
    centroid.
    """
    start = time.perf_counter()
    arch = arch if arch is not None else getattr(source, "arch", Arch.UPPER)
    try:
        raw, presence = source.generate(cloud)
    except AgentUnavailableError:
        raise
    except Exception as exc:
        raise AgentUnavailableError(f"heatmap source failed: {exc}") from exc

    nullp = null_point(cloud)
    conditioned = char_condition(raw, presence)
    extracted = extract_landmarks(conditioned, cloud, nullp)

    teeth: dict[int, ToothState] = {}
    confidences: dict[int, float] = {}
    for slot, fdi in enumerate(ARCH_SEQUENCE[arch], start=1):
        p_t = presence[slot]
        named = {}
        for group, name in enumerate(LANDMARK_GROUPS):
            point, is_null = extracted[(slot, group)]
            if not is_null:
                named[name] = point
        present = p_t >= PRESENT_THRESHOLD and len(named) >= 1
        if present:
            pts = list(named.values())
            centroid = Vec3.from_array(np.mean([p.as_tuple() for p in pts], axis=0))
            orientation, extents = _orientation_from_points(pts)
            teeth[fdi] = ToothState(
                fdi=fdi,
                centroid=centroid,
                orientation=orientation,
                confidence=p_t,
                present=True,
                landmarks=named,
                extents=extents,
            )
        else:
            teeth[fdi] = ToothState(
                fdi=fdi,
                centroid=nullp,
                orientation=UnitQuaternion.identity(),
                confidence=p_t,
                present=False,
            )
        confidences[fdi] = p_t

    elapsed = time.perf_counter() - start
    return AgentOutput(ArchState(arch, teeth), confidences, elapsed, agent_name="landmark")


def _confidence_from_count(count: int) -> float:
    return min(0.99, max(0.3, count / 200.0))


def _kmeans_1d(values: np.ndarray, k: int, iterations: int = 50) -> np.ndarray:
    """Deterministic 1-D k-means with quantile initialization."""
    centers = np.quantile(values, (np.arange(k) + 0.5) / k)
    assign = np.zeros(len(values), dtype=int)
    for _ in range(iterations):
        assign = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = values[assign == j]
            if len(members):
                new_centers[j] = members.mean()
        if np.allclose(new_centers, centers):
            break
        centers = new_centers
    return assign


def segmentation_agent_infer(
    cloud: PointCloud, arch: Optional[Arch] = None, seed: int = 0
) -> AgentOutput:
    """Estimate tooth states from segmentation-style point groups.

    Labeled clouds (synthetic mode) use the ground-truth grouping directly;
    unlabeled clouds are clustered along the arch by angular position and
    clusters are assigned to FDI slots in arc order. Confidence grows with
    the per-tooth point count, clamped to [0.3, 0.99].
    """
    start = time.perf_counter()
    if len(cloud) < 1:
        raise AgentError("empty cloud")

    groups: dict[int, np.ndarray] = {}
    if cloud.labeled:
        labels = cloud.labels
        if arch is None:
            tooth_mask = labels > 0
            if not np.any(tooth_mask):
                raise AgentError("labeled cloud contains no tooth points")
            quadrants = labels[tooth_mask] // 10
            arch = Arch.UPPER if np.isin(quadrants, (1, 2)).mean() >= 0.5 else Arch.LOWER
        wanted = set(ARCH_SEQUENCE[arch])
        for code in np.unique(labels):
            if int(code) in wanted:
                groups[int(code)] = cloud.points[labels == code]
    else:
        arch = arch if arch is not None else Arch.UPPER
        center = cloud.points[:, :2].mean(axis=0)
        angles = np.arctan2(cloud.points[:, 1] - center[1], cloud.points[:, 0] - center[0])
        k = min(TEETH_PER_ARCH, len(cloud))
        assign = _kmeans_1d(angles, k)
        order = np.argsort([angles[assign == j].mean() if np.any(assign == j) else np.inf for j in range(k)])
        sequence = ARCH_SEQUENCE[arch]
        for slot_idx, j in enumerate(order):
            members = cloud.points[assign == j]
            if len(members):
                groups[sequence[slot_idx]] = members

    teeth: dict[int, ToothState] = {}
    confidences: dict[int, float] = {}
    for fdi, pts in sorted(groups.items()):
        res = principal_axes(pts)
        orientation = UnitQuaternion.identity() if res.degenerate else frame_to_quaternion(res.axes)
        confidence = _confidence_from_count(len(pts))
        teeth[fdi] = ToothState(
            fdi=fdi,
            centroid=res.centroid,
            orientation=orientation,
            confidence=confidence,
            present=True,
            extents=res.extents,
        )
        confidences[fdi] = confidence

    elapsed = time.perf_counter() - start
    return AgentOutput(ArchState(arch, teeth), confidences, elapsed, agent_name="segmentation")


class LandmarkAgent:
    """Landmark estimator bound to a heatmap source."""

    name = "landmark"

    def __init__(self, source: HeatmapSource, arch: Optional[Arch] = None):
        self.source = source
        self.arch = arch

    def infer(self, cloud: PointCloud) -> AgentOutput:
        return landmark_agent_infer(cloud, self.source, self.arch)


class SegmentationAgent:
    """Segmentation-style estimator over labeled or arc-clustered points."""

    name = "segmentation"

    def __init__(self, arch: Optional[Arch] = None, seed: int = 0):
        self.arch = arch
        self.seed = seed

    def infer(self, cloud: PointCloud) -> AgentOutput:
        return segmentation_agent_infer(cloud, self.arch, self.seed)
