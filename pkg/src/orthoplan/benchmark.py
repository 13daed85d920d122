"""Synthetic scenario generator and evaluation harness.

Scenarios are parameterized by arch form, crowding severity, and missing
teeth, and are fully determined by their seed. Each case carries a labeled
point cloud, ground-truth tooth states with landmarks, the movement plan
returning teeth to their ideal arch positions, and per-contact crowding
metadata. The harness runs the full pipeline per scenario and fusion mode
and aggregates quality, feasibility, and wall-time statistics.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from itertools import product
from typing import Optional

import numpy as np

from .agents import LandmarkAgent, SegmentationAgent, SyntheticOracleSource
from .dental import (
    ARCH_SEQUENCE,
    Arch,
    ArchState,
    MovementPlan,
    PointCloud,
    ToothMovement,
    ToothState,
    ToothType,
    tooth_type,
)
from .geometry import (
    EulerAnglesDeg,
    UnitQuaternion,
    Vec3,
    euler_to_quaternion,
    frame_to_quaternion,
    quaternion_multiply,
)
from .orchestrator import FusionConfig, FusionMode, Orchestrator
from .scoring import CrowdingInfo, ScoringConfig, Severity, TreatmentScore, score_plan

__all__ = [
    "Archetype",
    "CrowdingSeverity",
    "ScenarioSpec",
    "GeneratorOptions",
    "SyntheticCase",
    "BenchmarkConfig",
    "ModeStats",
    "BenchmarkReport",
    "generate_scenario",
    "enumerate_suite",
    "run_benchmark",
    "strip_timing_fields",
    "FEASIBLE_MIN_COMPOSITE",
]


class Archetype(Enum):
    TAPERED = "tapered"
    OVOID = "ovoid"
    SQUARE = "square"
    NARROW_V = "narrow_v"


class CrowdingSeverity(Enum):
    MILD = "mild"
    MODERATE = "moderate"
    SEVERE = "severe"


# Parabolic arch form y = depth * (1 - (x / half_width)^2): (half_width, depth) mm.
ARCHETYPE_PARAMS = {
    Archetype.TAPERED: (24.0, 46.0),
    Archetype.OVOID: (27.0, 42.0),
    Archetype.SQUARE: (30.0, 36.0),
    Archetype.NARROW_V: (21.0, 50.0),
}

# Total arch crowding bands (mm), Little's-index-style severity convention.
CROWDING_BANDS = {
    CrowdingSeverity.MILD: (0.3, 1.0),
    CrowdingSeverity.MODERATE: (1.0, 3.0),
    CrowdingSeverity.SEVERE: (3.0, 6.0),
}

# Mesiodistal crown widths (mm) by FDI position digit.
TOOTH_WIDTHS = {1: 8.5, 2: 6.5, 3: 7.6, 4: 7.0, 5: 6.8, 6: 10.0, 7: 9.5, 8: 8.5}

# Crown ellipsoid semi-axes (mm) per tooth type: (mesiodistal, buccolingual, vertical).
CROWN_SEMI_AXES = {
    ToothType.INCISOR: (4.2, 3.4, 5.2),
    ToothType.CANINE: (3.8, 4.0, 5.4),
    ToothType.PREMOLAR: (3.5, 4.4, 4.4),
    ToothType.MOLAR: (5.0, 5.2, 3.8),
}

MAX_COMPENSATING_ROTATION_DEG = 25.0

# Feasibility rule: no critical findings and at least a grade-C composite.
FEASIBLE_MIN_COMPOSITE = 60.0


@dataclass(frozen=True)
class ScenarioSpec:
    archetype: Archetype
    severity: CrowdingSeverity
    missing_count: int
    seed: int

    def __post_init__(self) -> None:
        if not 0 <= self.missing_count <= 2:
            raise ValueError(f"missing_count must be 0..2, got {self.missing_count}")


@dataclass(frozen=True)
class GeneratorOptions:
    """Knobs beyond the scenario grid, used mainly by the preset cases."""

    arch: Arch = Arch.UPPER
    points_per_tooth: tuple[int, int] = (120, 300)
    buccolingual_jitter_mm: float = 0.8
    vertical_offset_prob: float = 0.25
    vertical_offset_range_mm: tuple[float, float] = (0.3, 1.5)
    # Open-bite preset: anterior teeth sit above their ideal vertical level,
    # so their plans demand extrusion.
    anterior_open_bite: bool = False
    # Diastema preset: a gap at the central contact instead of crowding.
    diastema_mm: float = 0.0
    # Class II division 1 preset: protruded, torqued incisors.
    incisor_protrusion_mm: float = 0.0
    incisor_torque_deg: float = 0.0


@dataclass(frozen=True)
class SyntheticCase:
    spec: ScenarioSpec
    cloud: PointCloud
    ground_truth: ArchState
    target_plan: MovementPlan
    crowding: CrowdingInfo

    @property
    def arch(self) -> Arch:
        return self.ground_truth.arch


def _derived_seed(master_seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


@lru_cache(maxsize=None)
def _arc_positions(archetype: Archetype, n_slots: int = 16) -> list[tuple[float, float, float, float]]:
    """Ideal (x, y, tangent_x, tangent_y) per tooth slot along the parabola."""
    half_width, depth = ARCHETYPE_PARAMS[archetype]
    xs = np.linspace(-half_width, half_width, 2001)
    ys = depth * (1.0 - (xs / half_width) ** 2)
    seg = np.hypot(np.diff(xs), np.diff(ys))
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]

    widths = [TOOTH_WIDTHS[f % 10] for f in ARCH_SEQUENCE[Arch.UPPER]]
    width_total = sum(widths)
    positions = []
    cursor = 0.0
    for w in widths:
        s = (cursor + w / 2.0) / width_total * total
        cursor += w
        x = float(np.interp(s, arc, xs))
        y = float(np.interp(s, arc, ys))
        # Unit tangent pointing toward increasing arc (patient right to left).
        dydx = -2.0 * depth * x / (half_width**2)
        norm = math.hypot(1.0, dydx)
        positions.append((x, y, 1.0 / norm, dydx / norm))
    return positions


def _ideal_orientation(tx: float, ty: float) -> UnitQuaternion:
    """Local frame: mesiodistal along the arch tangent, vertical +z."""
    tangent = Vec3(tx, ty, 0.0)
    outward = Vec3(ty, -tx, 0.0)  # tangent rotated -90 deg: radially outward
    return frame_to_quaternion((tangent, outward, Vec3(0.0, 0.0, 1.0)))


def _landmark_offsets(semi: tuple[float, float, float]) -> dict[str, Vec3]:
    """Local-frame landmark offsets that sum to zero (keeps means exact)."""
    a, b, h = semi
    drop = h / 4.0
    return {
        "mesial": Vec3(a, 0.0, -drop),
        "distal": Vec3(-a, 0.0, -drop),
        "buccal": Vec3(0.0, b, -drop),
        "lingual": Vec3(0.0, -b, -drop),
        "occlusal": Vec3(0.0, 0.0, h),
    }


def _pick_missing(rng: np.random.Generator, sequence: tuple[int, ...], count: int) -> set[int]:
    """Seeded missing-teeth choice; never removes both central incisors."""
    centrals = {f for f in sequence if f % 10 == 1}
    while True:
        chosen = set(int(f) for f in rng.choice(sequence, size=count, replace=False))
        if not centrals.issubset(chosen):
            return chosen
        # Redraw deterministically from the same stream.


def generate_scenario(spec: ScenarioSpec, options: GeneratorOptions = GeneratorOptions()) -> SyntheticCase:
    """Build one fully seeded synthetic case.

    Teeth are placed along the archetype parabola, displaced mesiodistally to
    realize the drawn crowding (with compensating rotations), then rendered
    as antipodally symmetric ellipsoidal clusters so empirical centroids
    match the generative ones to float precision. The target plan moves every
    present tooth back to its ideal pose.
    """
    rng = np.random.default_rng(spec.seed)
    sequence = ARCH_SEQUENCE[options.arch]
    positions = _arc_positions(spec.archetype)

    missing = _pick_missing(rng, sequence, spec.missing_count) if spec.missing_count else set()
    present = [f for f in sequence if f not in missing]

    # Per-contact crowding drawn first so totals stay inside the band.
    low, high = CROWDING_BANDS[spec.severity]
    total_crowding = float(rng.uniform(low, high))
    n_contacts = len(present) - 1
    weights = rng.uniform(0.2, 1.0, size=n_contacts)
    overlaps = total_crowding * weights / weights.sum()

    # Tangential shifts realizing the overlaps: each contact pulls its two
    # teeth together by half the overlap each.
    slot_of = {f: i for i, f in enumerate(sequence)}
    shift = {f: 0.0 for f in present}
    for c, overlap in enumerate(overlaps):
        left, right = present[c], present[c + 1]
        shift[left] += overlap / 2.0
        shift[right] -= overlap / 2.0

    if options.diastema_mm > 0.0:
        # Open a gap at the central contact (positions 8 and 9 in sequence).
        for f in present:
            if slot_of[f] <= 7:
                shift[f] -= options.diastema_mm / 2.0
            else:
                shift[f] += options.diastema_mm / 2.0

    teeth: dict[int, ToothState] = {}
    plan: dict[int, ToothMovement] = {}
    cloud_points: list[np.ndarray] = []
    cloud_labels: list[np.ndarray] = []

    for fdi in sequence:
        x, y, tx_dir, ty_dir = positions[slot_of[fdi]]
        ideal_c = np.array([x, y, 0.0])
        if fdi in missing:
            teeth[fdi] = ToothState(
                fdi=fdi,
                centroid=Vec3.from_array(ideal_c),
                orientation=_ideal_orientation(tx_dir, ty_dir),
                confidence=0.0,
                present=False,
            )
            continue

        ttype = tooth_type(fdi)
        semi = CROWN_SEMI_AXES[ttype]
        tangent = np.array([tx_dir, ty_dir, 0.0])
        outward = np.array([ty_dir, -tx_dir, 0.0])

        local_overlap = 0.0
        idx = present.index(fdi)
        if idx > 0:
            local_overlap = max(local_overlap, overlaps[idx - 1])
        if idx < n_contacts:
            local_overlap = max(local_overlap, overlaps[idx])

        displacement = shift[fdi] * tangent
        displacement = displacement + float(rng.uniform(-1, 1)) * options.buccolingual_jitter_mm * outward

        dz = 0.0
        is_anterior = fdi % 10 <= 3
        if options.anterior_open_bite and is_anterior:
            dz = float(rng.uniform(0.8, 1.4))
        elif rng.uniform() < options.vertical_offset_prob:
            lo, hi = options.vertical_offset_range_mm
            dz = float(rng.uniform(lo, hi)) * (1.0 if rng.uniform() < 0.5 else -1.0)
        displacement = displacement + np.array([0.0, 0.0, dz])

        if options.incisor_protrusion_mm > 0.0 and fdi % 10 <= 2:
            displacement = displacement + options.incisor_protrusion_mm * outward

        applied_rz = float(
            np.clip(
                MAX_COMPENSATING_ROTATION_DEG * local_overlap / 2.0 * rng.uniform(0.4, 1.0),
                0.0,
                MAX_COMPENSATING_ROTATION_DEG,
            )
        ) * (1.0 if rng.uniform() < 0.5 else -1.0)
        applied_rx = 0.0
        if options.incisor_torque_deg > 0.0 and fdi % 10 <= 2:
            applied_rx = options.incisor_torque_deg

        current_c = ideal_c + displacement
        ideal_q = _ideal_orientation(tx_dir, ty_dir)
        applied_q = euler_to_quaternion(EulerAnglesDeg(applied_rx, 0.0, applied_rz))
        current_q = quaternion_multiply(ideal_q, applied_q)

        # Landmarks in the current frame; their offsets sum to zero.
        offsets = _landmark_offsets(semi)
        landmarks = {
            name: Vec3.from_array(current_c + current_q.rotate(off).as_array())
            for name, off in offsets.items()
        }

        # Antipodal point pairs: the empirical centroid equals current_c.
        n_pairs = int(rng.integers(options.points_per_tooth[0] // 2, options.points_per_tooth[1] // 2 + 1))
        unit = rng.normal(size=(n_pairs, 3))
        unit /= np.linalg.norm(unit, axis=1, keepdims=True)
        radii = rng.uniform(0.35, 1.0, size=(n_pairs, 1)) ** (1.0 / 3.0)
        local = unit * radii * np.array(semi)
        rot = local @ current_q.as_matrix().T
        points = np.vstack([current_c + rot, current_c - rot])
        lm_array = np.array([landmarks[name].as_tuple() for name in sorted(landmarks)])
        points = np.vstack([points, lm_array])

        cloud_points.append(points)
        cloud_labels.append(np.full(points.shape[0], fdi, dtype=int))

        teeth[fdi] = ToothState(
            fdi=fdi,
            centroid=Vec3.from_array(current_c),
            orientation=current_q,
            confidence=1.0,
            present=True,
            landmarks=landmarks,
            extents=tuple(s / math.sqrt(5.0) for s in semi),
        )
        plan[fdi] = ToothMovement(
            tx=float(ideal_c[0] - current_c[0]),
            ty=float(ideal_c[1] - current_c[1]),
            tz=float(ideal_c[2] - current_c[2]),
            rx=-applied_rx,
            ry=0.0,
            rz=-applied_rz,
        )

    cloud = PointCloud(np.vstack(cloud_points), labels=np.concatenate(cloud_labels))
    return SyntheticCase(
        spec=spec,
        cloud=cloud,
        ground_truth=ArchState(options.arch, teeth),
        target_plan=MovementPlan(plan),
        crowding=CrowdingInfo(tuple(float(o) for o in overlaps)),
    )


def enumerate_suite(n: int, master_seed: int) -> list[ScenarioSpec]:
    """Round-robin over the 4 x 3 x 3 grid with per-spec derived seeds."""
    if n < 1:
        raise ValueError("suite size must be positive")
    grid = list(product(Archetype, CrowdingSeverity, (0, 1, 2)))
    specs = []
    for i in range(n):
        archetype, severity, missing = grid[i % len(grid)]
        specs.append(
            ScenarioSpec(
                archetype=archetype,
                severity=severity,
                missing_count=missing,
                seed=_derived_seed(master_seed, i),
            )
        )
    return specs


@dataclass(frozen=True)
class BenchmarkConfig:
    """Noise dial for the oracle heatmap source plus harness options."""

    heatmap_noise: float = 0.05
    presence_noise: float = 0.3
    flip_prob: float = 0.02
    sigma_mm: float = 1.5
    workers: int = 1
    per_scenario_rows: bool = True


@dataclass
class ModeStats:
    mode: str
    n: int = 0
    mean_quality: float = 0.0
    sd_quality: float = 0.0
    feasibility: float = 0.0
    mean_time_s: float = 0.0
    sd_time_s: float = 0.0
    n_failures: int = 0


@dataclass
class BenchmarkReport:
    n: int
    master_seed: Optional[int]
    modes: dict[str, ModeStats]
    per_scenario: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n": self.n,
            "master_seed": self.master_seed,
            "modes": {
                name: {
                    "n": s.n,
                    "mean_quality": s.mean_quality,
                    "sd_quality": s.sd_quality,
                    "feasibility": s.feasibility,
                    "mean_time_s": s.mean_time_s,
                    "sd_time_s": s.sd_time_s,
                    "n_failures": s.n_failures,
                }
                for name, s in sorted(self.modes.items())
            },
            "per_scenario": self.per_scenario,
            "failures": self.failures,
        }


TIMING_KEYS = frozenset({"mean_time_s", "sd_time_s", "time_s"})


def strip_timing_fields(doc):
    """Recursively drop wall-time fields for determinism comparisons."""
    if isinstance(doc, dict):
        return {k: strip_timing_fields(v) for k, v in doc.items() if k not in TIMING_KEYS}
    if isinstance(doc, list):
        return [strip_timing_fields(v) for v in doc]
    return doc


def _feasible(score: TreatmentScore) -> bool:
    return score.count(Severity.CRITICAL) == 0 and score.composite >= FEASIBLE_MIN_COMPOSITE


def _population_stats(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    arr = np.asarray(values)
    return float(arr.mean()), float(arr.std())


def _run_one(
    case: SyntheticCase, mode: FusionMode, bench_cfg: BenchmarkConfig, scoring_cfg: ScoringConfig
) -> tuple[TreatmentScore, float]:
    source = SyntheticOracleSource(
        case.ground_truth,
        sigma_mm=bench_cfg.sigma_mm,
        heatmap_noise=bench_cfg.heatmap_noise,
        presence_noise=bench_cfg.presence_noise,
        flip_prob=bench_cfg.flip_prob,
        seed=case.spec.seed ^ 0x5EED,
    )
    agent1 = SegmentationAgent(arch=case.arch)
    agent2 = LandmarkAgent(source, arch=case.arch)
    orchestrator = Orchestrator(agent1, agent2, FusionConfig(mode=mode))
    start = time.perf_counter()
    fused, _ = orchestrator.run(case.cloud)
    score = score_plan(case.target_plan, fused, case.crowding, scoring_cfg)
    elapsed = time.perf_counter() - start
    return score, elapsed


def run_benchmark(
    suite: list[ScenarioSpec],
    modes: list[FusionMode],
    bench_cfg: BenchmarkConfig = BenchmarkConfig(),
    scoring_cfg: ScoringConfig = ScoringConfig(),
    master_seed: Optional[int] = None,
    options: GeneratorOptions = GeneratorOptions(),
) -> BenchmarkReport:
    """Run every scenario through every fusion mode and aggregate.

    Individual scenario failures are recorded and excluded from aggregates.
    All report content except wall times is deterministic for a fixed suite.
    """
    if not suite:
        raise ValueError("benchmark suite must not be empty")

    per_mode_scores: dict[str, list[float]] = {m.value: [] for m in modes}
    per_mode_feasible: dict[str, int] = {m.value: 0 for m in modes}
    per_mode_times: dict[str, list[float]] = {m.value: [] for m in modes}
    per_mode_failures: dict[str, int] = {m.value: 0 for m in modes}
    rows: list[dict] = []
    failures: list[dict] = []

    def evaluate(index: int, spec: ScenarioSpec) -> list[dict]:
        case = generate_scenario(spec, options)
        out = []
        for mode in modes:
            entry: dict = {"index": index, "seed": spec.seed, "mode": mode.value}
            try:
                score, elapsed = _run_one(case, mode, bench_cfg, scoring_cfg)
                entry.update(
                    {
                        "composite": score.composite,
                        "composite_raw": score.composite_raw,
                        "v1_score": score.v1_score,
                        "grade": score.grade,
                        "n_critical": score.count(Severity.CRITICAL),
                        "n_warning": score.count(Severity.WARNING),
                        "feasible": _feasible(score),
                        "time_s": elapsed,
                    }
                )
            except Exception as exc:
                entry.update({"error": f"{type(exc).__name__}: {exc}"})
            out.append(entry)
        return out

    if bench_cfg.workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=bench_cfg.workers) as pool:
            results = list(pool.map(lambda args: evaluate(*args), enumerate(suite)))
    else:
        results = [evaluate(i, spec) for i, spec in enumerate(suite)]

    # Aggregation joins by scenario index, so worker count never changes it.
    for entries in results:
        for entry in entries:
            mode = entry["mode"]
            if "error" in entry:
                per_mode_failures[mode] += 1
                failures.append(entry)
                continue
            per_mode_scores[mode].append(entry["composite"])
            per_mode_times[mode].append(entry["time_s"])
            if entry["feasible"]:
                per_mode_feasible[mode] += 1
            rows.append(entry)

    stats = {}
    for mode in modes:
        name = mode.value
        mean_q, sd_q = _population_stats(per_mode_scores[name])
        mean_t, sd_t = _population_stats(per_mode_times[name])
        n_ok = len(per_mode_scores[name])
        stats[name] = ModeStats(
            mode=name,
            n=len(suite),
            mean_quality=mean_q,
            sd_quality=sd_q,
            feasibility=per_mode_feasible[name] / n_ok if n_ok else 0.0,
            mean_time_s=mean_t,
            sd_time_s=sd_t,
            n_failures=per_mode_failures[name],
        )

    return BenchmarkReport(
        n=len(suite),
        master_seed=master_seed,
        modes=stats,
        per_scenario=rows if bench_cfg.per_scenario_rows else [],
        failures=failures,
    )
