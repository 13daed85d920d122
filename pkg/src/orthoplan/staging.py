"""Multi-frame treatment simulator.

Estimates the aligner count from per-aligner movement budgets, interpolates
6-DoF tooth poses over normalized treatment time (positions linearly,
rotations by SLERP), and defers extruding teeth until t0 so anchorage can be
established first. The deferral gates the whole movement of an extruding
tooth, not just its vertical axis; ``defer_vertical_only`` preserves the
per-axis alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dental import ArchState, DentalModelError, MovementPlan, ToothMovement
from .geometry import EulerAnglesDeg, UnitQuaternion, Vec3, euler_to_quaternion, quaternion_multiply, slerp

__all__ = [
    "StagingConfig",
    "TreatmentFrame",
    "StagingSummary",
    "aligner_count",
    "t_eff",
    "generate_frames",
    "staging_summary_only",
]


@dataclass(frozen=True)
class StagingConfig:
    """Per-aligner budgets and frame layout."""

    delta_trans_mm: float = 0.25
    delta_rot_deg: float = 2.0
    frames_per_aligner: int = 3
    min_aligners: int = 20
    extrusion_start: float = 0.6
    # Budgets apply to the raw plan; over-engineering belongs to scoring.
    over_engineer_staging: bool = False
    defer_vertical_only: bool = False

    def __post_init__(self) -> None:
        if self.delta_trans_mm <= 0 or self.delta_rot_deg <= 0:
            raise ValueError("per-aligner budgets must be positive")
        if self.frames_per_aligner < 1 or self.min_aligners < 1:
            raise ValueError("frame and aligner counts must be positive")
        if not 0.0 < self.extrusion_start < 1.0:
            raise ValueError("extrusion start must lie in (0, 1)")


@dataclass(frozen=True)
class TreatmentFrame:
    """All tooth poses at one normalized treatment time t = index / F."""

    index: int
    t: float
    poses: dict[int, tuple[Vec3, UnitQuaternion]]


@dataclass(frozen=True)
class StagingSummary:
    """Aligner/frame counts plus per-stage movement maxima.

    ``max_stage_displacement_mm[i]`` and ``max_stage_rotation_deg[i]`` hold
    the largest single-tooth movement between the boundaries of aligner
    stage i; ``deferred_teeth`` lists extruding teeth whose movement starts
    only at the extrusion-start time.
    """

    aligner_count: int
    frame_count: int
    max_stage_displacement_mm: list[float]
    max_stage_rotation_deg: list[float]
    deferred_teeth: list[int] = field(default_factory=list)


def aligner_count(plan: MovementPlan, cfg: StagingConfig = StagingConfig()) -> int:
    """Number of aligners: the worst tooth's movement split into budgets.

    max(ceil(max translation norm / delta_trans),
        ceil(max rotation norm / delta_rot), min_aligners).
    """
    movements = [m.scaled(1.3) for m in plan.entries.values()] if cfg.over_engineer_staging else list(plan.entries.values())
    max_trans = max(m.translation_norm() for m in movements)
    max_rot = max(m.rotation_norm() for m in movements)
    return max(
        math.ceil(max_trans / cfg.delta_trans_mm),
        math.ceil(max_rot / cfg.delta_rot_deg),
        cfg.min_aligners,
    )


def t_eff(tz: float, t: float, cfg: StagingConfig = StagingConfig()) -> float:
    """Effective interpolation parameter after the extrusion-deferral rule."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"normalized time out of range: {t}")
    if tz < 0.0:
        t0 = cfg.extrusion_start
        if t < t0:
            return 0.0
        return (t - t0) / (1.0 - t0)
    return t


def _pose_at(
    start: tuple[Vec3, UnitQuaternion],
    movement: ToothMovement,
    target_q: UnitQuaternion,
    t: float,
    cfg: StagingConfig,
) -> tuple[Vec3, UnitQuaternion]:
    c0, q0 = start
    te = t_eff(movement.tz, t, cfg)
    if cfg.defer_vertical_only:
        centroid = Vec3(
            c0.x + t * movement.tx,
            c0.y + t * movement.ty,
            c0.z + te * movement.tz,
        )
        rotation_param = t
    else:
        centroid = Vec3(
            c0.x + te * movement.tx,
            c0.y + te * movement.ty,
            c0.z + te * movement.tz,
        )
        rotation_param = te
    orientation = slerp(q0, target_q, rotation_param)
    return centroid, orientation


def _stage_boundary_eff(movement: ToothMovement, aligners: int, cfg: StagingConfig) -> list[float]:
    return [t_eff(movement.tz, i / aligners, cfg) for i in range(aligners + 1)]


def _per_stage_maxima(
    plan: MovementPlan, aligners: int, cfg: StagingConfig
) -> tuple[list[float], list[float]]:
    """Largest per-tooth displacement and rotation between stage boundaries.

    Rotation is the geodesic angle actually traversed between boundaries:
    SLERP interpolates the relative rotation uniformly, so a stage covers
    (delta t_eff) times the total geodesic angle. For single-axis rotations
    this equals the Euler-norm split used by :func:`aligner_count`.
    """
    max_disp = [0.0] * aligners
    max_rot = [0.0] * aligners
    for _, movement in plan.sorted_items():
        effs = _stage_boundary_eff(movement, aligners, cfg)
        trans_norm = movement.translation_norm()
        theta_deg = math.degrees(
            euler_to_quaternion(EulerAnglesDeg(movement.rx, movement.ry, movement.rz)).rotation_angle()
        )
        xy_norm = math.sqrt(movement.tx**2 + movement.ty**2)
        for i in range(aligners):
            d_eff = effs[i + 1] - effs[i]
            if cfg.defer_vertical_only:
                dt = (i + 1) / aligners - i / aligners
                disp = math.sqrt((dt * xy_norm) ** 2 + (d_eff * movement.tz) ** 2)
                rot = dt * theta_deg
            else:
                disp = d_eff * trans_norm
                rot = d_eff * theta_deg
            if disp > max_disp[i]:
                max_disp[i] = disp
            if rot > max_rot[i]:
                max_rot[i] = rot
    return max_disp, max_rot


def _summary(plan: MovementPlan, cfg: StagingConfig) -> StagingSummary:
    aligners = aligner_count(plan, cfg)
    max_disp, max_rot = _per_stage_maxima(plan, aligners, cfg)
    deferred = [fdi for fdi, m in plan.sorted_items() if m.is_extrusion()]
    return StagingSummary(
        aligner_count=aligners,
        frame_count=aligners * cfg.frames_per_aligner,
        max_stage_displacement_mm=max_disp,
        max_stage_rotation_deg=max_rot,
        deferred_teeth=deferred,
    )


def staging_summary_only(plan: MovementPlan, cfg: StagingConfig = StagingConfig()) -> StagingSummary:
    """Staging summary computed analytically, without materializing frames."""
    return _summary(plan, cfg)


def generate_frames(
    arch: ArchState, plan: MovementPlan, cfg: StagingConfig = StagingConfig()
) -> tuple[list[TreatmentFrame], StagingSummary]:
    """Interpolate F + 1 frames from the scan (t = 0) to the full plan (t = 1).

    Frame poses cover every present tooth; unplanned teeth stay at their scan
    pose. Raises when the plan references a tooth absent from the arch.
    """
    present = arch.present_teeth()
    for fdi in plan.entries:
        if fdi not in present:
            raise DentalModelError(f"planned tooth {fdi} is absent from the arch")

    summary = _summary(plan, cfg)
    total_frames = summary.frame_count

    starts: dict[int, tuple[Vec3, UnitQuaternion]] = {
        fdi: (s.centroid, s.orientation) for fdi, s in sorted(present.items())
    }
    zero = ToothMovement()
    movements = {fdi: plan.entries.get(fdi, zero) for fdi in starts}
    targets = {
        fdi: quaternion_multiply(
            starts[fdi][1],
            euler_to_quaternion(EulerAnglesDeg(m.rx, m.ry, m.rz)),
        )
        for fdi, m in movements.items()
    }

    frames = []
    for index in range(total_frames + 1):
        t = index / total_frames
        poses = {
            fdi: _pose_at(starts[fdi], movements[fdi], targets[fdi], t, cfg)
            for fdi in starts
        }
        frames.append(TreatmentFrame(index=index, t=t, poses=poses))
    return frames, summary
