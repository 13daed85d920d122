"""Composite biomechanical scoring engine.

Six sub-scores are combined with fixed clinical weights, then severity-based
multiplicative penalties shrink the composite for every critical and warning
finding. The legacy scalar score (mean per-axis limit ratio) is kept as a
comparator; it is also the biomechanics sub-score.

All movement evaluation happens on over-engineered movements (x 1.30) to
compensate for aligner material lag and biological response. The sub-score
formulas other than biomechanics are engine conventions, not published
values; their constants live in ``ScoringConfig`` and the config file.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .dental import (
    DEFAULT_ETA,
    ArchState,
    MovementPlan,
    ToothMovement,
    ToothType,
    eta_for,
    limits_for,
    tooth_type,
)
from .staging import StagingConfig, StagingSummary, staging_summary_only

__all__ = [
    "Severity",
    "Finding",
    "SubScores",
    "TreatmentScore",
    "ScoringConfig",
    "CrowdingInfo",
    "FINDING_CODES",
    "OVER_ENGINEERING_FACTOR",
    "COMPOSITE_WEIGHTS",
    "CRITICAL_PENALTY",
    "WARNING_PENALTY",
    "over_engineer",
    "v1_score",
    "evaluate_principles",
    "sub_scores",
    "composite",
    "score_plan",
    "grade_for",
]

OVER_ENGINEERING_FACTOR = 1.3

# Composite weights: bio, staging, attachments, ipr, occlusion, predictability.
COMPOSITE_WEIGHTS = (0.30, 0.20, 0.15, 0.10, 0.10, 0.15)
assert sum(COMPOSITE_WEIGHTS) == 1.0

CRITICAL_PENALTY = 0.85
WARNING_PENALTY = 0.97

GRADE_BANDS = (("A", 90.0), ("B", 75.0), ("C", 60.0), ("D", 40.0))

# Registered machine codes; critical/warning findings must use one of these.
FINDING_CODES = frozenset(
    {
        "EXTRUSION_OVER_LIMIT",
        "EXTRUSION_LOW_PRED",
        "SIMULTANEOUS_DISTALIZATION",
        "AXIS_OVER_LIMIT",
        "PLAN_TOOTH_ABSENT",
    }
)


class Severity(Enum):
    CRITICAL = "critical"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True)
class Finding:
    severity: Severity
    code: str
    message: str
    fdi: Optional[int] = None
    principle: Optional[int] = None

    def __post_init__(self) -> None:
        if self.severity in (Severity.CRITICAL, Severity.WARNING) and self.code not in FINDING_CODES:
            raise ValueError(f"unregistered finding code: {self.code!r}")


@dataclass(frozen=True)
class SubScores:
    bio: float
    staging: float
    attachments: float
    ipr: float
    occlusion: float
    predictability: float

    def __post_init__(self) -> None:
        for name, value in self.as_dict().items():
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"sub-score {name} out of [0, 100]: {value}")

    def as_dict(self) -> dict[str, float]:
        return {
            "bio": self.bio,
            "staging": self.staging,
            "attachments": self.attachments,
            "ipr": self.ipr,
            "occlusion": self.occlusion,
            "predictability": self.predictability,
        }

    def as_tuple(self) -> tuple[float, ...]:
        return (self.bio, self.staging, self.attachments, self.ipr, self.occlusion, self.predictability)


@dataclass(frozen=True)
class TreatmentScore:
    sub: SubScores
    composite_raw: float
    composite: float
    grade: str
    findings: list[Finding]
    v1_score: float

    def count(self, severity: Severity) -> int:
        return sum(1 for f in self.findings if f.severity is severity)


@dataclass(frozen=True)
class CrowdingInfo:
    """Per-contact mesiodistal overlaps (mm) from scenario metadata."""

    contact_overlaps: tuple[float, ...]

    def required_space(self) -> float:
        return sum(max(0.0, o) for o in self.contact_overlaps)


@dataclass(frozen=True)
class ScoringConfig:
    """Engine constants for the non-published sub-score formulas."""

    attachment_rotation_deg: float = 15.0
    attachment_extrusion_mm: float = 0.5
    ipr_per_contact_mm: float = 0.5
    occlusion_norm_mm: float = 2.0
    eta: dict = field(default_factory=lambda: dict(DEFAULT_ETA))
    staging: StagingConfig = StagingConfig()


def over_engineer(m: ToothMovement, factor: float = OVER_ENGINEERING_FACTOR) -> ToothMovement:
    """Scale every movement component by the over-engineering factor."""
    if not m.is_finite():
        raise ValueError("cannot over-engineer a non-finite movement")
    return m.scaled(factor)


def _axis_limits(fdi: int, tz: float) -> tuple[float, ...]:
    lim = limits_for(tooth_type(fdi))
    tz_limit = lim.tz_intrusion_mm if tz >= 0 else lim.tz_extrusion_mm
    return (lim.tx_md_mm, lim.ty_bl_mm, tz_limit, lim.rx_torque_deg, lim.ry_tip_deg, lim.rz_rotation_deg)


def _axis_ratio_score(plan: MovementPlan, factor: float) -> float:
    """Mean of max(0, 1 - |m| / limit) over all (tooth, axis) pairs, 0..100."""
    total = 0.0
    count = 0
    for fdi, movement in plan.sorted_items():
        over = over_engineer(movement, factor)
        limits = _axis_limits(fdi, over.tz)
        for value, limit in zip(over.components(), limits):
            total += max(0.0, 1.0 - abs(value) / limit)
            count += 1
    return 100.0 * total / count


def v1_score(plan: MovementPlan) -> float:
    """Legacy scalar quality score (mean per-axis limit ratio)."""
    return _axis_ratio_score(plan, OVER_ENGINEERING_FACTOR)


def evaluate_principles(
    plan: MovementPlan, arch: Optional[ArchState] = None, factor: float = OVER_ENGINEERING_FACTOR
) -> list[Finding]:
    """Severity findings from the four clinical push-mechanics principles.

    Evaluated on over-engineered movements: extrusion past the limit is
    critical and any extrusion warns (push-only appliances); per-axis limit
    breaches warn (the extrusion axis is covered by its critical rule); three
    or more molars translating together more than 1.5 mm warn once.
    """
    findings: list[Finding] = []
    big_molars: list[int] = []
    present = arch.present_teeth() if arch is not None else None
    for fdi, movement in plan.sorted_items():
        if present is not None and fdi not in present:
            findings.append(
                Finding(
                    Severity.INFO,
                    "PLAN_TOOTH_ABSENT",
                    f"tooth {fdi} is planned but absent from the arch; it was not scored",
                    fdi=fdi,
                )
            )
            continue
        over = over_engineer(movement, factor)
        if over.tz < 0.0:
            magnitude = abs(over.tz)
            if magnitude > limits_for(tooth_type(fdi)).tz_extrusion_mm:
                findings.append(
                    Finding(
                        Severity.CRITICAL,
                        "EXTRUSION_OVER_LIMIT",
                        f"tooth {fdi}: extrusion {magnitude:.2f} mm exceeds the 1.5 mm push-mechanics limit",
                        fdi=fdi,
                        principle=1,
                    )
                )
            findings.append(
                Finding(
                    Severity.WARNING,
                    "EXTRUSION_LOW_PRED",
                    f"tooth {fdi}: extrusion is low-predictability (eta = 0.42)",
                    fdi=fdi,
                    principle=1,
                )
            )
        limits = _axis_limits(fdi, over.tz)
        names = ("tx", "ty", "tz", "rx", "ry", "rz")
        for axis, (value, limit) in enumerate(zip(over.components(), limits)):
            if axis == 2 and over.tz < 0.0:
                continue  # extrusion handled by the critical rule above
            if abs(value) > limit:
                findings.append(
                    Finding(
                        Severity.WARNING,
                        "AXIS_OVER_LIMIT",
                        f"tooth {fdi}: {names[axis]} = {value:.2f} exceeds the {limit:g} limit",
                        fdi=fdi,
                    )
                )
        if tooth_type(fdi) is ToothType.MOLAR and over.translation_norm() > 1.5:
            big_molars.append(fdi)
    if len(big_molars) >= 3:
        findings.append(
            Finding(
                Severity.WARNING,
                "SIMULTANEOUS_DISTALIZATION",
                f"{len(big_molars)} molars move simultaneously more than 1.5 mm "
                f"({', '.join(map(str, big_molars))}): anchorage-loss risk",
                principle=2,
            )
        )
    return findings


def _staging_score(summary: StagingSummary, cfg: StagingConfig) -> float:
    """Fraction of aligner stages meeting both per-stage budgets, 0..100."""
    stages = summary.aligner_count
    ok = sum(
        1
        for disp, rot in zip(summary.max_stage_displacement_mm, summary.max_stage_rotation_deg)
        if disp <= cfg.delta_trans_mm + 1e-9 and rot <= cfg.delta_rot_deg + 1e-9
    )
    return 100.0 * ok / stages


def _attachments_score(plan: MovementPlan, n_teeth: int, cfg: ScoringConfig, factor: float) -> float:
    """Share of arch teeth that can do without attachments, 0..100."""
    need = 0
    for fdi, movement in plan.sorted_items():
        over = over_engineer(movement, factor)
        rounded = tooth_type(fdi) in (ToothType.CANINE, ToothType.PREMOLAR)
        extrusion = abs(over.tz) if over.tz < 0 else 0.0
        if (rounded and abs(over.rz) > cfg.attachment_rotation_deg) or extrusion > cfg.attachment_extrusion_mm:
            need += 1
    return max(0.0, min(100.0, 100.0 * (1.0 - need / max(1, n_teeth))))


def _ipr_score(crowding: Optional[CrowdingInfo], cfg: ScoringConfig) -> float:
    """Interproximal reduction adequacy; plans without crowding data pass."""
    if crowding is None or not crowding.contact_overlaps:
        return 100.0
    required = crowding.required_space()
    if required <= 0.0:
        return 100.0
    available = cfg.ipr_per_contact_mm * len(crowding.contact_overlaps)
    return 100.0 * min(1.0, available / required)


def _occlusion_score(plan: MovementPlan, cfg: ScoringConfig) -> float:
    """Left/right symmetry of planned translation norms, 0..100.

    Mirror teeth share the position digit; a missing side counts as zero
    movement. Mean asymmetry is normalized by ``occlusion_norm_mm``.
    """
    by_pos: dict[int, dict[int, float]] = {}
    for fdi, movement in plan.sorted_items():
        by_pos.setdefault(fdi % 10, {})[fdi // 10] = movement.translation_norm()
    if not by_pos:
        return 100.0
    asyms = []
    for quads in by_pos.values():
        right = quads.get(1, quads.get(4, 0.0))
        left = quads.get(2, quads.get(3, 0.0))
        asyms.append(abs(left - right))
    mean_asym = sum(asyms) / len(asyms)
    return 100.0 * (1.0 - min(1.0, mean_asym / cfg.occlusion_norm_mm))


def _predictability_score(plan: MovementPlan, cfg: ScoringConfig) -> float:
    """Movement-magnitude-weighted mean predictability, 0..100."""
    num = 0.0
    den = 0.0
    for fdi, movement in plan.sorted_items():
        for name, value in zip(("tx", "ty", "tz", "rx", "ry", "rz"), movement.components()):
            eta = eta_for(fdi, name, tz=movement.tz, table=cfg.eta)
            num += abs(value) * eta
            den += abs(value)
    if den == 0.0:
        return 100.0
    return 100.0 * num / den


def sub_scores(
    plan: MovementPlan,
    arch: ArchState,
    staging_summary: StagingSummary,
    crowding: Optional[CrowdingInfo] = None,
    cfg: ScoringConfig = ScoringConfig(),
) -> SubScores:
    """The six category scores for a plan, each in [0, 100]."""
    present = arch.present_teeth()
    scored_entries = {f: m for f, m in plan.entries.items() if f in present}
    if scored_entries:
        scored = MovementPlan(scored_entries)
        bio = _axis_ratio_score(scored, OVER_ENGINEERING_FACTOR)
        att = _attachments_score(scored, len(present), cfg, OVER_ENGINEERING_FACTOR)
        occ = _occlusion_score(scored, cfg)
        pred = _predictability_score(scored, cfg)
    else:
        bio = att = occ = pred = 100.0
    return SubScores(
        bio=bio,
        staging=_staging_score(staging_summary, cfg.staging),
        attachments=att,
        ipr=_ipr_score(crowding, cfg),
        occlusion=occ,
        predictability=pred,
    )


def grade_for(score: float) -> str:
    """Letter grade with closed lower bounds at 90/75/60/40."""
    for letter, floor in GRADE_BANDS:
        if score >= floor:
            return letter
    return "F"


def composite(sub: SubScores, findings: list[Finding], v1: float = 0.0) -> TreatmentScore:
    """Weighted composite with multiplicative severity penalties and a grade."""
    q = sum(w * s for w, s in zip(COMPOSITE_WEIGHTS, sub.as_tuple()))
    n_crit = sum(1 for f in findings if f.severity is Severity.CRITICAL)
    n_warn = sum(1 for f in findings if f.severity is Severity.WARNING)
    q_star = q * (CRITICAL_PENALTY**n_crit) * (WARNING_PENALTY**n_warn)
    return TreatmentScore(
        sub=sub,
        composite_raw=q,
        composite=q_star,
        grade=grade_for(q_star),
        findings=list(findings),
        v1_score=v1,
    )


def score_plan(
    plan: MovementPlan,
    arch: ArchState,
    crowding: Optional[CrowdingInfo] = None,
    cfg: ScoringConfig = ScoringConfig(),
) -> TreatmentScore:
    """Full evaluation: principles, staging summary, sub-scores, penalties.

    Plan entries for teeth absent from the arch are excluded from scoring and
    reported as info findings.
    """
    findings = evaluate_principles(plan, arch)
    present = arch.present_teeth()
    scored_entries = {f: m for f, m in plan.entries.items() if f in present}
    staging_plan = MovementPlan(scored_entries) if scored_entries else None
    if staging_plan is not None:
        summary = staging_summary_only(staging_plan, cfg.staging)
        v1 = _axis_ratio_score(staging_plan, OVER_ENGINEERING_FACTOR)
    else:
        summary = StagingSummary(
            aligner_count=cfg.staging.min_aligners,
            frame_count=cfg.staging.min_aligners * cfg.staging.frames_per_aligner,
            max_stage_displacement_mm=[0.0] * cfg.staging.min_aligners,
            max_stage_rotation_deg=[0.0] * cfg.staging.min_aligners,
        )
        v1 = 100.0
    subs = sub_scores(plan, arch, summary, crowding, cfg)
    return composite(subs, findings, v1)
