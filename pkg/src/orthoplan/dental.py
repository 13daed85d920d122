"""Dental domain vocabulary: FDI identity, tooth types, biomechanical limits,
arch scans, tooth states, and movement plans.

Sign conventions: tz > 0 is intrusion, tz < 0 is extrusion; rx = torque,
ry = tip, rz = rotation (degrees). Translations are world-frame displacement
vectors in mm with z vertical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .geometry import UnitQuaternion, Vec3

__all__ = [
    "DentalModelError",
    "Arch",
    "ToothType",
    "MovementLimits",
    "ToothMovement",
    "MovementPlan",
    "PointCloud",
    "ToothState",
    "ArchState",
    "ALL_FDI_CODES",
    "ARCH_SEQUENCE",
    "LANDMARK_GROUPS",
    "TEETH_PER_ARCH",
    "LANDMARKS_PER_TOOTH",
    "valid_fdi",
    "require_fdi",
    "arch_of",
    "tooth_type",
    "limits_for",
    "eta_for",
    "DEFAULT_ETA",
    "validate_plan",
]


class DentalModelError(ValueError):
    """Invalid dental-domain value."""


class Arch(Enum):
    UPPER = "upper"
    LOWER = "lower"


class ToothType(Enum):
    INCISOR = "incisor"
    CANINE = "canine"
    PREMOLAR = "premolar"
    MOLAR = "molar"


TEETH_PER_ARCH = 16
LANDMARKS_PER_TOOTH = 5
LANDMARK_GROUPS = ("mesial", "distal", "buccal", "lingual", "occlusal")

ALL_FDI_CODES = tuple(q * 10 + p for q in (1, 2, 3, 4) for p in range(1, 9))

# Tooth slots 1..16 within one arch, ordered along the arch from the
# patient's right to left. Slot indices drive heatmap channel layout.
ARCH_SEQUENCE = {
    Arch.UPPER: (18, 17, 16, 15, 14, 13, 12, 11, 21, 22, 23, 24, 25, 26, 27, 28),
    Arch.LOWER: (48, 47, 46, 45, 44, 43, 42, 41, 31, 32, 33, 34, 35, 36, 37, 38),
}


def valid_fdi(code: int) -> bool:
    return isinstance(code, int) and code // 10 in (1, 2, 3, 4) and 1 <= code % 10 <= 8


def require_fdi(code: int) -> int:
    if not valid_fdi(code):
        raise DentalModelError(f"invalid FDI code: {code!r}")
    return code


def arch_of(fdi: int) -> Arch:
    require_fdi(fdi)
    return Arch.UPPER if fdi // 10 in (1, 2) else Arch.LOWER


def tooth_type(fdi: int) -> ToothType:
    """Classify a tooth by its FDI position digit."""
    require_fdi(fdi)
    pos = fdi % 10
    if pos <= 2:
        return ToothType.INCISOR
    if pos == 3:
        return ToothType.CANINE
    if pos <= 5:
        return ToothType.PREMOLAR
    return ToothType.MOLAR


@dataclass(frozen=True)
class MovementLimits:
    """Per-tooth-type biomechanical movement limits.

    Translations in mm, rotations in degrees; eta values are clinical
    predictability fractions for the vertical movements.
    """

    tx_md_mm: float
    ty_bl_mm: float
    tz_intrusion_mm: float
    tz_extrusion_mm: float
    rx_torque_deg: float
    ry_tip_deg: float
    rz_rotation_deg: float
    eta_intrusion: float
    eta_extrusion: float


# Published clinical limits; the vertical rows are shared across all types.
_LIMITS = {
    ToothType.INCISOR: MovementLimits(4.0, 2.5, 2.0, 1.5, 15.0, 10.0, 45.0, 0.69, 0.42),
    ToothType.CANINE: MovementLimits(3.5, 2.5, 2.0, 1.5, 12.0, 10.0, 40.0, 0.69, 0.42),
    ToothType.PREMOLAR: MovementLimits(3.5, 3.0, 2.0, 1.5, 10.0, 10.0, 35.0, 0.69, 0.42),
    ToothType.MOLAR: MovementLimits(2.0, 2.5, 2.0, 1.5, 8.0, 8.0, 20.0, 0.69, 0.42),
}


def limits_for(t: ToothType) -> MovementLimits:
    """Movement limits for a tooth type."""
    return _LIMITS[t]


# Predictability (eta) per movement category. The vertical values are
# published; the rest are engine defaults, overridable via the config file.
DEFAULT_ETA = {
    "translation_md": 0.85,
    "translation_bl": 0.85,
    "intrusion": 0.69,
    "extrusion": 0.42,
    "torque": 0.50,
    "tip": 0.75,
    "rotation": 0.55,
    "rotation_rounded": 0.45,  # canine/premolar: rounded crowns grip worse
}


def eta_for(fdi: int, component: str, tz: float = 0.0, table: Optional[dict] = None) -> float:
    """Predictability fraction for one movement component of one tooth."""
    t = table if table is not None else DEFAULT_ETA
    if component == "tx":
        return t["translation_md"]
    if component == "ty":
        return t["translation_bl"]
    if component == "tz":
        return t["intrusion"] if tz >= 0 else t["extrusion"]
    if component == "rx":
        return t["torque"]
    if component == "ry":
        return t["tip"]
    if component == "rz":
        if tooth_type(fdi) in (ToothType.CANINE, ToothType.PREMOLAR):
            return t["rotation_rounded"]
        return t["rotation"]
    raise DentalModelError(f"unknown movement component: {component!r}")


@dataclass(frozen=True)
class ToothMovement:
    """Signed 6-DoF movement: translations in mm, rotations in degrees."""

    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0
    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0

    def components(self) -> tuple[float, float, float, float, float, float]:
        return (self.tx, self.ty, self.tz, self.rx, self.ry, self.rz)

    def is_finite(self) -> bool:
        return all(math.isfinite(c) for c in self.components())

    def scaled(self, factor: float) -> "ToothMovement":
        return ToothMovement(*(c * factor for c in self.components()))

    def translation_norm(self) -> float:
        return math.sqrt(self.tx * self.tx + self.ty * self.ty + self.tz * self.tz)

    def rotation_norm(self) -> float:
        return math.sqrt(self.rx * self.rx + self.ry * self.ry + self.rz * self.rz)

    def is_extrusion(self) -> bool:
        return self.tz < 0.0

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.components())


@dataclass(frozen=True)
class MovementPlan:
    """Target movement per tooth, keyed by FDI code."""

    entries: dict[int, ToothMovement]

    def __post_init__(self) -> None:
        if not self.entries:
            raise DentalModelError("movement plan must contain at least one entry")
        for fdi in self.entries:
            require_fdi(fdi)

    def sorted_items(self) -> list[tuple[int, ToothMovement]]:
        return sorted(self.entries.items())


class PointCloud:
    """Arch scan as raw points, optionally with per-point FDI labels.

    Labels are available for synthetic data only; label 0 marks gingiva or
    unassigned points.
    """

    def __init__(self, points: np.ndarray, labels: Optional[np.ndarray] = None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise DentalModelError(f"point cloud must be (n >= 1, 3), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DentalModelError("point cloud contains non-finite coordinates")
        self.points = pts
        if labels is not None:
            labels = np.asarray(labels, dtype=int)
            if labels.shape != (pts.shape[0],):
                raise DentalModelError("labels must match point count")
        self.labels = labels

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def centroid(self) -> Vec3:
        return Vec3.from_array(self.points.mean(axis=0))

    def bounding_box_max_extent(self) -> float:
        """Longest bounding-box edge (mm)."""
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(span.max())


@dataclass(frozen=True)
class ToothState:
    """Geometric estimate of a single tooth.

    ``confidence`` carries the presence probability for absent teeth, so
    presence-gated estimators can round-trip their output losslessly.
    ``extents`` are PCA standard deviations used for ellipsoid rendering.
    """

    fdi: int
    centroid: Vec3
    orientation: UnitQuaternion
    confidence: float
    present: bool = True
    landmarks: Optional[dict[str, Vec3]] = None
    extents: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        require_fdi(self.fdi)
        if not 0.0 <= self.confidence <= 1.0:
            raise DentalModelError(f"confidence out of range: {self.confidence}")
        if self.landmarks is not None:
            if not self.present:
                raise DentalModelError("landmarks only allowed on present teeth")
            if len(self.landmarks) > LANDMARKS_PER_TOOTH:
                raise DentalModelError("at most 5 landmarks per tooth")
            for name in self.landmarks:
                if name not in LANDMARK_GROUPS:
                    raise DentalModelError(f"unknown landmark group: {name!r}")


@dataclass(frozen=True)
class ArchState:
    """All estimated tooth states of one arch."""

    arch: Arch
    teeth: dict[int, ToothState] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.teeth) > TEETH_PER_ARCH:
            raise DentalModelError("an arch holds at most 16 teeth")
        for fdi, state in self.teeth.items():
            if arch_of(fdi) is not self.arch:
                raise DentalModelError(f"FDI {fdi} does not belong to the {self.arch.value} arch")
            if state.fdi != fdi:
                raise DentalModelError(f"tooth state keyed {fdi} carries fdi {state.fdi}")

    def present_teeth(self) -> dict[int, ToothState]:
        return {fdi: s for fdi, s in self.teeth.items() if s.present}

    def sorted_states(self) -> list[ToothState]:
        return [self.teeth[f] for f in sorted(self.teeth)]


def validate_plan(plan: MovementPlan, arch: ArchState) -> list[str]:
    """Consistency notes for a plan against an arch; empty means valid."""
    notes = []
    present = arch.present_teeth()
    for fdi, movement in plan.sorted_items():
        if fdi not in present:
            notes.append(f"plan references absent tooth {fdi}")
        if not movement.is_finite():
            notes.append(f"non-finite movement for tooth {fdi}")
    return notes
