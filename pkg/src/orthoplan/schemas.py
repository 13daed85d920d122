"""JSON wire formats for plans, arch states, scores, and frame sequences.

Every document carries a ``schema_version`` field. Field names are part of
the public contract consumed by the CLI, the REST service, and the dashboard:
plans use fdi/tx_mm/ty_mm/tz_mm/rx_deg/ry_deg/rz_deg; tooth states use
centroid/orientation_wxyz/confidence/present.
"""

from __future__ import annotations

import json
from typing import Any

from .dental import (
    Arch,
    ArchState,
    DentalModelError,
    MovementPlan,
    ToothMovement,
    ToothState,
)
from .geometry import UnitQuaternion, Vec3
from .scoring import Finding, Severity, SubScores, TreatmentScore
from .staging import StagingConfig, TreatmentFrame

__all__ = [
    "SCHEMA_VERSION",
    "SchemaError",
    "canonical_json",
    "movement_plan_to_dict",
    "movement_plan_from_dict",
    "arch_state_to_dict",
    "arch_state_from_dict",
    "treatment_score_to_dict",
    "treatment_score_from_dict",
    "frames_to_dict",
]

SCHEMA_VERSION = 1


class SchemaError(ValueError):
    """A document does not match its published schema."""


def canonical_json(obj: Any) -> str:
    """Deterministic serialization: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _require(payload: dict, key: str, context: str):
    if not isinstance(payload, dict):
        raise SchemaError(f"{context}: expected an object, got {type(payload).__name__}")
    if key not in payload:
        raise SchemaError(f"{context}: missing field {key!r}")
    return payload[key]


def _number(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{context}: expected a number, got {value!r}")
    return float(value)


def _vec3(value, context: str) -> Vec3:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise SchemaError(f"{context}: expected [x, y, z]")
    return Vec3(*(_number(v, context) for v in value))


def _quat(value, context: str) -> UnitQuaternion:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise SchemaError(f"{context}: expected [w, x, y, z]")
    try:
        return UnitQuaternion(*(_number(v, context) for v in value))
    except ValueError as exc:
        raise SchemaError(f"{context}: {exc}") from exc


def movement_plan_to_dict(plan: MovementPlan) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "entries": [
            {
                "fdi": fdi,
                "tx_mm": m.tx,
                "ty_mm": m.ty,
                "tz_mm": m.tz,
                "rx_deg": m.rx,
                "ry_deg": m.ry,
                "rz_deg": m.rz,
            }
            for fdi, m in plan.sorted_items()
        ],
    }


def movement_plan_from_dict(payload: dict) -> MovementPlan:
    entries_raw = _require(payload, "entries", "plan")
    if not isinstance(entries_raw, list) or not entries_raw:
        raise SchemaError("plan: entries must be a non-empty list")
    entries: dict[int, ToothMovement] = {}
    for i, item in enumerate(entries_raw):
        ctx = f"plan.entries[{i}]"
        fdi = _require(item, "fdi", ctx)
        if not isinstance(fdi, int) or isinstance(fdi, bool):
            raise SchemaError(f"{ctx}: fdi must be an integer")
        if fdi in entries:
            raise SchemaError(f"{ctx}: duplicate FDI code {fdi}")
        movement = ToothMovement(
            tx=_number(item.get("tx_mm", 0.0), ctx),
            ty=_number(item.get("ty_mm", 0.0), ctx),
            tz=_number(item.get("tz_mm", 0.0), ctx),
            rx=_number(item.get("rx_deg", 0.0), ctx),
            ry=_number(item.get("ry_deg", 0.0), ctx),
            rz=_number(item.get("rz_deg", 0.0), ctx),
        )
        entries[fdi] = movement
    try:
        return MovementPlan(entries)
    except DentalModelError as exc:
        raise SchemaError(f"plan: {exc}") from exc


def _tooth_state_to_dict(state: ToothState) -> dict:
    doc = {
        "fdi": state.fdi,
        "centroid": list(state.centroid.as_tuple()),
        "orientation_wxyz": list(state.orientation.as_wxyz()),
        "confidence": state.confidence,
        "present": state.present,
        "extents": list(state.extents),
    }
    if state.landmarks is not None:
        doc["landmarks"] = {name: list(p.as_tuple()) for name, p in sorted(state.landmarks.items())}
    return doc


def _tooth_state_from_dict(item: dict, ctx: str) -> ToothState:
    fdi = _require(item, "fdi", ctx)
    if not isinstance(fdi, int) or isinstance(fdi, bool):
        raise SchemaError(f"{ctx}: fdi must be an integer")
    present = item.get("present", True)
    if not isinstance(present, bool):
        raise SchemaError(f"{ctx}: present must be a boolean")
    landmarks = None
    if "landmarks" in item and item["landmarks"] is not None:
        raw = item["landmarks"]
        if not isinstance(raw, dict):
            raise SchemaError(f"{ctx}: landmarks must be an object")
        landmarks = {name: _vec3(p, f"{ctx}.landmarks.{name}") for name, p in raw.items()}
    extents = item.get("extents", [0.0, 0.0, 0.0])
    if not isinstance(extents, (list, tuple)) or len(extents) != 3:
        raise SchemaError(f"{ctx}: extents must be [a, b, c]")
    confidence = _number(_require(item, "confidence", ctx), ctx)
    if not 0.0 <= confidence <= 1.0:
        raise SchemaError(f"{ctx}: confidence out of [0, 1]: {confidence}")
    try:
        return ToothState(
            fdi=fdi,
            centroid=_vec3(_require(item, "centroid", ctx), f"{ctx}.centroid"),
            orientation=_quat(_require(item, "orientation_wxyz", ctx), f"{ctx}.orientation_wxyz"),
            confidence=confidence,
            present=present,
            landmarks=landmarks,
            extents=tuple(_number(v, ctx) for v in extents),
        )
    except (DentalModelError, ValueError) as exc:
        raise SchemaError(f"{ctx}: {exc}") from exc


def arch_state_to_dict(arch: ArchState) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "arch": arch.arch.value,
        "teeth": [_tooth_state_to_dict(s) for s in arch.sorted_states()],
    }


def arch_state_from_dict(payload: dict) -> ArchState:
    arch_raw = _require(payload, "arch", "arch")
    try:
        arch = Arch(arch_raw)
    except ValueError as exc:
        raise SchemaError(f"arch: unknown arch {arch_raw!r}") from exc
    teeth_raw = _require(payload, "teeth", "arch")
    if not isinstance(teeth_raw, list):
        raise SchemaError("arch: teeth must be a list")
    teeth = {}
    for i, item in enumerate(teeth_raw):
        state = _tooth_state_from_dict(item, f"arch.teeth[{i}]")
        if state.fdi in teeth:
            raise SchemaError(f"arch.teeth[{i}]: duplicate FDI code {state.fdi}")
        teeth[state.fdi] = state
    try:
        return ArchState(arch, teeth)
    except DentalModelError as exc:
        raise SchemaError(f"arch: {exc}") from exc


def treatment_score_to_dict(score: TreatmentScore) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "sub_scores": score.sub.as_dict(),
        "composite_raw": score.composite_raw,
        "composite": score.composite,
        "grade": score.grade,
        "findings": [
            {
                "severity": f.severity.value,
                "code": f.code,
                "fdi": f.fdi,
                "message": f.message,
                "principle": f.principle,
            }
            for f in score.findings
        ],
        "v1_score": score.v1_score,
    }


def treatment_score_from_dict(payload: dict) -> TreatmentScore:
    subs_raw = _require(payload, "sub_scores", "score")
    sub = SubScores(**{k: _number(_require(subs_raw, k, "score.sub_scores"), "score.sub_scores") for k in
                       ("bio", "staging", "attachments", "ipr", "occlusion", "predictability")})
    findings = []
    for i, item in enumerate(_require(payload, "findings", "score")):
        ctx = f"score.findings[{i}]"
        findings.append(
            Finding(
                severity=Severity(_require(item, "severity", ctx)),
                code=_require(item, "code", ctx),
                message=_require(item, "message", ctx),
                fdi=item.get("fdi"),
                principle=item.get("principle"),
            )
        )
    return TreatmentScore(
        sub=sub,
        composite_raw=_number(_require(payload, "composite_raw", "score"), "score"),
        composite=_number(_require(payload, "composite", "score"), "score"),
        grade=_require(payload, "grade", "score"),
        findings=findings,
        v1_score=_number(_require(payload, "v1_score", "score"), "score"),
    )


def frames_to_dict(frames: list[TreatmentFrame], aligners: int, cfg: StagingConfig) -> dict:
    """Frame-sequence document consumed verbatim by the 4D player."""
    return {
        "schema_version": SCHEMA_VERSION,
        "aligners": aligners,
        "frames_per_aligner": cfg.frames_per_aligner,
        "frames": [
            {
                "index": frame.index,
                "t": frame.t,
                "poses": {
                    str(fdi): {
                        "centroid": list(centroid.as_tuple()),
                        "orientation_wxyz": list(orientation.as_wxyz()),
                    }
                    for fdi, (centroid, orientation) in sorted(frame.poses.items())
                },
            }
            for frame in frames
        ],
    }
