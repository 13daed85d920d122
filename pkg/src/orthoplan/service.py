"""REST service: plan scoring, frame simulation, preset demos, and status.

Endpoints:

* ``GET  /api/patients``              patient summaries
* ``POST /api/patients``              create (scores + simulates synchronously)
* ``GET  /api/patients/{id}``         full record
* ``GET  /api/patients/{id}/frames``  stored frame sequence
* ``POST /api/patients/{id}/rescore`` what-if re-score with a new plan
* ``GET  /api/demo?case=...``         preset cases, no estimator inference
* ``GET  /api/training/status``       pipeline descriptor plus counters

Demo presets are materialized once at startup; serving them never invokes an
estimator, which the status counters make observable.
"""

from __future__ import annotations

import hashlib
import re
import time
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .config import AppConfig, load_config
from .dental import ArchState, MovementPlan, ToothType, limits_for
from .orchestrator import PipelineError
from .presets import PRESET_KEYS, all_presets
from .schemas import (
    SchemaError,
    arch_state_from_dict,
    arch_state_to_dict,
    canonical_json,
    frames_to_dict,
    movement_plan_from_dict,
    movement_plan_to_dict,
    treatment_score_to_dict,
)
from .scoring import CrowdingInfo, score_plan
from .staging import generate_frames
from .store import PatientStore, StoreConflict

__all__ = ["create_app"]


# Patient ids become store keys and frame file names; keep them tame.
_ID_PATTERN = re.compile(r"[A-Za-z0-9_-]{1,64}")


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "detail": detail}})


def _content_hash(arch_doc: dict, plan_doc: dict, score_doc: dict) -> str:
    blob = canonical_json({"arch": arch_doc, "plan": plan_doc, "score": score_doc})
    return hashlib.sha256(blob.encode()).hexdigest()


def _summary(doc: dict) -> dict:
    return {
        "id": doc["id"],
        "label": doc["label"],
        "version": doc["version"],
        "grade": doc["score"]["grade"],
        "composite": doc["score"]["composite"],
        "created_at": doc["created_at"],
        "updated_at": doc["updated_at"],
        "content_hash": doc["content_hash"],
    }


def create_app(config: Optional[AppConfig] = None, data_dir: Optional[str] = None) -> FastAPI:
    config = config or load_config()
    store = PatientStore(data_dir or config.service.data_dir)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        load_presets()
        yield

    app = FastAPI(title="orthoplan", version=__version__, lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[config.service.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    state = {
        "started_at": time.time(),
        "counters": {"agent_invocations": 0, "demo_requests": 0, "rescores": 0},
        "presets": {},
    }
    app.state.pipeline = state

    def evaluate(arch: ArchState, plan: MovementPlan, crowding: Optional[CrowdingInfo]):
        score = score_plan(plan, arch, crowding, config.scoring)
        present = arch.present_teeth()
        frame_plan = MovementPlan({f: m for f, m in plan.entries.items() if f in present}) if any(
            f in present for f in plan.entries
        ) else None
        if frame_plan is not None:
            frames, summary = generate_frames(arch, frame_plan, config.staging)
            frames_doc = frames_to_dict(frames, summary.aligner_count, config.staging)
        else:
            frames_doc = frames_to_dict([], 0, config.staging)
        return score, frames_doc

    def persist_record(
        patient_id: str,
        label: str,
        arch_doc: dict,
        plan_doc: dict,
        crowding: Optional[list],
        *,
        upsert: bool = False,
    ) -> dict:
        arch = arch_state_from_dict(arch_doc)
        plan = movement_plan_from_dict(plan_doc)
        crowding_info = CrowdingInfo(tuple(crowding)) if crowding else None
        score, frames_doc = evaluate(arch, plan, crowding_info)
        score_doc = treatment_score_to_dict(score)
        now = _now_iso()
        doc = {
            "schema_version": 1,
            "id": patient_id,
            "label": label,
            "arch": arch_state_to_dict(arch),
            "plan": movement_plan_to_dict(plan),
            "score": score_doc,
            "crowding": list(crowding) if crowding else None,
            "frames_ref": {
                "aligners": frames_doc["aligners"],
                "frame_count": max(0, len(frames_doc["frames"]) - 1),
                "url": f"/api/patients/{patient_id}/frames",
            },
            "content_hash": _content_hash(arch_state_to_dict(arch), movement_plan_to_dict(plan), score_doc),
            "created_at": now,
            "updated_at": now,
        }
        stored = store.upsert(doc) if upsert else store.create(doc)
        store.save_frames(patient_id, frames_doc)
        return stored

    @app.exception_handler(SchemaError)
    async def schema_error_handler(request: Request, exc: SchemaError):
        return _error(422, "schema_violation", str(exc))

    @app.exception_handler(StoreConflict)
    async def conflict_handler(request: Request, exc: StoreConflict):
        return _error(409, "conflict", str(exc))

    @app.exception_handler(PipelineError)
    async def pipeline_error_handler(request: Request, exc: PipelineError):
        return _error(500, "pipeline_error", str(exc))

    def load_presets() -> None:
        for key, preset in all_presets().items():
            case = preset.case
            arch_doc = arch_state_to_dict(case.ground_truth)
            plan_doc = movement_plan_to_dict(case.target_plan)
            doc = persist_record(
                f"demo-{key}",
                preset.label,
                arch_doc,
                plan_doc,
                list(case.crowding.contact_overlaps),
                upsert=True,
            )
            state["presets"][key] = doc["id"]

    @app.get("/api/patients")
    def list_patients():
        return {"schema_version": 1, "patients": [_summary(d) for d in store.all_records()]}

    @app.post("/api/patients", status_code=201)
    def create_patient(payload: dict):
        label = payload.get("label", "unnamed plan")
        if not isinstance(label, str):
            raise SchemaError("label must be a string")
        arch_doc = payload.get("arch")
        plan_doc = payload.get("plan")
        if arch_doc is None or plan_doc is None:
            raise SchemaError("payload requires 'arch' and 'plan'")
        crowding = payload.get("crowding")
        if crowding is not None and (
            not isinstance(crowding, list) or not all(isinstance(x, (int, float)) for x in crowding)
        ):
            raise SchemaError("crowding must be a list of numbers")
        patient_id = payload.get("id") or uuid.uuid4().hex[:12]
        if not isinstance(patient_id, str) or not _ID_PATTERN.fullmatch(patient_id):
            raise SchemaError("id must match [A-Za-z0-9_-]{1,64}")
        return persist_record(patient_id, label, arch_doc, plan_doc, crowding)

    @app.get("/api/patients/{patient_id}")
    def get_patient(patient_id: str):
        doc = store.get(patient_id)
        if doc is None:
            return _error(404, "not_found", f"unknown patient {patient_id}")
        return doc

    @app.get("/api/patients/{patient_id}/frames")
    def get_frames(patient_id: str):
        frames = store.load_frames(patient_id)
        if frames is None:
            return _error(404, "not_found", f"no frames for patient {patient_id}")
        return frames

    @app.post("/api/patients/{patient_id}/rescore")
    def rescore(patient_id: str, payload: dict):
        doc = store.get(patient_id)
        if doc is None:
            return _error(404, "not_found", f"unknown patient {patient_id}")
        expected_version = payload.get("version")
        if expected_version is not None and expected_version != doc["version"]:
            raise StoreConflict(
                f"version mismatch for {patient_id}: expected {expected_version}, stored {doc['version']}"
            )
        plan_doc = payload.get("plan")
        if plan_doc is None:
            raise SchemaError("payload requires 'plan'")
        plan = movement_plan_from_dict(plan_doc)
        new_plan_doc = movement_plan_to_dict(plan)
        state["counters"]["rescores"] += 1

        arch = arch_state_from_dict(doc["arch"])
        crowding = CrowdingInfo(tuple(doc["crowding"])) if doc.get("crowding") else None

        if canonical_json(new_plan_doc) == canonical_json(doc["plan"]):
            # Idempotent: identical plan changes nothing, bumps nothing.
            frames_doc = store.load_frames(patient_id)
            return {
                "schema_version": 1,
                "id": patient_id,
                "version": doc["version"],
                "content_hash": doc["content_hash"],
                "score": doc["score"],
                "frames": frames_doc,
            }

        score, frames_doc = evaluate(arch, plan, crowding)
        score_doc = treatment_score_to_dict(score)
        updated = store.update(
            patient_id,
            {
                "plan": new_plan_doc,
                "score": score_doc,
                "content_hash": _content_hash(doc["arch"], new_plan_doc, score_doc),
                "updated_at": _now_iso(),
                "frames_ref": {
                    "aligners": frames_doc["aligners"],
                    "frame_count": max(0, len(frames_doc["frames"]) - 1),
                    "url": f"/api/patients/{patient_id}/frames",
                },
            },
            expected_version,
        )
        store.save_frames(patient_id, frames_doc)
        return {
            "schema_version": 1,
            "id": patient_id,
            "version": updated["version"],
            "content_hash": updated["content_hash"],
            "score": score_doc,
            "frames": frames_doc,
        }

    @app.get("/api/demo")
    def demo(case: str = Query(...)):
        state["counters"]["demo_requests"] += 1
        if case not in PRESET_KEYS:
            return _error(404, "not_found", f"unknown preset {case!r}; choose one of {list(PRESET_KEYS)}")
        patient_id = state["presets"].get(case)
        doc = store.get(patient_id) if patient_id else None
        if doc is None:
            return _error(500, "preset_unavailable", f"preset {case} was not materialized")
        return doc

    @app.get("/api/training/status")
    def training_status():
        # No training happens in this artifact; this reports the live
        # pipeline configuration and invocation counters instead. The
        # movement-limit table rides along so clients can validate edits
        # before posting a rescore.
        return {
            "schema_version": 1,
            "service": "orthoplan",
            "version": __version__,
            "training": "static (no training in this artifact)",
            "pipeline": {
                "mode": config.fusion.mode.value,
                "w1": config.fusion.w1,
                "w2": config.fusion.w2,
                "threshold": config.fusion.sequential_threshold,
                "boosted_w1": config.fusion.boosted_w1,
            },
            "limits": {
                t.value: {
                    "tx_mm": lim.tx_md_mm,
                    "ty_mm": lim.ty_bl_mm,
                    "tz_intrusion_mm": lim.tz_intrusion_mm,
                    "tz_extrusion_mm": lim.tz_extrusion_mm,
                    "rx_deg": lim.rx_torque_deg,
                    "ry_deg": lim.ry_tip_deg,
                    "rz_deg": lim.rz_rotation_deg,
                }
                for t, lim in ((t, limits_for(t)) for t in ToothType)
            },
            "counters": dict(state["counters"]),
            "presets_loaded": sorted(state["presets"]),
            "uptime_s": time.time() - state["started_at"],
        }

    return app
