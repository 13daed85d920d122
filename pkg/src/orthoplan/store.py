"""Embedded single-file document store for patient records.

Records are appended to a JSON-lines file as full snapshots; the latest
snapshot per id wins on load. Writes are serialized by a process-wide lock
and guarded by optimistic version checks. Frame sequences live in sidecar
files next to the record log.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Optional

__all__ = ["StoreConflict", "PatientStore"]


class StoreConflict(RuntimeError):
    """Optimistic version check failed or id already exists."""


class PatientStore:
    def __init__(self, data_dir):
        self.root = Path(data_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.log_path = self.root / "patients.jsonl"
        self.frames_dir = self.root / "frames"
        self.frames_dir.mkdir(exist_ok=True)
        self._lock = threading.Lock()
        self._records: dict[str, dict] = {}
        self._load()

    def _load(self) -> None:
        if not self.log_path.is_file():
            return
        with open(self.log_path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                self._records[doc["id"]] = doc

    def _append(self, doc: dict) -> None:
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(doc, sort_keys=True) + "\n")
            f.flush()

    def list_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._records)

    def get(self, patient_id: str) -> Optional[dict]:
        with self._lock:
            doc = self._records.get(patient_id)
            return json.loads(json.dumps(doc)) if doc is not None else None

    def all_records(self) -> list[dict]:
        with self._lock:
            return [json.loads(json.dumps(d)) for _, d in sorted(self._records.items())]

    def create(self, doc: dict) -> dict:
        with self._lock:
            if doc["id"] in self._records:
                raise StoreConflict(f"patient {doc['id']} already exists")
            doc = dict(doc, version=1)
            self._records[doc["id"]] = doc
            self._append(doc)
            return json.loads(json.dumps(doc))

    def upsert(self, doc: dict) -> dict:
        """Create or replace without a version check (used by demo presets)."""
        with self._lock:
            current = self._records.get(doc["id"])
            doc = dict(doc, version=(current["version"] if current else 1))
            self._records[doc["id"]] = doc
            self._append(doc)
            return json.loads(json.dumps(doc))

    def update(self, patient_id: str, changes: dict, expected_version: Optional[int] = None) -> dict:
        with self._lock:
            current = self._records.get(patient_id)
            if current is None:
                raise KeyError(patient_id)
            if expected_version is not None and expected_version != current["version"]:
                raise StoreConflict(
                    f"version mismatch for {patient_id}: expected {expected_version}, "
                    f"stored {current['version']}"
                )
            doc = dict(current, **changes, version=current["version"] + 1)
            self._records[patient_id] = doc
            self._append(doc)
            return json.loads(json.dumps(doc))

    def save_frames(self, patient_id: str, frames_doc: dict) -> None:
        path = self.frames_dir / f"{patient_id}.json"
        with open(path, "w", encoding="utf-8") as f:
            json.dump(frames_doc, f, sort_keys=True)

    def load_frames(self, patient_id: str) -> Optional[dict]:
        path = self.frames_dir / f"{patient_id}.json"
        if not path.is_file():
            return None
        with open(path, encoding="utf-8") as f:
            return json.load(f)
