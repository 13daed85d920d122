"""TOML configuration loading with environment-variable overrides.

The config file (default ``orthoplan.toml``) tunes the orchestrator weights,
staging budgets, scoring constants (including the predictability table), the
benchmark noise dial, and service settings. ``ORTHOPLAN_CONFIG`` points at an
alternative file; ``ORTHOPLAN_DATA_DIR`` overrides the service data
directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .benchmark import BenchmarkConfig
from .dental import DEFAULT_ETA
from .orchestrator import FusionConfig, FusionMode
from .scoring import ScoringConfig
from .staging import StagingConfig

__all__ = ["ServiceConfig", "AppConfig", "load_config", "CONFIG_ENV_VAR", "DATA_DIR_ENV_VAR"]

CONFIG_ENV_VAR = "ORTHOPLAN_CONFIG"
DATA_DIR_ENV_VAR = "ORTHOPLAN_DATA_DIR"
DEFAULT_CONFIG_NAME = "orthoplan.toml"


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8080
    host: str = "127.0.0.1"
    data_dir: str = "./orthoplan-data"
    cors_origin: str = "*"


@dataclass(frozen=True)
class AppConfig:
    fusion: FusionConfig = FusionConfig()
    staging: StagingConfig = StagingConfig()
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    benchmark: BenchmarkConfig = BenchmarkConfig()
    service: ServiceConfig = ServiceConfig()


def _fusion_from(table: dict) -> FusionConfig:
    mode = FusionMode(table.get("mode", "parallel"))
    return FusionConfig(
        mode=mode,
        w1=float(table.get("w1", 0.4)),
        w2=float(table.get("w2", 0.6)),
        sequential_threshold=float(table.get("threshold", 0.5)),
        boosted_w1=float(table.get("boosted_w1", 0.8)),
    )


def _staging_from(table: dict) -> StagingConfig:
    return StagingConfig(
        delta_trans_mm=float(table.get("delta_trans_mm", 0.25)),
        delta_rot_deg=float(table.get("delta_rot_deg", 2.0)),
        frames_per_aligner=int(table.get("frames_per_aligner", 3)),
        min_aligners=int(table.get("min_aligners", 20)),
        extrusion_start=float(table.get("extrusion_start", 0.6)),
        over_engineer_staging=bool(table.get("over_engineer_staging", False)),
        defer_vertical_only=bool(table.get("defer_vertical_only", False)),
    )


def _scoring_from(table: dict, staging: StagingConfig) -> ScoringConfig:
    eta = dict(DEFAULT_ETA)
    eta.update({k: float(v) for k, v in table.get("eta", {}).items() if k in eta})
    return ScoringConfig(
        attachment_rotation_deg=float(table.get("attachment_rotation_deg", 15.0)),
        attachment_extrusion_mm=float(table.get("attachment_extrusion_mm", 0.5)),
        ipr_per_contact_mm=float(table.get("ipr_per_contact_mm", 0.5)),
        occlusion_norm_mm=float(table.get("occlusion_norm_mm", 2.0)),
        eta=eta,
        staging=staging,
    )


def _benchmark_from(table: dict) -> BenchmarkConfig:
    return BenchmarkConfig(
        heatmap_noise=float(table.get("heatmap_noise", 0.05)),
        presence_noise=float(table.get("presence_noise", 0.3)),
        flip_prob=float(table.get("flip_prob", 0.02)),
        sigma_mm=float(table.get("sigma_mm", 1.5)),
        workers=int(table.get("workers", 1)),
        per_scenario_rows=bool(table.get("per_scenario_rows", True)),
    )


def _service_from(table: dict) -> ServiceConfig:
    return ServiceConfig(
        port=int(table.get("port", 8080)),
        host=str(table.get("host", "127.0.0.1")),
        data_dir=str(table.get("data_dir", "./orthoplan-data")),
        cors_origin=str(table.get("cors_origin", "*")),
    )


def load_config(path: Optional[str] = None) -> AppConfig:
    """Load configuration, falling back to defaults for anything unset.

    Resolution order for the file: explicit argument, ``ORTHOPLAN_CONFIG``,
    ``./orthoplan.toml`` if it exists, otherwise pure defaults.
    """
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path is None and Path(DEFAULT_CONFIG_NAME).is_file():
        path = DEFAULT_CONFIG_NAME

    raw: dict = {}
    if path is not None:
        with open(path, "rb") as f:
            raw = tomllib.load(f)

    staging = _staging_from(raw.get("staging", {}))
    service = _service_from(raw.get("service", {}))
    if os.environ.get(DATA_DIR_ENV_VAR):
        service = ServiceConfig(
            port=service.port,
            host=service.host,
            data_dir=os.environ[DATA_DIR_ENV_VAR],
            cors_origin=service.cors_origin,
        )
    return AppConfig(
        fusion=_fusion_from(raw.get("orchestrator", {})),
        staging=staging,
        scoring=_scoring_from(raw.get("scoring", {}), staging),
        benchmark=_benchmark_from(raw.get("benchmark", {})),
        service=service,
    )
