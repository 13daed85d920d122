"""Preset clinical demo cases, available without any estimator inference.

Each preset is a fixed-seed synthetic case shaped after one of the primary
clinical archetypes in a clear-aligner caseload. Demo responses are built
from the bundled ground truth directly.
"""

from __future__ import annotations

from dataclasses import dataclass

from .benchmark import (
    Archetype,
    CrowdingSeverity,
    GeneratorOptions,
    ScenarioSpec,
    SyntheticCase,
    generate_scenario,
)

__all__ = ["PresetCase", "PRESET_KEYS", "build_preset", "all_presets"]

PRESET_KEYS = ("class1_crowding", "open_bite", "diastema", "class2_div1")


@dataclass(frozen=True)
class PresetCase:
    key: str
    label: str
    case: SyntheticCase


_PRESETS = {
    "class1_crowding": (
        "Class I moderate crowding",
        ScenarioSpec(Archetype.OVOID, CrowdingSeverity.MODERATE, 0, seed=101),
        GeneratorOptions(),
    ),
    "open_bite": (
        "Anterior open bite",
        ScenarioSpec(Archetype.TAPERED, CrowdingSeverity.MILD, 0, seed=202),
        GeneratorOptions(anterior_open_bite=True),
    ),
    "diastema": (
        "Maxillary diastema",
        ScenarioSpec(Archetype.SQUARE, CrowdingSeverity.MILD, 0, seed=303),
        GeneratorOptions(diastema_mm=2.5, vertical_offset_prob=0.0),
    ),
    "class2_div1": (
        "Class II division 1",
        ScenarioSpec(Archetype.NARROW_V, CrowdingSeverity.MODERATE, 0, seed=404),
        GeneratorOptions(incisor_protrusion_mm=2.2, incisor_torque_deg=9.0),
    ),
}
assert tuple(_PRESETS) == PRESET_KEYS


def build_preset(key: str) -> PresetCase:
    """Build one preset case; raises KeyError for unknown keys."""
    label, spec, options = _PRESETS[key]
    return PresetCase(key=key, label=label, case=generate_scenario(spec, options))


def all_presets() -> dict[str, PresetCase]:
    return {key: build_preset(key) for key in PRESET_KEYS}
