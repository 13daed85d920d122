"""Fusion of the two estimators into one arch state.

Three modes: parallel ensemble (confidence-weighted centroid averaging),
sequential refinement (the geometric agent only backs up low-confidence
teeth), and single-agent fallback. Every run returns a provenance record
stating which agents ran, the per-tooth weights used, and elapsed times.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .agents import AgentOutput, AgentUnavailableError
from .dental import Arch, ArchState, PointCloud, ToothState
from .geometry import slerp

__all__ = [
    "FusionMode",
    "FusionConfig",
    "FusionError",
    "PipelineError",
    "Provenance",
    "fuse_parallel",
    "fuse_sequential",
    "Orchestrator",
]


class FusionError(ValueError):
    """Invalid fusion input or configuration."""


class PipelineError(RuntimeError):
    """No agent could produce an arch state."""


class FusionMode(Enum):
    PARALLEL = "parallel"
    SEQUENTIAL = "sequential"
    AGENT1_ONLY = "agent1"
    AGENT2_ONLY = "agent2"


@dataclass(frozen=True)
class FusionConfig:
    """Fusion weights and thresholds.

    w1 weighs the segmentation agent, w2 the landmark agent; w1 + w2 must
    equal 1. In sequential mode the segmentation agent is consulted only for
    teeth whose landmark confidence falls below ``sequential_threshold`` and
    is then weighted at ``boosted_w1``.
    """

    mode: FusionMode = FusionMode.PARALLEL
    w1: float = 0.4
    w2: float = 0.6
    sequential_threshold: float = 0.5
    boosted_w1: float = 0.8

    def __post_init__(self) -> None:
        if abs(self.w1 + self.w2 - 1.0) > 1e-12:
            raise FusionError(f"fusion weights must sum to 1, got {self.w1} + {self.w2}")
        if not (0.0 <= self.w1 <= 1.0 and 0.0 <= self.boosted_w1 <= 1.0):
            raise FusionError("weights must lie in [0, 1]")
        if not 0.0 <= self.sequential_threshold <= 1.0:
            raise FusionError("sequential threshold must lie in [0, 1]")


@dataclass
class Provenance:
    """What actually happened during one orchestrator run."""

    mode: FusionMode
    agents_run: list[str] = field(default_factory=list)
    per_tooth_weights: dict[int, tuple[float, float]] = field(default_factory=dict)
    elapsed_s: dict[str, float] = field(default_factory=dict)
    degraded_teeth: list[int] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def agent_was_run(self, name: str) -> bool:
        return name in self.agents_run


def _fuse_states(s1: ToothState, s2: ToothState, w1: float, w2: float) -> ToothState:
    """Blend one tooth estimated by both agents.

    Centroid and confidence are convex combinations; orientation follows the
    rotation-space analogue (slerp toward agent 2 by w2); landmarks come from
    agent 2, the only agent that has them.
    """
    centroid = s1.centroid.scaled(w1) + s2.centroid.scaled(w2)
    orientation = slerp(s1.orientation, s2.orientation, w2)
    confidence = w1 * s1.confidence + w2 * s2.confidence
    extents = s2.extents if w2 >= w1 else s1.extents
    return ToothState(
        fdi=s1.fdi,
        centroid=centroid,
        orientation=orientation,
        confidence=confidence,
        present=True,
        landmarks=s2.landmarks,
        extents=extents,
    )


def _scaled_confidence(state: ToothState, weight: float) -> ToothState:
    conf = weight * state.confidence
    return ToothState(
        fdi=state.fdi,
        centroid=state.centroid,
        orientation=state.orientation,
        confidence=conf,
        present=state.present,
        landmarks=state.landmarks if state.present else None,
        extents=state.extents,
    )


def fuse_parallel(
    a1: AgentOutput, a2: AgentOutput, cfg: FusionConfig, provenance: Optional[Provenance] = None
) -> ArchState:
    """Confidence-weighted blend of two full-arch estimates.

    Teeth present in both outputs are fused; teeth present in exactly one
    pass through with their confidence scaled by that agent's weight. Absent
    records from agent 2 are kept for their presence probabilities.
    """
    if a1.arch.arch is not a2.arch.arch:
        raise FusionError(f"arch mismatch: {a1.arch.arch.value} vs {a2.arch.arch.value}")
    present1 = a1.arch.present_teeth()
    present2 = a2.arch.present_teeth()

    fused: dict[int, ToothState] = {}
    for fdi in sorted(set(present1) | set(present2)):
        in1, in2 = fdi in present1, fdi in present2
        if in1 and in2:
            fused[fdi] = _fuse_states(present1[fdi], present2[fdi], cfg.w1, cfg.w2)
            weights = (cfg.w1, cfg.w2)
        elif in1:
            fused[fdi] = _scaled_confidence(present1[fdi], cfg.w1)
            weights = (cfg.w1, 0.0)
        else:
            fused[fdi] = _scaled_confidence(present2[fdi], cfg.w2)
            weights = (0.0, cfg.w2)
        if provenance is not None:
            provenance.per_tooth_weights[fdi] = weights

    # Keep agent 2's absent records: they carry presence probabilities.
    for fdi, state in a2.arch.teeth.items():
        if not state.present and fdi not in fused:
            fused[fdi] = state
    return ArchState(a1.arch.arch, fused)


def fuse_sequential(
    a2: AgentOutput,
    agent1_supplier: Callable[[], AgentOutput],
    cfg: FusionConfig,
    provenance: Optional[Provenance] = None,
) -> ArchState:
    """Refine low-confidence landmark teeth with one geometric-agent pass.

    Teeth at or above the threshold pass through unchanged. If any tooth
    falls below, the supplier is invoked exactly once; low teeth seen by both
    agents are fused at the boosted weight, low teeth agent 2 deemed absent
    are recovered from agent 1 alone (confidence blended with the presence
    probability). A supplier failure keeps agent 2's states, flagged as
    degraded in the provenance.
    """
    low = sorted(
        fdi
        for fdi, conf in a2.per_tooth_confidence.items()
        if conf < cfg.sequential_threshold
    )
    fused = dict(a2.arch.teeth)
    if provenance is not None:
        for fdi, state in a2.arch.teeth.items():
            if state.present:
                provenance.per_tooth_weights[fdi] = (0.0, 1.0)

    if not low:
        return ArchState(a2.arch.arch, fused)

    try:
        a1 = agent1_supplier()
        if provenance is not None:
            provenance.agents_run.append(a1.agent_name or "segmentation")
            provenance.elapsed_s[a1.agent_name or "segmentation"] = a1.elapsed_s
    except AgentUnavailableError as exc:
        if provenance is not None:
            provenance.errors.append(str(exc))
            provenance.degraded_teeth.extend(low)
        return ArchState(a2.arch.arch, fused)

    w1, w2 = cfg.boosted_w1, 1.0 - cfg.boosted_w1
    present1 = a1.arch.present_teeth()
    for fdi in low:
        s2 = a2.arch.teeth.get(fdi)
        if fdi in present1 and s2 is not None and s2.present:
            fused[fdi] = _fuse_states(present1[fdi], s2, w1, w2)
            if provenance is not None:
                provenance.per_tooth_weights[fdi] = (w1, w2)
        elif fdi in present1:
            # Agent 2 saw nothing usable; recover geometry from agent 1 and
            # blend only the confidences.
            s1 = present1[fdi]
            conf = min(1.0, w1 * s1.confidence + w2 * a2.per_tooth_confidence[fdi])
            fused[fdi] = ToothState(
                fdi=fdi,
                centroid=s1.centroid,
                orientation=s1.orientation,
                confidence=conf,
                present=True,
                extents=s1.extents,
            )
            if provenance is not None:
                provenance.per_tooth_weights[fdi] = (w1, w2)
        elif provenance is not None:
            provenance.degraded_teeth.append(fdi)
    return ArchState(a2.arch.arch, fused)


class Orchestrator:
    """Dispatches a cloud through the configured fusion mode.

    Holds no mutable state between runs apart from optional invocation
    counters, so one instance may serve concurrent requests.
    """

    def __init__(self, agent1, agent2, cfg: FusionConfig, counters: Optional[dict] = None):
        self.agent1 = agent1
        self.agent2 = agent2
        self.cfg = cfg
        self.counters = counters if counters is not None else {}

    def _count(self, name: str) -> None:
        self.counters[name] = self.counters.get(name, 0) + 1

    def _run_agent(self, agent, cloud: PointCloud) -> AgentOutput:
        self._count(f"{agent.name}_invocations")
        return agent.infer(cloud)

    def run(self, cloud: PointCloud) -> tuple[ArchState, Provenance]:
        """Produce one fused arch state plus the provenance record."""
        cfg = self.cfg
        prov = Provenance(mode=cfg.mode)
        start = time.perf_counter()

        if cfg.mode is FusionMode.AGENT1_ONLY:
            out = self._run_agent(self.agent1, cloud)
            prov.agents_run.append(out.agent_name)
            prov.elapsed_s[out.agent_name] = out.elapsed_s
            arch = out.arch
        elif cfg.mode is FusionMode.AGENT2_ONLY:
            out = self._run_agent(self.agent2, cloud)
            prov.agents_run.append(out.agent_name)
            prov.elapsed_s[out.agent_name] = out.elapsed_s
            arch = out.arch
        elif cfg.mode is FusionMode.PARALLEL:
            with ThreadPoolExecutor(max_workers=2) as pool:
                f1 = pool.submit(self._run_agent, self.agent1, cloud)
                f2 = pool.submit(self._run_agent, self.agent2, cloud)
                exc1 = exc2 = None
                try:
                    a1 = f1.result()
                except Exception as exc:
                    a1, exc1 = None, exc
                try:
                    a2 = f2.result()
                except Exception as exc:
                    a2, exc2 = None, exc
            if a1 is None and a2 is None:
                raise PipelineError(f"both agents failed: {exc1}; {exc2}")
            if a1 is not None:
                prov.agents_run.append(a1.agent_name)
                prov.elapsed_s[a1.agent_name] = a1.elapsed_s
            if a2 is not None:
                prov.agents_run.append(a2.agent_name)
                prov.elapsed_s[a2.agent_name] = a2.elapsed_s
            if a1 is None:
                prov.errors.append(f"agent1 failed: {exc1}")
                arch = a2.arch
            elif a2 is None:
                prov.errors.append(f"agent2 failed: {exc2}")
                arch = a1.arch
            else:
                arch = fuse_parallel(a1, a2, cfg, prov)
        elif cfg.mode is FusionMode.SEQUENTIAL:
            a2 = self._run_agent(self.agent2, cloud)
            prov.agents_run.append(a2.agent_name)
            prov.elapsed_s[a2.agent_name] = a2.elapsed_s
            arch = fuse_sequential(a2, lambda: self._run_agent(self.agent1, cloud), cfg, prov)
        else:  # pragma: no cover
            raise FusionError(f"unknown mode {cfg.mode}")

        prov.elapsed_s["total"] = time.perf_counter() - start
        return arch, prov
