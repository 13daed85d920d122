/** View models for the radial gauge and the six sub-score bars. */

import type { SubScoresDoc, TreatmentScoreDoc } from "./types.js";

export interface ScoreBar {
  key: keyof SubScoresDoc;
  label: string;
  value: number;
  pct: number;
}

const BAR_ORDER: Array<[keyof SubScoresDoc, string]> = [
  ["bio", "Biomechanics"],
  ["staging", "Staging"],
  ["attachments", "Attachments"],
  ["ipr", "IPR"],
  ["occlusion", "Occlusion"],
  ["predictability", "Predictability"],
];

export function scoreBars(sub: SubScoresDoc): ScoreBar[] {
  return BAR_ORDER.map(([key, label]) => ({
    key,
    label,
    value: sub[key],
    pct: Math.max(0, Math.min(100, sub[key])),
  }));
}

export interface GaugeView {
  composite: number;
  compositeRaw: number;
  grade: string;
  /** Needle sweep over a 270-degree dial. */
  angleDeg: number;
  color: string;
}

const GRADE_COLORS: Record<string, string> = {
  A: "#2e9e5b",
  B: "#7cb342",
  C: "#f0ad2d",
  D: "#ef7d2e",
  F: "#d64545",
};

export function gaugeView(score: TreatmentScoreDoc): GaugeView {
  const clamped = Math.max(0, Math.min(100, score.composite));
  return {
    composite: score.composite,
    compositeRaw: score.composite_raw,
    grade: score.grade,
    angleDeg: (clamped / 100) * 270,
    color: GRADE_COLORS[score.grade] ?? "#888888",
  };
}
