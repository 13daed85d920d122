/** TypeScript mirrors of the orthoplan service JSON schemas (schema_version 1). */

export type Vec3Tuple = [number, number, number];
export type QuatTuple = [number, number, number, number]; // w, x, y, z

export type MovementAxis = "tx_mm" | "ty_mm" | "tz_mm" | "rx_deg" | "ry_deg" | "rz_deg";

export const MOVEMENT_AXES: MovementAxis[] = [
  "tx_mm",
  "ty_mm",
  "tz_mm",
  "rx_deg",
  "ry_deg",
  "rz_deg",
];

export interface MovementEntry {
  fdi: number;
  tx_mm: number;
  ty_mm: number;
  tz_mm: number;
  rx_deg: number;
  ry_deg: number;
  rz_deg: number;
}

export interface MovementPlanDoc {
  schema_version: number;
  entries: MovementEntry[];
}

export interface ToothStateDoc {
  fdi: number;
  centroid: Vec3Tuple;
  orientation_wxyz: QuatTuple;
  confidence: number;
  present: boolean;
  extents: Vec3Tuple;
  landmarks?: Record<string, Vec3Tuple>;
}

export interface ArchStateDoc {
  schema_version: number;
  arch: "upper" | "lower";
  teeth: ToothStateDoc[];
}

export type Severity = "critical" | "warning" | "info";

export interface FindingDoc {
  severity: Severity;
  code: string;
  fdi: number | null;
  message: string;
  principle: number | null;
}

export interface SubScoresDoc {
  bio: number;
  staging: number;
  attachments: number;
  ipr: number;
  occlusion: number;
  predictability: number;
}

export interface TreatmentScoreDoc {
  schema_version: number;
  sub_scores: SubScoresDoc;
  composite_raw: number;
  composite: number;
  grade: string;
  findings: FindingDoc[];
  v1_score: number;
}

export interface FramePoseDoc {
  centroid: Vec3Tuple;
  orientation_wxyz: QuatTuple;
}

export interface FrameDoc {
  index: number;
  t: number;
  poses: Record<string, FramePoseDoc>;
}

export interface FrameSequenceDoc {
  schema_version: number;
  aligners: number;
  frames_per_aligner: number;
  frames: FrameDoc[];
}

export interface FramesRef {
  aligners: number;
  frame_count: number;
  url: string;
}

export interface PatientRecordDoc {
  schema_version: number;
  id: string;
  label: string;
  version: number;
  arch: ArchStateDoc;
  plan: MovementPlanDoc;
  score: TreatmentScoreDoc;
  crowding: number[] | null;
  frames_ref: FramesRef;
  content_hash: string;
  created_at: string;
  updated_at: string;
}

export interface PatientSummaryDoc {
  id: string;
  label: string;
  version: number;
  grade: string;
  composite: number;
  created_at: string;
  updated_at: string;
  content_hash: string;
}

export interface RescoreResponseDoc {
  schema_version: number;
  id: string;
  version: number;
  content_hash: string;
  score: TreatmentScoreDoc;
  frames: FrameSequenceDoc;
}

export type ToothTypeName = "incisor" | "canine" | "premolar" | "molar";

export interface ToothLimitsDoc {
  tx_mm: number;
  ty_mm: number;
  tz_intrusion_mm: number;
  tz_extrusion_mm: number;
  rx_deg: number;
  ry_deg: number;
  rz_deg: number;
}

export type LimitsDoc = Record<ToothTypeName, ToothLimitsDoc>;

export interface StatusDoc {
  schema_version: number;
  service: string;
  version: string;
  training: string;
  pipeline: {
    mode: string;
    w1: number;
    w2: number;
    threshold: number;
    boosted_w1: number;
  };
  limits: LimitsDoc;
  counters: Record<string, number>;
  presets_loaded: string[];
  uptime_s: number;
}

export type PresetKey = "class1_crowding" | "open_bite" | "diastema" | "class2_div1";

export const PRESET_KEYS: PresetKey[] = [
  "class1_crowding",
  "open_bite",
  "diastema",
  "class2_div1",
];
