/** Per-patient editing session: working plan, dirty tracking, rescore
 * round-trips, and the pre-approval checklist.
 *
 * The session never computes scores locally; a commit posts the working plan
 * to the rescore endpoint and adopts the returned score and frames. Stale
 * responses (superseded by a newer commit) are discarded by request token.
 */

import type { ApiClient } from "./api.js";
import type {
  FrameSequenceDoc,
  MovementAxis,
  MovementEntry,
  MovementPlanDoc,
  PatientRecordDoc,
  TreatmentScoreDoc,
} from "./types.js";

export const CHECKLIST_SIZE = 10;

function clonePlan(plan: MovementPlanDoc): MovementPlanDoc {
  return {
    schema_version: plan.schema_version,
    entries: plan.entries.map((e) => ({ ...e })),
  };
}

function canonicalPlan(plan: MovementPlanDoc): string {
  const entries = [...plan.entries]
    .sort((a, b) => a.fdi - b.fdi)
    .map((e) => [e.fdi, e.tx_mm, e.ty_mm, e.tz_mm, e.rx_deg, e.ry_deg, e.rz_deg]);
  return JSON.stringify(entries);
}

export type CommitResult = "applied" | "stale" | "unchanged";

export class PlanSession {
  readonly patientId: string;
  version: number;
  workingPlan: MovementPlanDoc;
  score: TreatmentScoreDoc;
  frames: FrameSequenceDoc;
  checklist: boolean[];

  private lastScoredPlan: MovementPlanDoc;
  private requestToken = 0;

  constructor(
    record: PatientRecordDoc,
    frames: FrameSequenceDoc,
    private readonly api: ApiClient,
  ) {
    this.patientId = record.id;
    this.version = record.version;
    this.workingPlan = clonePlan(record.plan);
    this.lastScoredPlan = clonePlan(record.plan);
    this.score = record.score;
    this.frames = frames;
    this.checklist = new Array(CHECKLIST_SIZE).fill(false);
  }

  static async load(api: ApiClient, patientId: string): Promise<PlanSession> {
    const record = await api.getPatient(patientId);
    const frames = await api.getFrames(patientId);
    return new PlanSession(record, frames, api);
  }

  /** Dirty iff the working plan differs from the last-scored plan. */
  get dirty(): boolean {
    return canonicalPlan(this.workingPlan) !== canonicalPlan(this.lastScoredPlan);
  }

  movementOf(fdi: number): MovementEntry | undefined {
    return this.workingPlan.entries.find((e) => e.fdi === fdi);
  }

  editMovement(fdi: number, axis: MovementAxis, value: number): void {
    if (!Number.isFinite(value)) {
      throw new Error(`movement value must be finite, got ${value}`);
    }
    let entry = this.movementOf(fdi);
    if (!entry) {
      entry = { fdi, tx_mm: 0, ty_mm: 0, tz_mm: 0, rx_deg: 0, ry_deg: 0, rz_deg: 0 };
      this.workingPlan.entries.push(entry);
      this.workingPlan.entries.sort((a, b) => a.fdi - b.fdi);
    }
    entry[axis] = value;
  }

  revert(): void {
    this.workingPlan = clonePlan(this.lastScoredPlan);
  }

  /** Post the working plan for rescoring and adopt the response.
   *
   * Returns "stale" when a newer commit superseded this one before the
   * response arrived; stale responses are dropped entirely.
   */
  async commit(): Promise<CommitResult> {
    if (!this.dirty) {
      return "unchanged";
    }
    const token = ++this.requestToken;
    const submitted = clonePlan(this.workingPlan);
    const response = await this.api.rescore(this.patientId, submitted, this.version);
    if (token !== this.requestToken) {
      return "stale";
    }
    this.version = response.version;
    this.score = response.score;
    this.frames = response.frames;
    this.lastScoredPlan = submitted;
    return "applied";
  }

  get criticalCount(): number {
    return this.score.findings.filter((f) => f.severity === "critical").length;
  }

  /** Checklist items can only be ticked once a score is present. */
  toggleChecklist(index: number): boolean {
    if (index < 0 || index >= this.checklist.length) {
      throw new Error(`checklist index out of range: ${index}`);
    }
    if (!this.score) {
      return false;
    }
    this.checklist[index] = !this.checklist[index];
    return true;
  }

  get checklistComplete(): boolean {
    return this.checklist.every(Boolean);
  }

  /** Approval is blocked by critical findings, unsaved edits, or an
   * incomplete checklist. */
  get approveEnabled(): boolean {
    return (
      Boolean(this.score) && !this.dirty && this.criticalCount === 0 && this.checklistComplete
    );
  }
}
