/** Typed client for the orthoplan REST API.
 *
 * The fetch implementation is injectable so tests can serve recorded
 * responses; every displayed number originates from these payloads.
 */

import type {
  FrameSequenceDoc,
  MovementPlanDoc,
  PatientRecordDoc,
  PatientSummaryDoc,
  PresetKey,
  RescoreResponseDoc,
  StatusDoc,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = "http_error";
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body?.error) {
      code = body.error.code ?? code;
      detail = body.error.detail ?? detail;
    }
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(resp.status, code, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  status(): Promise<StatusDoc> {
    return this.get("/api/training/status");
  }

  listPatients(): Promise<{ schema_version: number; patients: PatientSummaryDoc[] }> {
    return this.get("/api/patients");
  }

  getPatient(id: string): Promise<PatientRecordDoc> {
    return this.get(`/api/patients/${encodeURIComponent(id)}`);
  }

  getFrames(id: string): Promise<FrameSequenceDoc> {
    return this.get(`/api/patients/${encodeURIComponent(id)}/frames`);
  }

  demo(preset: PresetKey): Promise<PatientRecordDoc> {
    return this.get(`/api/demo?case=${encodeURIComponent(preset)}`);
  }

  rescore(id: string, plan: MovementPlanDoc, version?: number): Promise<RescoreResponseDoc> {
    const body: { plan: MovementPlanDoc; version?: number } = { plan };
    if (version !== undefined) {
      body.version = version;
    }
    return this.post(`/api/patients/${encodeURIComponent(id)}/rescore`, body);
  }
}
