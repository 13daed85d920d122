/** Fixture-backed fake fetch: serves recorded orthoplan service responses.
 *
 * Fixtures were captured from the real service, so these tests consume the
 * exact bytes the dashboard sees in production.
 */

import type { FetchLike } from "../src/api.js";
import type {
  FrameSequenceDoc,
  MovementPlanDoc,
  PatientRecordDoc,
  RescoreResponseDoc,
  StatusDoc,
} from "../src/types.js";

import demoFixture from "./fixtures/demo_class1_crowding.json";
import framesFixture from "./fixtures/frames_class1_crowding.json";
import rescoreFixture from "./fixtures/rescore_tz_minus2.json";
import statusFixture from "./fixtures/status.json";

export const DEMO = demoFixture as unknown as PatientRecordDoc;
export const FRAMES = framesFixture as unknown as FrameSequenceDoc;
export const RESCORE_TZ_MINUS2 = rescoreFixture as unknown as RescoreResponseDoc;
export const STATUS = statusFixture as unknown as StatusDoc;

function jsonResponse(doc: unknown, status = 200): Response {
  return new Response(JSON.stringify(doc), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function notFound(detail: string): Response {
  return jsonResponse({ error: { code: "not_found", detail } }, 404);
}

function canonicalEntries(plan: MovementPlanDoc): string {
  return JSON.stringify(
    [...plan.entries]
      .sort((a, b) => a.fdi - b.fdi)
      .map((e) => [e.fdi, e.tx_mm ?? 0, e.ty_mm ?? 0, e.tz_mm ?? 0, e.rx_deg ?? 0, e.ry_deg ?? 0, e.rz_deg ?? 0]),
  );
}

export interface FakeServerLog {
  requests: Array<{ method: string; url: string }>;
}

/** Routes the endpoints the dashboard uses onto the recorded fixtures. */
export function fakeFetch(log?: FakeServerLog): FetchLike {
  const demoId = DEMO.id;
  return async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    log?.requests.push({ method, url });

    if (method === "GET") {
      if (url.endsWith("/api/training/status")) {
        return jsonResponse(STATUS);
      }
      if (url.includes("/api/demo?case=class1_crowding")) {
        return jsonResponse(DEMO);
      }
      if (url.includes("/api/demo?case=")) {
        return notFound("unknown preset");
      }
      if (url.endsWith(`/api/patients/${demoId}/frames`)) {
        return jsonResponse(FRAMES);
      }
      if (url.endsWith(`/api/patients/${demoId}`)) {
        return jsonResponse(DEMO);
      }
      if (url.includes("/api/patients/")) {
        return notFound("unknown patient");
      }
    }

    if (method === "POST" && url.endsWith(`/api/patients/${demoId}/rescore`)) {
      const body = JSON.parse(String(init?.body)) as { plan: MovementPlanDoc };
      if (canonicalEntries(body.plan) === canonicalEntries(DEMO.plan)) {
        const unchanged: RescoreResponseDoc = {
          schema_version: 1,
          id: demoId,
          version: DEMO.version,
          content_hash: DEMO.content_hash,
          score: DEMO.score,
          frames: FRAMES,
        };
        return jsonResponse(unchanged);
      }
      const edited = body.plan.entries.find((e) => e.fdi === 11);
      if (edited && edited.tz_mm === -2.0) {
        return jsonResponse(RESCORE_TZ_MINUS2);
      }
      // Any other edit: echo a minimal valid response based on the fixture.
      return jsonResponse({ ...RESCORE_TZ_MINUS2, content_hash: "other-edit" });
    }

    return notFound(`unrouted ${method} ${url}`);
  };
}

/** Fetch wrapper that delays responses until released, for race tests. */
export function gatedFetch(inner: FetchLike): {
  fetch: FetchLike;
  release: (index: number) => void;
  pending: () => number;
} {
  const gates: Array<() => void> = [];
  const fetchImpl: FetchLike = async (url, init) => {
    await new Promise<void>((resolve) => {
      gates.push(resolve);
    });
    return inner(url, init);
  };
  return {
    fetch: fetchImpl,
    release: (index: number) => gates[index](),
    pending: () => gates.length,
  };
}
