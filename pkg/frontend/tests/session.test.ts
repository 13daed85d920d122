import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { CHECKLIST_SIZE, PlanSession } from "../src/session.js";
import { DEMO, FRAMES, fakeFetch, gatedFetch } from "./helpers.js";

function makeSession(fetchImpl = fakeFetch()) {
  const api = new ApiClient("", fetchImpl);
  return new PlanSession(structuredClone(DEMO), structuredClone(FRAMES), api);
}

describe("PlanSession", () => {
  it("starts clean with the served score and frames", () => {
    const session = makeSession();
    expect(session.dirty).toBe(false);
    expect(session.score.grade).toBe(DEMO.score.grade);
    expect(session.frames.frames.length).toBe(FRAMES.frames.length);
    expect(session.checklist).toHaveLength(CHECKLIST_SIZE);
  });

  it("dirty tracks divergence from the last-scored plan", () => {
    const session = makeSession();
    session.editMovement(11, "tz_mm", -2.0);
    expect(session.dirty).toBe(true);
    const original = DEMO.plan.entries.find((e) => e.fdi === 11)!.tz_mm;
    session.editMovement(11, "tz_mm", original);
    expect(session.dirty).toBe(false);
  });

  it("revert restores the last-scored plan", () => {
    const session = makeSession();
    session.editMovement(11, "rx_deg", 42);
    expect(session.dirty).toBe(true);
    session.revert();
    expect(session.dirty).toBe(false);
    expect(session.movementOf(11)?.rx_deg).toBe(
      DEMO.plan.entries.find((e) => e.fdi === 11)!.rx_deg,
    );
  });

  it("rejects non-finite edits", () => {
    const session = makeSession();
    expect(() => session.editMovement(11, "tx_mm", Number.NaN)).toThrow();
  });

  it("commit adopts the rescore response and clears dirty", async () => {
    const session = makeSession();
    session.editMovement(11, "tz_mm", -2.0);
    const result = await session.commit();
    expect(result).toBe("applied");
    expect(session.dirty).toBe(false);
    expect(session.criticalCount).toBeGreaterThan(0);
    expect(session.version).toBeGreaterThan(DEMO.version);
  });

  it("commit without edits is a no-op", async () => {
    const session = makeSession();
    expect(await session.commit()).toBe("unchanged");
  });

  it("discards stale responses by request token", async () => {
    const gate = gatedFetch(fakeFetch());
    const session = makeSession(gate.fetch);

    session.editMovement(11, "tz_mm", -2.0);
    const first = session.commit();
    session.editMovement(11, "tz_mm", -0.1);
    const second = session.commit();
    expect(gate.pending()).toBe(2);

    // Release the second (newer) request first: it wins.
    gate.release(1);
    expect(await second).toBe("applied");
    const adopted = session.score;

    gate.release(0);
    expect(await first).toBe("stale");
    expect(session.score).toBe(adopted); // stale response did not overwrite
  });

  it("checklist gating: approve requires clean, critical-free, complete state", async () => {
    const session = makeSession();
    expect(session.approveEnabled).toBe(false); // checklist incomplete
    for (let i = 0; i < CHECKLIST_SIZE; i += 1) {
      session.toggleChecklist(i);
    }
    expect(session.checklistComplete).toBe(true);
    expect(session.approveEnabled).toBe(true); // clean demo plan has no criticals

    session.editMovement(11, "tz_mm", -2.0);
    expect(session.approveEnabled).toBe(false); // dirty blocks

    await session.commit();
    expect(session.dirty).toBe(false);
    expect(session.criticalCount).toBeGreaterThan(0);
    expect(session.approveEnabled).toBe(false); // critical findings block
  });
});
