/** Client-side validation of movement edits against the served limit table.
 *
 * Limits apply to over-engineered movements server-side, so the same factor
 * is applied here before comparing. Validation is advisory: out-of-range
 * edits are flagged but still committable, and the server remains the
 * authority on findings.
 */

import type { LimitsDoc, MovementAxis, ToothTypeName } from "./types.js";

export const OVER_ENGINEERING_FACTOR = 1.3;

export function toothTypeOf(fdi: number): ToothTypeName {
  const pos = fdi % 10;
  if (pos <= 2) return "incisor";
  if (pos === 3) return "canine";
  if (pos <= 5) return "premolar";
  return "molar";
}

export interface EditValidation {
  ok: boolean;
  limit: number;
  message?: string;
}

export function validateEdit(
  fdi: number,
  axis: MovementAxis,
  value: number,
  limits: LimitsDoc,
): EditValidation {
  const table = limits[toothTypeOf(fdi)];
  const over = Math.abs(value) * OVER_ENGINEERING_FACTOR;
  let limit: number;
  switch (axis) {
    case "tx_mm":
      limit = table.tx_mm;
      break;
    case "ty_mm":
      limit = table.ty_mm;
      break;
    case "tz_mm":
      limit = value >= 0 ? table.tz_intrusion_mm : table.tz_extrusion_mm;
      break;
    case "rx_deg":
      limit = table.rx_deg;
      break;
    case "ry_deg":
      limit = table.ry_deg;
      break;
    case "rz_deg":
      limit = table.rz_deg;
      break;
  }
  if (!Number.isFinite(value)) {
    return { ok: false, limit, message: "value must be a finite number" };
  }
  if (over > limit) {
    const kind = axis === "tz_mm" && value < 0 ? "extrusion" : axis;
    return {
      ok: false,
      limit,
      message: `over-engineered ${kind} ${over.toFixed(2)} exceeds the ${limit} limit for ${toothTypeOf(fdi)}s`,
    };
  }
  return { ok: true, limit };
}
