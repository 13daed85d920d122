/** Severity-filtered findings panel logic. */

import type { FindingDoc, Severity } from "./types.js";

export type SeverityFilter = Severity | "all";

export const SEVERITY_FILTERS: SeverityFilter[] = ["all", "critical", "warning", "info"];

const SEVERITY_RANK: Record<Severity, number> = { critical: 0, warning: 1, info: 2 };

export function filterFindings(findings: FindingDoc[], filter: SeverityFilter): FindingDoc[] {
  const kept = filter === "all" ? [...findings] : findings.filter((f) => f.severity === filter);
  return kept.sort(
    (a, b) => SEVERITY_RANK[a.severity] - SEVERITY_RANK[b.severity] || (a.fdi ?? 0) - (b.fdi ?? 0),
  );
}

export function severityCounts(findings: FindingDoc[]): Record<Severity, number> {
  const counts: Record<Severity, number> = { critical: 0, warning: 0, info: 0 };
  for (const f of findings) {
    counts[f.severity] += 1;
  }
  return counts;
}
