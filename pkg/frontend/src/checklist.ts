/** Pre-approval checklist configuration (10 items, editable without code
 * changes via public/checklist.json). */

export const CHECKLIST_ITEM_COUNT = 10;

export interface ChecklistConfig {
  schema_version: number;
  items: string[];
}

export function parseChecklistConfig(raw: unknown): string[] {
  const doc = raw as ChecklistConfig;
  if (!doc || !Array.isArray(doc.items)) {
    throw new Error("checklist config must contain an items array");
  }
  if (doc.items.length !== CHECKLIST_ITEM_COUNT) {
    throw new Error(
      `checklist config must contain exactly ${CHECKLIST_ITEM_COUNT} items, got ${doc.items.length}`,
    );
  }
  if (!doc.items.every((item) => typeof item === "string" && item.length > 0)) {
    throw new Error("checklist items must be non-empty strings");
  }
  return [...doc.items];
}

export async function loadChecklist(url = "./public/checklist.json"): Promise<string[]> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new Error(`failed to load checklist config: HTTP ${resp.status}`);
  }
  return parseChecklistConfig(await resp.json());
}
