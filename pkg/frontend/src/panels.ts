/** Standalone DOM renderers for the score and findings panels.
 *
 * Pure functions of served documents: they render only what the service
 * returned, never computing scores locally.
 */

import { clear, h } from "./dom.js";
import { SEVERITY_FILTERS, filterFindings, severityCounts, type SeverityFilter } from "./findings.js";
import { gaugeView, scoreBars } from "./scores.js";
import type { FindingDoc, TreatmentScoreDoc } from "./types.js";

export function renderScorePanel(root: HTMLElement, score: TreatmentScoreDoc): void {
  clear(root);
  const gauge = gaugeView(score);
  root.append(
    h(
      "div",
      { class: "gauge", style: `--angle:${gauge.angleDeg}deg; --color:${gauge.color}` },
      h("div", { class: "gauge-grade" }, gauge.grade),
      h("div", { class: "gauge-value" }, gauge.composite.toFixed(1)),
    ),
    ...scoreBars(score.sub_scores).map((bar) =>
      h(
        "div",
        { class: "score-bar", "data-key": bar.key },
        h("span", { class: "score-label" }, bar.label),
        h(
          "div",
          { class: "score-track" },
          h("div", { class: "score-fill", style: `width:${bar.pct}%` }),
        ),
        h("span", { class: "score-value" }, bar.value.toFixed(1)),
      ),
    ),
    h("div", { class: "v1" }, `legacy scalar score: ${score.v1_score.toFixed(1)}`),
  );
}

export function renderFindingsPanel(
  root: HTMLElement,
  findings: FindingDoc[],
  filter: SeverityFilter,
  onFilterChange: (next: SeverityFilter) => void,
): void {
  clear(root);
  const counts = severityCounts(findings);
  root.append(
    h("h3", {}, `findings (${counts.critical} critical / ${counts.warning} warning)`),
    h(
      "select",
      {
        class: "severity-filter",
        onChange: (e: Event) =>
          onFilterChange((e.target as HTMLSelectElement).value as SeverityFilter),
      },
      ...SEVERITY_FILTERS.map((f) => h("option", { value: f, selected: f === filter }, f)),
    ),
    h(
      "ul",
      { class: "findings" },
      ...filterFindings(findings, filter).map((f) =>
        h(
          "li",
          { class: `finding ${f.severity}` },
          h("span", { class: "sev" }, f.severity),
          h("span", { class: "code" }, f.code),
          ` ${f.message}`,
        ),
      ),
    ),
  );
}
