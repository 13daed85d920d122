/** Dashboard shell: wires the API client, plan session, gauge, 3D viewer,
 * frame player, findings panel, movement editor, and checklist into the DOM.
 */

import { ApiClient } from "./api.js";
import { loadChecklist } from "./checklist.js";
import { apiBaseUrl } from "./config.js";
import { clear, h } from "./dom.js";
import { validateEdit } from "./editor.js";
import { type SeverityFilter } from "./findings.js";
import { renderFindingsPanel, renderScorePanel } from "./panels.js";
import { FramePlayer } from "./player.js";
import { PlanSession } from "./session.js";
import { MOVEMENT_AXES, PRESET_KEYS, type LimitsDoc, type MovementAxis, type PresetKey } from "./types.js";
import { toothGlyphs } from "./viewer3d.js";
import { ArchViewer } from "./viewer3d_three.js";

const AXIS_LABELS: Record<MovementAxis, string> = {
  tx_mm: "Mesiodistal (mm)",
  ty_mm: "Buccolingual (mm)",
  tz_mm: "Vertical (mm, + intrusion)",
  rx_deg: "Torque (deg)",
  ry_deg: "Tip (deg)",
  rz_deg: "Rotation (deg)",
};

class App {
  private readonly api = new ApiClient(apiBaseUrl());
  private session: PlanSession | null = null;
  private player: FramePlayer | null = null;
  private viewer: ArchViewer | null = null;
  private limits: LimitsDoc | null = null;
  private checklistLabels: string[] = [];
  private selectedFdi: number | null = null;
  private severityFilter: SeverityFilter = "all";
  private archDoc: import("./types.js").ArchStateDoc | null = null;

  private readonly root: HTMLElement;

  constructor(root: HTMLElement) {
    this.root = root;
  }

  async start(): Promise<void> {
    this.renderSkeleton();
    try {
      const status = await this.api.status();
      this.limits = status.limits;
      this.checklistLabels = await loadChecklist();
      await this.loadPreset("class1_crowding");
    } catch (err) {
      this.banner(`startup failed: ${String(err)}`, () => this.start());
    }
  }

  private async loadPreset(key: PresetKey): Promise<void> {
    try {
      const record = await this.api.demo(key);
      const frames = await this.api.getFrames(record.id);
      this.session = new PlanSession(record, frames, this.api);
      this.archDoc = record.arch;
      this.player = new FramePlayer(frames);
      this.selectedFdi = null;
      this.renderAll();
      this.animate();
    } catch (err) {
      this.banner(`failed to load preset ${key}: ${String(err)}`, () => this.loadPreset(key));
    }
  }

  private banner(message: string, retry: () => void): void {
    const el = this.root.querySelector("#banner") as HTMLElement | null;
    if (!el) return;
    clear(el);
    el.append(
      h("div", { class: "banner" }, message, h("button", { onClick: () => retry() }, "retry")),
    );
  }

  private renderSkeleton(): void {
    clear(this.root);
    this.root.append(
      h("div", { id: "banner" }),
      h(
        "header",
        {},
        h("h1", {}, "orthoplan review"),
        h(
          "select",
          {
            id: "preset",
            onChange: (e: Event) =>
              void this.loadPreset((e.target as HTMLSelectElement).value as PresetKey),
          },
          ...PRESET_KEYS.map((k) => h("option", { value: k }, k)),
        ),
      ),
      h(
        "main",
        {},
        h("section", { id: "scores" }),
        h(
          "section",
          { id: "stage" },
          h("canvas", { id: "arch-canvas", width: 760, height: 480 }),
          h("div", { id: "player" }),
        ),
        h(
          "section",
          { id: "side" },
          h("div", { id: "editor" }),
          h("div", { id: "findings" }),
          h("div", { id: "checklist" }),
        ),
      ),
    );
    const canvas = this.root.querySelector("#arch-canvas") as HTMLCanvasElement;
    this.viewer = new ArchViewer(canvas);
    this.viewer.onSelect = (fdi) => {
      this.selectedFdi = fdi;
      this.renderEditor();
      this.renderViewer();
    };
  }

  private renderAll(): void {
    this.renderScores();
    this.renderViewer();
    this.renderPlayer();
    this.renderEditor();
    this.renderFindings();
    this.renderChecklist();
  }

  private renderScores(): void {
    const el = this.root.querySelector("#scores") as HTMLElement;
    if (!el || !this.session) return;
    renderScorePanel(el, this.session.score);
  }

  private renderViewer(): void {
    if (!this.viewer || !this.archDoc) return;
    const frame = this.player ? this.player.frame : null;
    this.viewer.update(toothGlyphs(this.archDoc, frame, this.selectedFdi));
  }

  private renderPlayer(): void {
    const el = this.root.querySelector("#player") as HTMLElement;
    if (!el || !this.player) return;
    const player = this.player;
    clear(el);
    el.append(
      h(
        "button",
        { id: "play", onClick: () => { player.toggle(); this.renderPlayer(); } },
        player.playing ? "pause" : "play",
      ),
      h("button", { onClick: () => { player.stepBack(); this.afterScrub(); } }, "<"),
      h("button", { onClick: () => { player.stepForward(); this.afterScrub(); } }, ">"),
      h("input", {
        type: "range",
        id: "scrubber",
        min: 0,
        max: player.maxIndex,
        step: 1,
        value: player.index,
        onInput: (e: Event) => {
          player.scrubTo(Number((e.target as HTMLInputElement).value));
          this.afterScrub();
        },
      }),
      h(
        "span",
        { id: "frame-label" },
        `frame ${player.index}/${player.maxIndex} (t=${player.t.toFixed(3)})`,
      ),
    );
  }

  private afterScrub(): void {
    this.renderViewer();
    const label = this.root.querySelector("#frame-label");
    const scrubber = this.root.querySelector("#scrubber") as HTMLInputElement | null;
    if (label && this.player) {
      label.textContent = `frame ${this.player.index}/${this.player.maxIndex} (t=${this.player.t.toFixed(3)})`;
    }
    if (scrubber && this.player) {
      scrubber.value = String(this.player.index);
    }
  }

  private renderEditor(): void {
    const el = this.root.querySelector("#editor") as HTMLElement;
    if (!el || !this.session) return;
    clear(el);
    if (this.selectedFdi === null) {
      el.append(h("p", { class: "hint" }, "click a tooth to edit its movement"));
      return;
    }
    const session = this.session;
    const fdi = this.selectedFdi;
    const movement = session.movementOf(fdi);
    el.append(h("h3", {}, `tooth ${fdi}`));
    for (const axis of MOVEMENT_AXES) {
      const current = movement ? movement[axis] : 0;
      const note = h("span", { class: "limit-note", id: `note-${axis}` });
      el.append(
        h(
          "label",
          { class: "axis" },
          AXIS_LABELS[axis],
          h("input", {
            type: "number",
            step: 0.1,
            value: current,
            onChange: (e: Event) => {
              const value = Number((e.target as HTMLInputElement).value);
              session.editMovement(fdi, axis, value);
              if (this.limits) {
                const check = validateEdit(fdi, axis, value, this.limits);
                note.textContent = check.ok ? "" : check.message ?? "";
              }
              this.renderCommit();
            },
          }),
          note,
        ),
      );
    }
    el.append(h("div", { id: "commit-zone" }));
    this.renderCommit();
  }

  private renderCommit(): void {
    const el = this.root.querySelector("#commit-zone") as HTMLElement | null;
    if (!el || !this.session) return;
    const session = this.session;
    clear(el);
    el.append(
      h(
        "button",
        {
          id: "commit",
          disabled: !session.dirty,
          onClick: () => void this.commit(),
        },
        session.dirty ? "commit & re-score" : "no pending edits",
      ),
      h(
        "button",
        { disabled: !session.dirty, onClick: () => { session.revert(); this.renderAll(); } },
        "revert",
      ),
    );
    this.renderChecklist();
  }

  private async commit(): Promise<void> {
    if (!this.session) return;
    try {
      const result = await this.session.commit();
      if (result === "applied" && this.player) {
        this.player.replaceSequence(this.session.frames);
      }
      this.renderAll();
    } catch (err) {
      this.banner(`re-score failed: ${String(err)}`, () => void this.commit());
    }
  }

  private renderFindings(): void {
    const el = this.root.querySelector("#findings") as HTMLElement;
    if (!el || !this.session) return;
    renderFindingsPanel(el, this.session.score.findings, this.severityFilter, (next) => {
      this.severityFilter = next;
      this.renderFindings();
    });
  }

  private renderChecklist(): void {
    const el = this.root.querySelector("#checklist") as HTMLElement;
    if (!el || !this.session) return;
    const session = this.session;
    clear(el);
    el.append(
      h("h3", {}, "pre-approval checklist"),
      h(
        "ol",
        {},
        ...this.checklistLabels.map((label, i) =>
          h(
            "li",
            {},
            h(
              "label",
              {},
              h("input", {
                type: "checkbox",
                checked: session.checklist[i],
                onChange: () => {
                  session.toggleChecklist(i);
                  this.renderChecklist();
                },
              }),
              label,
            ),
          ),
        ),
      ),
      h(
        "button",
        { id: "approve", disabled: !session.approveEnabled },
        session.criticalCount > 0
          ? "approval blocked: critical findings"
          : session.dirty
            ? "approval blocked: unsaved edits"
            : "approve plan",
      ),
    );
  }

  private animate(): void {
    let last = performance.now();
    const tick = (now: number) => {
      if (this.player?.playing) {
        this.player.advance((now - last) / 1000);
        this.afterScrub();
        const play = this.root.querySelector("#play");
        if (play && !this.player.playing) {
          play.textContent = "play";
        }
      }
      last = now;
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }
}

export function mount(root: HTMLElement): App {
  const app = new App(root);
  void app.start();
  return app;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app") as HTMLElement);
}
