// DOM rendering and event wiring. All state lives in the service; every
// handler re-fetches or applies the service's own response.

import { Client, ExportRefused, exportDownloadBytes } from "./api.js";
import {
  applyPatchResponse,
  buildLabanGrid,
  buildSessionView,
  describeExportWarnings,
  type Card,
} from "./model.js";
import type { LabanView, SessionDetail } from "./types.js";
import { TASK_CHOICES } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  private detail: SessionDetail | null = null;
  private laban: LabanView | null = null;

  constructor(
    private readonly client: Client,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    try {
      const sessions = await this.client.listSessions();
      if (sessions.length === 0) {
        this.root.replaceChildren(el("p", "error", "no sessions in the data directory"));
        return;
      }
      await this.loadSession(sessions[0].id);
    } catch (err) {
      this.renderError(`service unreachable: ${err}`, () => this.start());
    }
  }

  async loadSession(id: string): Promise<void> {
    try {
      this.detail = await this.client.getSession(id);
      this.laban = await this.client.getLaban(id);
      this.render();
    } catch (err) {
      this.renderError(`could not load session ${id}: ${err}`, () => this.loadSession(id));
    }
  }

  private renderError(message: string, retry: () => void): void {
    const banner = el("div", "banner invalid", message);
    const button = el("button", "", "retry");
    button.addEventListener("click", retry);
    banner.appendChild(button);
    this.root.replaceChildren(banner);
  }

  private render(): void {
    if (!this.detail) return;
    const view = buildSessionView(this.detail);
    this.root.replaceChildren();

    const header = el("header");
    header.appendChild(el("h1", "", `session ${view.id}`));
    header.appendChild(
      el("span", "meta", `object: ${view.object} · actor: ${view.actor}`),
    );
    const exportBtn = el("button", "export", "export program");
    exportBtn.addEventListener("click", () => this.onExport(false));
    header.appendChild(exportBtn);
    this.root.appendChild(header);

    this.root.appendChild(
      el("div", `banner ${view.banner.kind}`, view.banner.message),
    );

    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", "0 0 640 80");
    svg.setAttribute("class", "timeline");
    const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
    line.setAttribute("points", view.timeline.points);
    line.setAttribute("class", "activity");
    svg.appendChild(line);
    for (const x of view.timeline.markers) {
      const marker = document.createElementNS("http://www.w3.org/2000/svg", "line");
      marker.setAttribute("x1", String(x));
      marker.setAttribute("x2", String(x));
      marker.setAttribute("y1", "0");
      marker.setAttribute("y2", "80");
      marker.setAttribute("class", "pause");
      svg.appendChild(marker);
    }
    this.root.appendChild(svg);

    const cards = el("div", "cards");
    const pendingFirst = [...view.cards].sort(
      (a, b) => Number(b.pendingReview.length > 0) - Number(a.pendingReview.length > 0),
    );
    for (const card of pendingFirst) {
      cards.appendChild(this.renderCard(card));
    }
    this.root.appendChild(cards);

    if (this.laban) {
      this.root.appendChild(this.renderLaban(this.laban));
    }
  }

  private renderCard(card: Card): HTMLElement {
    const node = el("section", "card" + (card.violations.length ? " violating" : ""));
    const title = el("h2", "", `${card.index}. ${card.label}`);
    if (card.pendingReview.length) {
      title.appendChild(el("span", "badge", "review"));
    }
    node.appendChild(title);
    node.appendChild(el("p", "instruction", `“${card.instruction}” · ${card.span}`));
    node.appendChild(el("p", "transition", `transition: ${card.transition}`));

    const select = el("select");
    for (const task of TASK_CHOICES) {
      const opt = el("option", "", task);
      opt.setAttribute("value", task);
      if (task === card.task) opt.setAttribute("selected", "selected");
      select.appendChild(opt);
    }
    select.addEventListener("change", () =>
      this.onPatch(card.index, { task: select.value }),
    );
    const taskRow = el("div", "taskrow");
    taskRow.appendChild(el("label", "", "task "));
    taskRow.appendChild(select);
    node.appendChild(taskRow);

    const slots = el("dl", "slots");
    for (const slot of card.slots) {
      slots.appendChild(el("dt", "", slot.name));
      const dd = el("dd", "", slot.value);
      dd.setAttribute("data-slot", slot.name);
      dd.addEventListener("dblclick", () => this.onEditSlot(card.index, slot.name, slot.value));
      slots.appendChild(dd);
    }
    node.appendChild(slots);

    for (const marker of card.pendingReview) {
      node.appendChild(el("p", "pending", marker));
    }
    for (const message of card.violations) {
      node.appendChild(el("p", "violation", message));
    }
    return node;
  }

  private renderLaban(view: LabanView): HTMLElement {
    const grid = buildLabanGrid(view);
    const wrap = el("section", "laban");
    wrap.appendChild(el("h2", "", "labanotation (time flows bottom to top)"));
    const table = el("table");
    for (const row of grid.rowsTopDown) {
      const tr = el("tr");
      tr.appendChild(el("th", "", row.t.toFixed(2)));
      for (const token of row.tokens) {
        tr.appendChild(el("td", "", token));
      }
      table.appendChild(tr);
    }
    const head = el("tr");
    head.appendChild(el("th", "", "t (s)"));
    for (const col of grid.columns) {
      head.appendChild(el("th", "", col));
    }
    table.appendChild(head);
    wrap.appendChild(table);
    return wrap;
  }

  private async onPatch(
    index: number,
    patch: { task?: string; slots?: Record<string, unknown> },
  ): Promise<void> {
    if (!this.detail) return;
    try {
      const res = await this.client.patchFrame(this.detail.id, index, patch);
      this.detail = applyPatchResponse(this.detail, res.frame, res.report);
      this.render();
    } catch (err) {
      window.alert(String(err)); // API rejection shown verbatim
    }
  }

  private async onEditSlot(index: number, name: string, current: string): Promise<void> {
    const raw = window.prompt(`new value for ${name} (JSON)`, current);
    if (raw === null) return;
    let value: unknown;
    try {
      value = JSON.parse(raw);
    } catch {
      value = raw;
    }
    await this.onPatch(index, { slots: { [name]: value } });
  }

  private async onExport(force: boolean): Promise<void> {
    if (!this.detail) return;
    try {
      const res = await this.client.exportSession(this.detail.id, force);
      const note = describeExportWarnings(res.warnings);
      downloadText(`${this.detail.id}.program.json`, exportDownloadBytes(res));
      if (note) window.alert(note);
    } catch (err) {
      if (err instanceof ExportRefused) {
        const lines = err.report.violations
          .map((v) => `frame ${v.frame}: ${v.message}`)
          .concat(err.report.pending.map((p) => `frame ${p.frame}: awaiting review`));
        const forceAnyway = window.confirm(
          `export refused:\n${lines.join("\n")}\n\nexport anyway with warnings embedded?`,
        );
        if (forceAnyway) await this.onExport(true);
      } else {
        window.alert(String(err));
      }
    }
  }
}

export function downloadText(filename: string, text: string): void {
  const blob = new Blob([text], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}
