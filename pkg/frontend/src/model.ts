// Pure projections from API payloads to view state. No hidden client state:
// everything shown is derived from the last service responses.

import type {
  FrameModel,
  LabanView,
  SessionDetail,
  ValidationReport,
} from "./types.js";

export interface Card {
  index: number;
  instruction: string;
  task: string;
  label: string;
  transition: string;
  slots: { name: string; value: string }[];
  pendingReview: string[];
  violations: string[];
  span: string;
}

export interface Banner {
  kind: "ok" | "invalid" | "pending";
  message: string;
}

export interface TimelineView {
  /** SVG polyline points for the activity signal, scaled into width x height. */
  points: string;
  /** Pause marker x positions in the same coordinate space. */
  markers: number[];
  duration: number;
}

export interface LabanGrid {
  columns: string[];
  /** Rows ordered for display: time flows bottom to top. */
  rowsTopDown: { t: number; tokens: string[] }[];
}

export interface SessionView {
  id: string;
  object: string;
  actor: string;
  banner: Banner;
  cards: Card[];
  timeline: TimelineView;
}

function violationsByFrame(report: ValidationReport): Map<number, string[]> {
  const map = new Map<number, string[]>();
  for (const v of report.violations) {
    const list = map.get(v.frame) ?? [];
    list.push(v.message);
    map.set(v.frame, list);
  }
  return map;
}

export function formatSlot(value: unknown): string {
  if (Array.isArray(value)) {
    return value.map((x) => (typeof x === "number" ? x.toFixed(3) : String(x))).join(", ");
  }
  if (typeof value === "number") {
    return value.toFixed(3);
  }
  if (value !== null && typeof value === "object") {
    return Object.entries(value as Record<string, unknown>)
      .map(([k, v]) => `${k}: ${v}`)
      .join("  ");
  }
  return String(value);
}

export function buildBanner(report: ValidationReport): Banner {
  if (report.violations.length > 0) {
    return {
      kind: "invalid",
      message: `${report.violations.length} grammar violation(s): ` +
        report.violations.map((v) => `frame ${v.frame}: ${v.message}`).join("; "),
    };
  }
  if (report.pending.length > 0) {
    return {
      kind: "pending",
      message: `${report.pending.length} card(s) awaiting review`,
    };
  }
  return { kind: "ok", message: "program valid — ready to export" };
}

export function buildCards(detail: SessionDetail): Card[] {
  const byFrame = violationsByFrame(detail.report);
  return detail.frames.map((frame: FrameModel, i: number) => {
    const segment = detail.segments[i];
    return {
      index: frame.index,
      instruction: segment ? segment.instruction : "",
      task: frame.task,
      label: frame.label,
      transition: frame.transition_codes ? frame.transition_codes.join(" → ") : "—",
      slots: Object.entries(frame.slots).map(([name, value]) => ({
        name,
        value: formatSlot(value),
      })),
      pendingReview: frame.pending_review,
      violations: byFrame.get(frame.index) ?? [],
      span: segment
        ? `${segment.t_start.toFixed(2)}–${segment.t_end.toFixed(2)} s`
        : "",
    };
  });
}

export function buildTimeline(
  detail: SessionDetail,
  width = 640,
  height = 80,
): TimelineView {
  const samples = detail.activity;
  const n = samples.length;
  if (n === 0 || detail.sample_rate <= 0) {
    return { points: "", markers: [], duration: 0 };
  }
  const duration = (n - 1) / detail.sample_rate;
  const peak = Math.max(...samples, 1e-9);
  const pts: string[] = [];
  for (let i = 0; i < n; i++) {
    const x = (i / Math.max(n - 1, 1)) * width;
    const y = height - (samples[i] / peak) * (height - 4) - 2;
    pts.push(`${x.toFixed(1)},${y.toFixed(1)}`);
  }
  const markers = detail.pauses.map((t) => (t / duration) * width);
  return { points: pts.join(" "), markers, duration };
}

export function buildSessionView(detail: SessionDetail): SessionView {
  return {
    id: detail.id,
    object: detail.object,
    actor: detail.actor,
    banner: buildBanner(detail.report),
    cards: buildCards(detail),
    timeline: buildTimeline(detail),
  };
}

/** Projection after a PATCH: replace the edited frame, re-derive the banner. */
export function applyPatchResponse(
  detail: SessionDetail,
  frame: FrameModel,
  report: ValidationReport,
): SessionDetail {
  const frames = detail.frames.map((f) => (f.index === frame.index ? frame : f));
  return { ...detail, frames, report };
}

export function buildLabanGrid(view: LabanView): LabanGrid {
  const rows = view.rows.map((r) => ({
    t: r.t,
    tokens: view.columns.map((c) => r.tokens[c] ?? "·"),
  }));
  rows.reverse(); // time flows bottom to top
  return { columns: view.columns, rowsTopDown: rows };
}

export function describeExportWarnings(warnings: string[]): string {
  return warnings.length === 0
    ? ""
    : `exported with ${warnings.length} warning(s) embedded`;
}
