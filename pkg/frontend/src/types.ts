// API payload types, mirroring the review service's response models.

export interface ViolationModel {
  frame: number;
  message: string;
}

export interface PendingModel {
  frame: number;
  markers: string[];
}

export interface ValidationReport {
  ok: boolean;
  violations: ViolationModel[];
  pending: PendingModel[];
}

export interface SegmentModel {
  index: number;
  t_start: number;
  t_end: number;
  instruction: string;
}

export interface FrameModel {
  index: number;
  task: string;
  label: string;
  transition: string[] | null;
  transition_codes: string[] | null;
  slots: Record<string, unknown>;
  pending_review: string[];
}

export interface SessionSummary {
  id: string;
  recording: string;
  frames: number;
  edits: number;
  ok: boolean;
  pending: number;
}

export interface SessionDetail {
  id: string;
  recording: string;
  actor: string;
  object: string;
  segments: SegmentModel[];
  frames: FrameModel[];
  report: ValidationReport;
  edits: number;
  activity: number[];
  sample_rate: number;
  pauses: number[];
}

export interface LabanRowModel {
  t: number;
  tokens: Record<string, string>;
}

export interface LabanView {
  columns: string[];
  rows: LabanRowModel[];
  text: string;
}

export interface PatchFrameResponse {
  frame: FrameModel;
  report: ValidationReport;
}

export interface ExportResponse {
  program: Record<string, unknown>;
  text: string;
  path: string;
  warnings: string[];
}

export interface RefusalBody {
  refused: boolean;
  report: ValidationReport;
}

export const TASK_CHOICES = [
  "grasp",
  "ptg11",
  "ptg13",
  "ptg31",
  "ptg33",
  "ptg51",
  "ptg53",
  "stg12",
  "release",
];
