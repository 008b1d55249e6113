// Typed client for the review service. Every mutation goes through here;
// the UI never computes slot values itself.

import type {
  ExportResponse,
  LabanView,
  PatchFrameResponse,
  RefusalBody,
  SessionDetail,
  SessionSummary,
  ValidationReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ExportRefused extends Error {
  constructor(readonly report: ValidationReport) {
    super("export refused while the session has open issues");
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchImpl(this.base + path, init);
    if (!res.ok && res.status !== 409) {
      const body = await res.text();
      throw new ApiError(res.status, body || res.statusText);
    }
    return res;
  }

  async listSessions(): Promise<SessionSummary[]> {
    return (await this.request("/api/sessions")).json();
  }

  async getSession(id: string): Promise<SessionDetail> {
    return (await this.request(`/api/session/${id}`)).json();
  }

  async getLaban(id: string): Promise<LabanView> {
    return (await this.request(`/api/session/${id}/laban`)).json();
  }

  async patchFrame(
    id: string,
    index: number,
    patch: { task?: string; slots?: Record<string, unknown> },
  ): Promise<PatchFrameResponse> {
    const res = await this.request(`/api/session/${id}/frames/${index}`, {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(patch),
    });
    return res.json();
  }

  async validate(id: string): Promise<ValidationReport> {
    const res = await this.request(`/api/session/${id}/validate`, { method: "POST" });
    return res.json();
  }

  /** Returns the canonical export verbatim; throws ExportRefused on a 409. */
  async exportSession(id: string, force = false): Promise<ExportResponse> {
    const res = await this.request(`/api/session/${id}/export`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ force }),
    });
    if (res.status === 409) {
      const body = (await res.json()) as RefusalBody;
      throw new ExportRefused(body.report);
    }
    return res.json();
  }
}

/** The downloaded file is exactly the service's canonical text. */
export function exportDownloadBytes(response: ExportResponse): string {
  return response.text;
}
