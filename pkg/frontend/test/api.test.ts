import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { Client, ExportRefused, exportDownloadBytes } from "../src/api.js";
import type { ExportResponse } from "../src/types.js";

function fixture<T>(name: string): T {
  return JSON.parse(
    readFileSync(join(__dirname, "fixtures", name), "utf-8"),
  ) as T;
}

interface Recorded {
  url: string;
  init?: RequestInit;
}

function stubFetch(
  responder: (url: string, init?: RequestInit) => { status: number; body: unknown },
): { fetch: (url: string, init?: RequestInit) => Promise<Response>; calls: Recorded[] } {
  const calls: Recorded[] = [];
  return {
    calls,
    fetch: async (url, init) => {
      calls.push({ url, init });
      const { status, body } = responder(url, init);
      return new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
      });
    },
  };
}

describe("client", () => {
  it("patches frames with the edited fields only", async () => {
    const { fetch, calls } = stubFetch(() => ({
      status: 200,
      body: fixture("patch_breaking.json"),
    }));
    const client = new Client("", fetch);
    await client.patchFrame("box_demo", 2, { task: "release" });
    expect(calls[0].url).toBe("/api/session/box_demo/frames/2");
    expect(calls[0].init?.method).toBe("PATCH");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ task: "release" });
  });

  it("downloads exactly the service's canonical export bytes", async () => {
    const exportBody = fixture<ExportResponse>("box_export.json");
    const { fetch } = stubFetch(() => ({ status: 200, body: exportBody }));
    const client = new Client("", fetch);
    const res = await client.exportSession("box_demo");
    expect(exportDownloadBytes(res)).toBe(exportBody.text);
    // byte-identical to the API export, no client-side re-serialization
    expect(exportDownloadBytes(res)).toBe(
      fixture<ExportResponse>("box_export.json").text,
    );
  });

  it("raises a refusal carrying the validation report on 409", async () => {
    const refusal = fixture<{ status: number; body: { report: unknown } }>(
      "export_refusal.json",
    );
    const { fetch } = stubFetch(() => ({ status: 409, body: refusal.body }));
    const client = new Client("", fetch);
    await expect(client.exportSession("box_demo")).rejects.toBeInstanceOf(
      ExportRefused,
    );
    try {
      await client.exportSession("box_demo");
    } catch (err) {
      const refused = err as ExportRefused;
      expect(refused.report.violations.length).toBeGreaterThan(0);
    }
  });

  it("forwards force on forced exports", async () => {
    const exportBody = fixture<ExportResponse>("box_export.json");
    const { fetch, calls } = stubFetch(() => ({ status: 200, body: exportBody }));
    const client = new Client("", fetch);
    await client.exportSession("box_demo", true);
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ force: true });
  });

  it("surfaces non-409 errors with status and body", async () => {
    const { fetch } = stubFetch(() => ({ status: 422, body: { detail: "bad slot" } }));
    const client = new Client("", fetch);
    await expect(
      client.patchFrame("box_demo", 1, { slots: { detach_distance: -1 } }),
    ).rejects.toThrow(/bad slot/);
  });
});
