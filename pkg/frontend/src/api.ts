/** Thin typed client for the smokeflow session service. */

import type { StrokePayload } from "./coords.js";

export type SimParams = {
  grid: { nx: number; ny: number; dx: number };
  dt?: number;
  guidance_gain?: number;
  f_e?: [number, number];
  emitter?: { x: number; y: number; r: number; rate: number };
};

export type FitReport = {
  no_constraints?: boolean;
  n_samples?: number;
  median_cosine?: number | null;
};

export type SessionInfo = {
  id: string;
  frames: number;
  step_index: number;
  time: number;
};

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function check(res: Response): Promise<Response> {
  if (res.ok) return res;
  let detail = res.statusText;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body, keep statusText
  }
  throw new ApiError(res.status, detail);
}

export class Client {
  constructor(public baseUrl: string) {}

  async health(): Promise<boolean> {
    try {
      const res = await fetch(`${this.baseUrl}/health`);
      return res.ok;
    } catch {
      return false;
    }
  }

  async createSession(
    params: SimParams,
    strokes: StrokePayload,
  ): Promise<{ id: string; fit_report: FitReport }> {
    const res = await check(
      await fetch(`${this.baseUrl}/sessions`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ params, strokes }),
      }),
    );
    return res.json();
  }

  async steps(id: string, count: number): Promise<{ frames_added: number; cfl_max: number }> {
    const res = await check(
      await fetch(`${this.baseUrl}/sessions/${id}/steps`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ count }),
      }),
    );
    return res.json();
  }

  async retarget(id: string, strokes: StrokePayload): Promise<{ fit_report: FitReport }> {
    const res = await check(
      await fetch(`${this.baseUrl}/sessions/${id}/strokes`, {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ strokes }),
      }),
    );
    return res.json();
  }

  async info(id: string): Promise<SessionInfo> {
    const res = await check(await fetch(`${this.baseUrl}/sessions/${id}/info`));
    return res.json();
  }

  frameUrl(id: string, n: number): string {
    return `${this.baseUrl}/sessions/${id}/frames/${n}`;
  }

  async frame(id: string, n: number): Promise<ArrayBuffer> {
    const res = await check(await fetch(this.frameUrl(id, n)));
    return res.arrayBuffer();
  }

  async field(id: string, kind: "velocity" | "psi"): Promise<ArrayBuffer> {
    const res = await check(
      await fetch(`${this.baseUrl}/sessions/${id}/field?kind=${kind}`),
    );
    return res.arrayBuffer();
  }
}

/** Parse an SFLD buffer into its header and f32 payload (little-endian). */
export function parseField(buf: ArrayBuffer): {
  kind: number;
  nx: number;
  ny: number;
  dx: number;
  data: Float32Array;
} {
  const view = new DataView(buf);
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== "SFLD") throw new Error("bad magic");
  return {
    kind: view.getUint8(8),
    nx: view.getUint32(12, true),
    ny: view.getUint32(16, true),
    dx: view.getFloat64(20, true),
    data: new Float32Array(buf.slice(28)),
  };
}
