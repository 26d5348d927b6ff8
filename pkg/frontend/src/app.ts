/** Sketch-and-steer UI: draw directed strokes on the canvas, submit them as
 * a guidance target, and watch density frames stream back while the solver
 * runs. Redrawing retargets the live session.
 */

import { ApiError, Client, type SimParams } from "./api.js";
import { toPayload, type Pt } from "./coords.js";

const STEP_BATCH = 5;
const POLL_MS = 100;
const DOMAIN = { lx: 1.0, ly: 1.0 };

type Elements = {
  sketch: HTMLCanvasElement;
  smoke: HTMLCanvasElement;
  submit: HTMLButtonElement;
  clear: HTMLButtonElement;
  pause: HTMLButtonElement;
  gain: HTMLInputElement;
  gainLabel: HTMLElement;
  banner: HTMLElement;
  status: HTMLElement;
};

function grab(): Elements {
  const byId = <T extends HTMLElement>(id: string) => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el as T;
  };
  return {
    sketch: byId<HTMLCanvasElement>("sketch"),
    smoke: byId<HTMLCanvasElement>("smoke"),
    submit: byId<HTMLButtonElement>("submit"),
    clear: byId<HTMLButtonElement>("clear"),
    pause: byId<HTMLButtonElement>("pause"),
    gain: byId<HTMLInputElement>("gain"),
    gainLabel: byId("gain-label"),
    banner: byId("banner"),
    status: byId("status"),
  };
}

export class App {
  private client: Client;
  private strokes: Pt[][] = [];
  private current: Pt[] | null = null;
  private sessionId: string | null = null;
  private shownFrames = 0;
  private paused = false;
  private inFlight = false; // one steps request at a time, mirrors server 409
  private timer: number | null = null;

  constructor(
    private el: Elements,
    baseUrl: string,
  ) {
    this.client = new Client(baseUrl);
    this.wireCanvas();
    this.wireControls();
  }

  private wireCanvas() {
    const c = this.el.sketch;
    c.addEventListener("pointerdown", (e) => {
      c.setPointerCapture(e.pointerId);
      this.current = [this.canvasPoint(e)];
    });
    c.addEventListener("pointermove", (e) => {
      if (!this.current) return;
      this.current.push(this.canvasPoint(e));
      this.redrawSketch();
    });
    const finish = () => {
      if (!this.current) return;
      if (this.current.length >= 2) this.strokes.push(this.current);
      this.current = null;
      this.redrawSketch();
    };
    c.addEventListener("pointerup", finish);
    c.addEventListener("pointercancel", finish);
  }

  private wireControls() {
    this.el.submit.addEventListener("click", () => void this.submit());
    this.el.clear.addEventListener("click", () => {
      this.strokes = [];
      this.redrawSketch();
    });
    this.el.pause.addEventListener("click", () => {
      this.paused = !this.paused;
      this.el.pause.textContent = this.paused ? "resume" : "pause";
    });
    this.el.gain.addEventListener("input", () => {
      this.el.gainLabel.textContent = this.el.gain.value;
    });
  }

  private canvasPoint(e: PointerEvent): Pt {
    const r = this.el.sketch.getBoundingClientRect();
    return { x: e.clientX - r.left, y: e.clientY - r.top };
  }

  private redrawSketch() {
    const c = this.el.sketch;
    const ctx = c.getContext("2d")!;
    ctx.fillStyle = "#fff";
    ctx.fillRect(0, 0, c.width, c.height);
    ctx.strokeStyle = "#111";
    ctx.fillStyle = "#111";
    ctx.lineWidth = 2;
    const all = this.current ? [...this.strokes, this.current] : this.strokes;
    for (const s of all) {
      if (s.length < 2) continue;
      ctx.beginPath();
      ctx.moveTo(s[0].x, s[0].y);
      for (const p of s.slice(1)) ctx.lineTo(p.x, p.y);
      ctx.stroke();
      this.arrowhead(ctx, s);
    }
  }

  /** Direction marker at the stroke end: drawing direction is flow direction. */
  private arrowhead(ctx: CanvasRenderingContext2D, s: Pt[]) {
    const tip = s[s.length - 1];
    let k = s.length - 2;
    while (k > 0 && Math.hypot(tip.x - s[k].x, tip.y - s[k].y) < 6) k--;
    const ang = Math.atan2(tip.y - s[k].y, tip.x - s[k].x);
    const len = 9;
    ctx.beginPath();
    ctx.moveTo(tip.x, tip.y);
    ctx.lineTo(tip.x - len * Math.cos(ang - 0.45), tip.y - len * Math.sin(ang - 0.45));
    ctx.lineTo(tip.x - len * Math.cos(ang + 0.45), tip.y - len * Math.sin(ang + 0.45));
    ctx.closePath();
    ctx.fill();
  }

  private payload() {
    const c = this.el.sketch;
    return toPayload(this.strokes, { width: c.width, height: c.height }, DOMAIN);
  }

  private params(): SimParams {
    return {
      grid: { nx: 64, ny: 64, dx: 1 / 64 },
      dt: 0.02,
      guidance_gain: Number(this.el.gain.value),
      emitter: { x: 0.5, y: 0.15, r: 0.08, rate: 1.0 },
    };
  }

  async submit() {
    const payload = this.payload();
    if (!payload) {
      this.error("draw at least one stroke");
      return;
    }
    this.clearError();
    try {
      if (this.sessionId) {
        // live session: redraw retargets instead of restarting
        const r = await this.client.retarget(this.sessionId, payload);
        this.setStatus(`retargeted (cosine ${fmtCosine(r.fit_report)})`);
        return;
      }
      const r = await this.client.createSession(this.params(), payload);
      this.sessionId = r.id;
      this.shownFrames = 0;
      this.setStatus(`session ${r.id} (cosine ${fmtCosine(r.fit_report)})`);
      this.startPolling();
    } catch (err) {
      this.error(describe(err));
    }
  }

  private startPolling() {
    if (this.timer !== null) return;
    this.timer = setInterval(() => void this.tick(), POLL_MS) as unknown as number;
  }

  /** One poll: request a step batch unless paused or a request is in flight,
   * then show the newest frame the server has. */
  private async tick() {
    const id = this.sessionId;
    if (!id || this.paused || this.inFlight) return;
    this.inFlight = true;
    try {
      await this.client.steps(id, STEP_BATCH);
      const info = await this.client.info(id);
      if (info.frames > this.shownFrames) {
        this.shownFrames = info.frames;
        await this.showFrame(id, info.frames - 1);
        this.setStatus(`step ${info.step_index}, t = ${info.time.toFixed(2)}`);
      }
      this.clearError();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) return; // already stepping
      this.error(describe(err));
    } finally {
      this.inFlight = false;
    }
  }

  private async showFrame(id: string, n: number) {
    const blob = new Blob([await this.client.frame(id, n)], { type: "image/png" });
    const url = URL.createObjectURL(blob);
    try {
      const img = new Image();
      await new Promise<void>((ok, bad) => {
        img.onload = () => ok();
        img.onerror = () => bad(new Error("frame decode failed"));
        img.src = url;
      });
      const c = this.el.smoke;
      const ctx = c.getContext("2d")!;
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(img, 0, 0, c.width, c.height);
    } finally {
      URL.revokeObjectURL(url);
    }
  }

  private setStatus(text: string) {
    this.el.status.textContent = text;
  }

  private error(text: string) {
    this.el.banner.textContent = text;
    this.el.banner.style.display = "block";
  }

  private clearError() {
    this.el.banner.style.display = "none";
  }
}

function fmtCosine(r: { median_cosine?: number | null }): string {
  return r.median_cosine == null ? "n/a" : r.median_cosine.toFixed(3);
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return "server unreachable, is `smokeflow serve` running?";
}

export function boot(baseUrl = "http://127.0.0.1:8000") {
  new App(grab(), baseUrl);
}
