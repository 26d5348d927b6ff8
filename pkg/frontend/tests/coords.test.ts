import { describe, expect, it } from "vitest";

import {
  canvasToDomain,
  dedup,
  domainToCanvas,
  resample,
  toPayload,
  type Pt,
} from "../src/coords.js";

const SIZE = { width: 512, height: 384 };
const DOMAIN = { lx: 1.0, ly: 1.0 };

describe("coordinate mapping", () => {
  it("flips y: canvas top is domain top", () => {
    const top = canvasToDomain({ x: 0, y: 0 }, SIZE, DOMAIN);
    expect(top.y).toBeCloseTo(DOMAIN.ly, 12);
    const bottom = canvasToDomain({ x: 0, y: SIZE.height }, SIZE, DOMAIN);
    expect(bottom.y).toBeCloseTo(0, 12);
  });

  it("round trips within 0.5 px", () => {
    for (let i = 0; i < 500; i++) {
      const p = { x: Math.random() * SIZE.width, y: Math.random() * SIZE.height };
      const back = domainToCanvas(canvasToDomain(p, SIZE, DOMAIN), SIZE, DOMAIN);
      expect(Math.hypot(back.x - p.x, back.y - p.y)).toBeLessThan(0.5);
    }
  });

  it("maps corners to corners", () => {
    const d = canvasToDomain({ x: SIZE.width, y: SIZE.height }, SIZE, DOMAIN);
    expect(d.x).toBeCloseTo(DOMAIN.lx, 12);
    expect(d.y).toBeCloseTo(0, 12);
  });
});

describe("stroke preprocessing", () => {
  it("dedups identical consecutive points", () => {
    const pts: Pt[] = [
      { x: 1, y: 1 },
      { x: 1, y: 1 },
      { x: 2, y: 2 },
      { x: 2, y: 2 },
      { x: 2, y: 2 },
      { x: 3, y: 3 },
    ];
    expect(dedup(pts)).toHaveLength(3);
  });

  it("resamples to at least 2 px spacing, keeping endpoints", () => {
    const pts: Pt[] = [];
    for (let i = 0; i <= 100; i++) pts.push({ x: i * 0.5, y: 0 }); // 0.5 px apart
    const out = resample(pts);
    expect(out[0]).toEqual({ x: 0, y: 0 });
    expect(out[out.length - 1]).toEqual({ x: 50, y: 0 });
    for (let i = 1; i < out.length - 1; i++) {
      const d = Math.hypot(out[i].x - out[i - 1].x, out[i].y - out[i - 1].y);
      expect(d).toBeGreaterThanOrEqual(2);
    }
  });

  it("rejects degenerate strokes", () => {
    expect(resample([{ x: 5, y: 5 }])).toHaveLength(0);
    expect(
      resample([
        { x: 5, y: 5 },
        { x: 5, y: 5 },
      ]),
    ).toHaveLength(0);
  });

  it("toPayload preserves drawing order and converts y", () => {
    const stroke: Pt[] = [
      { x: 0, y: SIZE.height },
      { x: SIZE.width, y: 0 },
    ];
    const payload = toPayload([stroke], SIZE, DOMAIN);
    expect(payload).not.toBeNull();
    const pts = payload!.strokes[0].points;
    expect(pts[0][0]).toBeCloseTo(0, 12);
    expect(pts[0][1]).toBeCloseTo(0, 12);
    expect(pts[1][0]).toBeCloseTo(1, 12);
    expect(pts[1][1]).toBeCloseTo(1, 12);
  });

  it("toPayload returns null when nothing survives", () => {
    expect(toPayload([], SIZE, DOMAIN)).toBeNull();
    expect(toPayload([[{ x: 1, y: 1 }]], SIZE, DOMAIN)).toBeNull();
  });
});
