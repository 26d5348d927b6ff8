import { describe, expect, it } from "vitest";

import { parseField } from "../src/api.js";

function sfldBuffer(kind: number, nx: number, ny: number, dx: number, data: number[]) {
  const buf = new ArrayBuffer(28 + 4 * data.length);
  const view = new DataView(buf);
  [0x53, 0x46, 0x4c, 0x44].forEach((b, i) => view.setUint8(i, b)); // "SFLD"
  view.setUint32(4, 1, true);
  view.setUint8(8, kind);
  view.setUint32(12, nx, true);
  view.setUint32(16, ny, true);
  view.setFloat64(20, dx, true);
  data.forEach((v, i) => view.setFloat32(28 + 4 * i, v, true));
  return buf;
}

describe("parseField", () => {
  it("reads header and payload", () => {
    const f = parseField(sfldBuffer(0, 2, 2, 0.5, [1, 2, 3, 4, 5, 6, 7, 8, 9]));
    expect(f.kind).toBe(0);
    expect(f.nx).toBe(2);
    expect(f.ny).toBe(2);
    expect(f.dx).toBeCloseTo(0.5, 12);
    expect(Array.from(f.data)).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9]);
  });

  it("rejects a bad magic", () => {
    const buf = sfldBuffer(0, 1, 1, 1, [0, 0, 0, 0]);
    new DataView(buf).setUint8(0, 0x58); // "XFLD"
    expect(() => parseField(buf)).toThrow("bad magic");
  });
});
