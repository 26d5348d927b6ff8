/** Canvas <-> domain coordinate mapping and stroke preprocessing.
 *
 * Canvas pixels have y growing downward; domain coordinates have y growing
 * upward with (0, 0) at the bottom-left. The mapping spans the full canvas
 * onto the full domain rectangle.
 */

export type Pt = { x: number; y: number };

export type CanvasSize = { width: number; height: number };
export type Domain = { lx: number; ly: number };

export function canvasToDomain(p: Pt, size: CanvasSize, domain: Domain): Pt {
  return {
    x: (p.x / size.width) * domain.lx,
    y: (1 - p.y / size.height) * domain.ly,
  };
}

export function domainToCanvas(p: Pt, size: CanvasSize, domain: Domain): Pt {
  return {
    x: (p.x / domain.lx) * size.width,
    y: (1 - p.y / domain.ly) * size.height,
  };
}

/** Drop identical consecutive samples (pointer events repeat positions). */
export function dedup(points: Pt[]): Pt[] {
  const out: Pt[] = [];
  for (const p of points) {
    const last = out[out.length - 1];
    if (!last || last.x !== p.x || last.y !== p.y) out.push(p);
  }
  return out;
}

/**
 * Resample a canvas-pixel polyline so consecutive samples are at least
 * minSpacing pixels apart. Endpoints are always kept, so direction and
 * extent survive; a degenerate input (< 2 distinct points) returns [].
 */
export function resample(points: Pt[], minSpacing = 2): Pt[] {
  const pts = dedup(points);
  if (pts.length < 2) return [];
  const out: Pt[] = [pts[0]];
  for (let i = 1; i < pts.length - 1; i++) {
    const last = out[out.length - 1];
    if (Math.hypot(pts[i].x - last.x, pts[i].y - last.y) >= minSpacing) {
      out.push(pts[i]);
    }
  }
  out.push(pts[pts.length - 1]);
  return out;
}

export type StrokePayload = {
  domain: [number, number];
  strokes: { points: [number, number][]; speed: number }[];
};

/** Canvas strokes -> the wire format the service expects, or null if none survive. */
export function toPayload(
  canvasStrokes: Pt[][],
  size: CanvasSize,
  domain: Domain,
  speed = 1.0,
): StrokePayload | null {
  const strokes = canvasStrokes
    .map((s) => resample(s))
    .filter((s) => s.length >= 2)
    .map((s) => ({
      points: s.map((p) => {
        const d = canvasToDomain(p, size, domain);
        return [d.x, d.y] as [number, number];
      }),
      speed,
    }));
  if (strokes.length === 0) return null;
  return { domain: [domain.lx, domain.ly], strokes };
}
