"""Streamline seeding, RK4 tracing and sketch rasterization.

Seeds sit at cell centers; the k fastest seeds are kept and traced forward
with classical fixed-step RK4. Traced polylines rasterize to white-background
black-stroke grayscale sketches via Bresenham segments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .fields import Grid, MacVelocity, sample_velocity

DEFAULT_SEED_COUNT = 512


@dataclass(frozen=True)
class TraceParams:
    h: float | None = None  # step size; defaults to 0.5*dx
    max_steps: int | None = None  # defaults to 4*max(nx, ny)
    min_speed: float = 1e-4
    bidirectional: bool = False

    def resolve(self, grid: Grid) -> tuple[float, int]:
        h = 0.5 * grid.dx if self.h is None else self.h
        n = 4 * max(grid.nx, grid.ny) if self.max_steps is None else self.max_steps
        if not h > 0:
            raise ValueError("step size must be positive")
        if n < 1:
            raise ValueError("max_steps must be >= 1")
        return h, n


@dataclass
class Polyline:
    points: np.ndarray  # (n, 2)
    seed_speed: float


def select_seeds(vel: MacVelocity, k: int = DEFAULT_SEED_COUNT):
    """The min(k, nx*ny) cell centers with the highest speed, descending.

    Ties break by (j, i) ascending.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    g = vel.grid
    pos = g.cell_centers().reshape(-1, 2)
    uv = sample_velocity(vel, pos)
    speed = np.hypot(uv[:, 0], uv[:, 1])
    jj, ii = np.divmod(np.arange(pos.shape[0]), g.nx)
    order = np.lexsort((ii, jj, -speed))
    order = order[: min(k, pos.shape[0])]
    return [(pos[idx].copy(), float(speed[idx])) for idx in order]


def _rk4_step(vel: MacVelocity, pos: np.ndarray, h: float) -> np.ndarray:
    k1 = sample_velocity(vel, pos)
    k2 = sample_velocity(vel, pos + 0.5 * h * k1)
    k3 = sample_velocity(vel, pos + 0.5 * h * k2)
    k4 = sample_velocity(vel, pos + h * k3)
    return pos + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def trace_all(vel: MacVelocity, seeds, params: TraceParams = TraceParams()):
    """Trace every seed in lockstep; returns one Polyline per seed."""
    g = vel.grid
    h, max_steps = params.resolve(g)
    if len(seeds) == 0:
        return []
    starts = np.asarray([s[0] for s in seeds], dtype=np.float64)
    speeds = [float(s[1]) for s in seeds]
    n = starts.shape[0]

    pts = np.empty((n, max_steps + 1, 2))
    pts[:, 0, :] = starts
    counts = np.ones(n, dtype=np.intp)
    cur = starts.copy()
    alive = np.ones(n, dtype=bool)

    for _ in range(max_steps):
        uv = sample_velocity(vel, cur)
        alive &= np.hypot(uv[:, 0], uv[:, 1]) >= params.min_speed
        if not alive.any():
            break
        nxt = cur.copy()
        nxt[alive] = _rk4_step(vel, cur[alive], h)
        inside = (
            (nxt[:, 0] >= 0.0) & (nxt[:, 0] <= g.lx) & (nxt[:, 1] >= 0.0) & (nxt[:, 1] <= g.ly)
        )
        alive &= inside
        idx = np.flatnonzero(alive)
        pts[idx, counts[idx], :] = nxt[idx]
        counts[idx] += 1
        cur = nxt

    out = []
    for i in range(n):
        out.append(Polyline(pts[i, : counts[i], :].copy(), speeds[i]))
    if params.bidirectional:
        rev = MacVelocity(g, -vel.u, -vel.v)
        back = trace_all(rev, seeds, TraceParams(params.h, params.max_steps, params.min_speed))
        for i, line in enumerate(out):
            merged = np.vstack([back[i].points[::-1], line.points[1:]])
            out[i] = Polyline(merged, line.seed_speed)
    return out


def trace(vel: MacVelocity, seed, params: TraceParams = TraceParams()) -> Polyline:
    """Trace a single streamline from (position, speed) or a bare position."""
    if isinstance(seed, tuple) and len(seed) == 2 and np.shape(seed[0]) == (2,):
        pair = seed
    else:
        pos = np.asarray(seed, dtype=np.float64)
        uv = sample_velocity(vel, pos)
        pair = (pos, float(np.hypot(*uv)))
    return trace_all(vel, [pair], params)[0]


def render_sketch(polylines, width: int = 256, height: int = 256, domain=None) -> np.ndarray:
    """Rasterize polylines to a white (255) uint8 image with black (0) strokes.

    Domain (Lx, Ly) is taken from the first polyline's extent unless given;
    image row 0 is the domain top.
    """
    if width < 8 or height < 8:
        raise ValueError("sketch size must be at least 8x8")
    img = np.full((height, width), 255, dtype=np.uint8)
    if not polylines:
        return img
    if domain is None:
        raise ValueError("domain (Lx, Ly) is required")
    lx, ly = domain
    for line in polylines:
        p = np.asarray(line.points if isinstance(line, Polyline) else line, dtype=np.float64)
        px = np.rint(p[:, 0] / lx * (width - 1)).astype(int)
        py = np.rint((1.0 - p[:, 1] / ly) * (height - 1)).astype(int)
        px = np.clip(px, 0, width - 1)
        py = np.clip(py, 0, height - 1)
        if p.shape[0] == 1:
            img[py[0], px[0]] = 0
            continue
        _draw_segments(img, px, py)
    return img


def _draw_segments(img, px, py):
    """Bresenham-rasterize the open polyline (px, py) onto img in place.

    All segments are expanded at once: step k along a segment's major axis
    puts the minor coordinate at floor((2*k*minor_run + major_run) /
    (2*major_run)), which reproduces the classic integer error loop.
    """
    x0, x1 = px[:-1], px[1:]
    y0, y1 = py[:-1], py[1:]
    dx = np.abs(x1 - x0)
    dy = np.abs(y1 - y0)
    sx = np.where(x1 >= x0, 1, -1)
    sy = np.where(y1 >= y0, 1, -1)
    npix = np.maximum(dx, dy) + 1
    seg = np.repeat(np.arange(x0.shape[0]), npix)
    k = np.arange(npix.sum()) - np.repeat(np.cumsum(npix) - npix, npix)
    dxg, dyg = dx[seg], dy[seg]
    xmaj = dxg >= dyg
    xs = np.where(
        xmaj,
        x0[seg] + sx[seg] * k,
        x0[seg] + sx[seg] * ((2 * k * dxg + dyg) // np.maximum(2 * dyg, 1)),
    )
    ys = np.where(
        xmaj,
        y0[seg] + sy[seg] * ((2 * k * dyg + dxg) // np.maximum(2 * dxg, 1)),
        y0[seg] + sy[seg] * k,
    )
    img[ys, xs] = 0


def polylines_to_json(polylines, domain) -> str:
    """Serialize traced streamlines as the strokes JSON wire format."""
    strokes = [
        {"points": np.asarray(p.points).tolist(), "speed": p.seed_speed} for p in polylines
    ]
    return json.dumps({"domain": list(domain), "strokes": strokes})


def polylines_from_json(text: str):
    """Parse strokes JSON; returns (polylines, (Lx, Ly))."""
    doc = json.loads(text)
    domain = tuple(doc["domain"])
    lines = [
        Polyline(np.asarray(s["points"], dtype=np.float64), float(s.get("speed", 1.0)))
        for s in doc["strokes"]
    ]
    return lines, domain
