"""Fit a stream function to directed strokes by regularized linear least squares.

This is the deterministic stand-in for a learned sketch-to-stream-function
generator: tangent constraints from the drawing direction are matched by the
curl of a zero-boundary node stream function, with a Laplacian smoothness
penalty, solved by CG on the normal equations. Also hosts the admission
check for fields produced by external generator processes.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import hhd
from .fields import (
    CELL,
    NODE,
    FieldFormatError,
    Grid,
    MacVelocity,
    ScalarField,
    read_field,
    sample_velocity,
)
from .poisson import SolveStats, cg


@dataclass
class Stroke:
    points: np.ndarray  # (n, 2), drawing order = intended flow direction
    speed: float = 1.0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 2 or self.points.shape[0] < 2:
            raise ValueError("a stroke needs at least 2 points of shape (n, 2)")
        if not self.speed > 0:
            raise ValueError("stroke speed must be positive")


@dataclass
class StrokeSet:
    domain: tuple
    strokes: list

    @classmethod
    def from_json(cls, text: str) -> "StrokeSet":
        doc = json.loads(text)
        strokes = [
            Stroke(np.asarray(s["points"], dtype=np.float64), float(s.get("speed", 1.0)))
            for s in doc.get("strokes", [])
        ]
        return cls(tuple(doc["domain"]), strokes)

    def to_json(self) -> str:
        return json.dumps(
            {
                "domain": list(self.domain),
                "strokes": [
                    {"points": s.points.tolist(), "speed": s.speed} for s in self.strokes
                ],
            }
        )


@dataclass(frozen=True)
class FitParams:
    grid: Grid
    lam: float = 1e-2
    sample_spacing: float | None = None  # defaults to dx
    tol: float = 1e-10
    max_iter: int | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


@dataclass
class FitReport:
    no_constraints: bool
    n_samples: int
    stroke_cosines: list  # mean cosine similarity per stroke
    median_cosine: float
    stats: SolveStats = field(repr=False, default=None)


def resample_polyline(points: np.ndarray, spacing: float) -> np.ndarray:
    """Per-segment arc-length resampling at roughly `spacing`; keeps vertices.

    Each segment is split into equal parts with integer-weight interpolation,
    so resampling a reversed polyline yields the bitwise-reversed points.
    """
    seg = np.diff(points, axis=0)
    seglen = np.hypot(seg[:, 0], seg[:, 1])
    if seglen.sum() == 0:
        raise ValueError("degenerate stroke: zero arc length")
    out = [points[0]]
    for j in range(seg.shape[0]):
        if seglen[j] == 0:
            continue
        m = max(int(np.ceil(seglen[j] / spacing)), 1)
        p0, p1 = points[j], points[j + 1]
        for k in range(1, m):
            out.append(((m - k) * p0 + k * p1) / m)
        out.append(p1)
    return np.asarray(out)


def _interior_index(grid: Grid):
    """Flat index over interior nodes (zero Dirichlet boundary eliminated)."""
    return (grid.nx - 1) * (grid.ny - 1)


def _curl_matrices(grid: Grid):
    """Sparse maps from interior psi values to u- and v-face values."""
    nx, ny, dx = grid.nx, grid.ny, grid.dx
    nin = _interior_index(grid)

    def node_col(i, j):
        # interior node (i, j), 1 <= i <= nx-1, 1 <= j <= ny-1
        return (j - 1) * (nx - 1) + (i - 1)

    rows_u, cols_u, vals_u = [], [], []
    for j in range(ny):
        for i in range(nx + 1):
            r = j * (nx + 1) + i
            # u[j, i] = (psi[j+1, i] - psi[j, i]) / dx
            for jj, sgn in ((j + 1, 1.0), (j, -1.0)):
                if 1 <= i <= nx - 1 and 1 <= jj <= ny - 1:
                    rows_u.append(r)
                    cols_u.append(node_col(i, jj))
                    vals_u.append(sgn / dx)
    du = sp.csr_matrix((vals_u, (rows_u, cols_u)), shape=(ny * (nx + 1), nin))

    rows_v, cols_v, vals_v = [], [], []
    for j in range(ny + 1):
        for i in range(nx):
            r = j * nx + i
            # v[j, i] = -(psi[j, i+1] - psi[j, i]) / dx
            for ii, sgn in ((i + 1, -1.0), (i, 1.0)):
                if 1 <= ii <= nx - 1 and 1 <= j <= ny - 1:
                    rows_v.append(r)
                    cols_v.append(node_col(ii, j))
                    vals_v.append(sgn / dx)
    dv = sp.csr_matrix((vals_v, (rows_v, cols_v)), shape=((ny + 1) * nx, nin))
    return du, dv


def _sampling_matrix(pos: np.ndarray, n_i: int, n_j: int, fx: np.ndarray, fy: np.ndarray):
    """Bilinear sampling matrix onto an (n_j, n_i) lattice at fractional coords."""
    m = pos.shape[0]
    fx = np.clip(fx, 0.0, n_i - 1.0)
    fy = np.clip(fy, 0.0, n_j - 1.0)
    i0 = np.clip(np.floor(fx).astype(int), 0, n_i - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, n_j - 2)
    tx = fx - i0
    ty = fy - j0
    rows = np.repeat(np.arange(m), 4)
    cols = np.stack(
        [j0 * n_i + i0, j0 * n_i + i0 + 1, (j0 + 1) * n_i + i0, (j0 + 1) * n_i + i0 + 1],
        axis=-1,
    ).ravel()
    w = np.stack(
        [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty], axis=-1
    ).ravel()
    return sp.csr_matrix((w, (rows, cols)), shape=(m, n_i * n_j))


def _laplacian_interior(grid: Grid):
    """Dimensionless 5-point Laplacian on interior nodes (zero boundary)."""
    nx, ny = grid.nx, grid.ny
    nin = _interior_index(grid)
    rows, cols, vals = [], [], []
    for j in range(1, ny):
        for i in range(1, nx):
            r = (j - 1) * (nx - 1) + (i - 1)
            rows.append(r)
            cols.append(r)
            vals.append(4.0)
            for ii, jj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                if 1 <= ii <= nx - 1 and 1 <= jj <= ny - 1:
                    rows.append(r)
                    cols.append((jj - 1) * (nx - 1) + (ii - 1))
                    vals.append(-1.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(nin, nin))


def constraint_samples(strokes: StrokeSet, spacing: float):
    """(positions, unit tangents, target speeds, stroke ids).

    Samples sit at resampled-segment midpoints with the segment's unit
    direction as tangent, and are sorted by position so the assembled system
    does not depend on stroke traversal bookkeeping (a reversed stroke yields
    an exactly negated right-hand side).
    """
    pos_all, tan_all, spd_all, sid_all = [], [], [], []
    for sid, stroke in enumerate(strokes.strokes):
        pts = resample_polyline(stroke.points, spacing)
        seg = np.diff(pts, axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        keep = seglen > 0
        mid = 0.5 * (pts[:-1] + pts[1:])[keep]
        tan = seg[keep] / seglen[keep, None]
        pos_all.append(mid)
        tan_all.append(tan)
        spd_all.append(np.full(mid.shape[0], stroke.speed))
        sid_all.append(np.full(mid.shape[0], sid, dtype=np.intp))
    if not pos_all:
        return np.zeros((0, 2)), np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=np.intp)
    pos = np.vstack(pos_all)
    tan = np.vstack(tan_all)
    spd = np.concatenate(spd_all)
    sid = np.concatenate(sid_all)
    order = np.lexsort((pos[:, 0], pos[:, 1]))
    return pos[order], tan[order], spd[order], sid[order]


def fit_stream_function(strokes: StrokeSet, params: FitParams):
    """Least-squares stream function whose curl follows the stroke tangents."""
    g = params.grid
    spacing = params.sample_spacing if params.sample_spacing is not None else g.dx
    pos, tan, spd, sid = constraint_samples(strokes, spacing)
    psi = ScalarField.zeros(g, NODE)
    if pos.shape[0] == 0:
        return psi, FitReport(True, 0, [], float("nan"))

    du, dv = _curl_matrices(g)
    su = _sampling_matrix(pos, g.nx + 1, g.ny, pos[:, 0] / g.dx, pos[:, 1] / g.dx - 0.5)
    sv = _sampling_matrix(pos, g.nx, g.ny + 1, pos[:, 0] / g.dx - 0.5, pos[:, 1] / g.dx)
    c = sp.vstack([su @ du, sv @ dv]).tocsr()
    d = np.concatenate([spd * tan[:, 0], spd * tan[:, 1]])
    lap = _laplacian_interior(g)

    ct_d = c.T @ d
    lam = params.lam

    def normal_op(x):
        return c.T @ (c @ x) + lam * (lap.T @ (lap @ x))

    # Jacobi preconditioner on the normal matrix diagonal
    diag = np.asarray((c.multiply(c)).sum(axis=0)).ravel()
    diag += lam * np.asarray((lap.multiply(lap)).sum(axis=0)).ravel()
    diag = np.maximum(diag, np.finfo(float).tiny)

    nin = _interior_index(g)
    max_iter = params.max_iter if params.max_iter is not None else 10 * nin
    z, stats = cg(normal_op, ct_d, params.tol, max_iter, precond=lambda r: r / diag)

    psi.data[1:-1, 1:-1] = z.reshape(g.ny - 1, g.nx - 1)
    vel = hhd.curl_velocity(psi)
    fitted = sample_velocity(vel, pos)
    dots = np.einsum("ij,ij->i", fitted, tan)
    norms = np.hypot(fitted[:, 0], fitted[:, 1])
    cosines = np.where(norms > 0, dots / np.maximum(norms, 1e-300), 0.0)
    per_stroke = [
        float(np.mean(cosines[sid == k])) for k in range(len(strokes.strokes))
    ]
    report = FitReport(
        no_constraints=False,
        n_samples=int(pos.shape[0]),
        stroke_cosines=per_stroke,
        median_cosine=float(np.median(cosines)),
        stats=stats,
    )
    return psi, report


def validate_generated_field(path, expected_kind: str, grid: Grid):
    """Admit an externally generated SFLD file; returns (field, diagnostics).

    expected_kind: "node", "cell" or "mac". Dimension or kind mismatches are
    rejected; MAC divergence/boundary-flux figures are reported, not enforced.
    """
    f = read_field(path)  # may raise FieldFormatError
    if expected_kind == "mac":
        if not isinstance(f, MacVelocity):
            raise FieldFormatError(f"kind mismatch: expected MAC vector in {path}")
    else:
        if not isinstance(f, ScalarField) or f.siting != expected_kind:
            raise FieldFormatError(f"kind mismatch: expected {expected_kind} scalar in {path}")
    if f.grid.nx != grid.nx or f.grid.ny != grid.ny:
        raise FieldFormatError(
            f"dimension mismatch: file is {f.grid.nx}x{f.grid.ny}, expected {grid.nx}x{grid.ny}"
        )
    arrays = (f.u, f.v) if isinstance(f, MacVelocity) else (f.data,)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise FieldFormatError(f"non-finite values in {path}")
    diagnostics = {}
    if isinstance(f, MacVelocity):
        diagnostics["max_divergence"] = float(np.max(np.abs(hhd.divergence(f).data)))
        diagnostics["max_boundary_normal"] = float(
            max(
                np.max(np.abs(f.u[:, 0])),
                np.max(np.abs(f.u[:, -1])),
                np.max(np.abs(f.v[0, :])),
                np.max(np.abs(f.v[-1, :])),
            )
        )
    return f, diagnostics


def run_external_generator(cmd: str, in_path, out_path) -> None:
    """Invoke an external stage command as `CMD <in> <out>`."""
    argv = shlex.split(cmd) + [str(in_path), str(out_path)]
    subprocess.run(argv, check=True)
