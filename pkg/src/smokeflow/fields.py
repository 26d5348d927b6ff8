"""Grid geometry, scalar/staggered field containers, bilinear sampling, SFLD file I/O.

Layout conventions:
  - arrays are indexed [j, i] (j slow, row-major), matching the on-disk order
  - node scalars have shape (ny+1, nx+1), cell scalars (ny, nx)
  - MAC u-components have shape (ny, nx+1) at sites (i*dx, (j+0.5)*dx)
  - MAC v-components have shape (ny+1, nx) at sites ((i+0.5)*dx, j*dx)

All internal arithmetic is float64; file payloads are float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

NODE = "node"
CELL = "cell"

_KIND_NODE = 0
_KIND_CELL = 1
_KIND_MAC = 2

# magic, version u32, kind u8, 3 pad bytes, nx u32, ny u32, dx f64
_HEADER = struct.Struct("<4sIB3xIId")
_MAGIC = b"SFLD"
_VERSION = 1


class FieldFormatError(ValueError):
    """Raised when an SFLD file fails to parse."""


@dataclass(frozen=True)
class Grid:
    """Uniform square-cell discretization of [0, nx*dx] x [0, ny*dx]."""

    nx: int
    ny: int
    dx: float

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid needs nx >= 2 and ny >= 2")
        if not (self.dx > 0 and np.isfinite(self.dx)):
            raise ValueError("grid needs dx > 0")

    @property
    def lx(self) -> float:
        return self.nx * self.dx

    @property
    def ly(self) -> float:
        return self.ny * self.dx

    def cell_centers(self) -> np.ndarray:
        """Positions of all cell centers, shape (ny, nx, 2)."""
        xs = (np.arange(self.nx) + 0.5) * self.dx
        ys = (np.arange(self.ny) + 0.5) * self.dx
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)


@dataclass
class ScalarField:
    grid: Grid
    siting: str  # NODE or CELL
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.siting not in (NODE, CELL):
            raise ValueError(f"unknown siting {self.siting!r}")
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.shape != self.shape:
            raise ValueError(
                f"{self.siting} field on {self.grid.nx}x{self.grid.ny} grid "
                f"expects shape {self.shape}, got {self.data.shape}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        g = self.grid
        return (g.ny + 1, g.nx + 1) if self.siting == NODE else (g.ny, g.nx)

    @classmethod
    def zeros(cls, grid: Grid, siting: str) -> "ScalarField":
        shape = (grid.ny + 1, grid.nx + 1) if siting == NODE else (grid.ny, grid.nx)
        return cls(grid, siting, np.zeros(shape))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.siting, self.data.copy())


@dataclass
class MacVelocity:
    grid: Grid
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = self.grid
        self.u = np.ascontiguousarray(self.u, dtype=np.float64)
        self.v = np.ascontiguousarray(self.v, dtype=np.float64)
        if self.u.shape != (g.ny, g.nx + 1):
            raise ValueError(f"u expects shape {(g.ny, g.nx + 1)}, got {self.u.shape}")
        if self.v.shape != (g.ny + 1, g.nx):
            raise ValueError(f"v expects shape {(g.ny + 1, g.nx)}, got {self.v.shape}")

    @classmethod
    def zeros(cls, grid: Grid) -> "MacVelocity":
        return cls(grid, np.zeros((grid.ny, grid.nx + 1)), np.zeros((grid.ny + 1, grid.nx)))

    def copy(self) -> "MacVelocity":
        return MacVelocity(self.grid, self.u.copy(), self.v.copy())

    def zero_boundary(self) -> "MacVelocity":
        """Enforce the no-flux condition u.n = 0 on all boundary faces, in place."""
        self.u[:, 0] = 0.0
        self.u[:, -1] = 0.0
        self.v[0, :] = 0.0
        self.v[-1, :] = 0.0
        return self

    def max_speed(self) -> float:
        mu = float(np.max(np.abs(self.u))) if self.u.size else 0.0
        mv = float(np.max(np.abs(self.v))) if self.v.size else 0.0
        return max(mu, mv)


def _bilinear(data: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
    """Sample a [j, i] lattice at fractional indices, clamped to the lattice extent."""
    nrows, ncols = data.shape
    fx = np.minimum(np.maximum(fx, 0.0), ncols - 1.0)
    fy = np.minimum(np.maximum(fy, 0.0), nrows - 1.0)
    i0 = np.minimum(np.floor(fx).astype(np.intp), ncols - 2)
    j0 = np.minimum(np.floor(fy).astype(np.intp), nrows - 2)
    tx = fx - i0
    ty = fy - j0
    v00 = data[j0, i0]
    v10 = data[j0, i0 + 1]
    v01 = data[j0 + 1, i0]
    v11 = data[j0 + 1, i0 + 1]
    return (v00 * (1 - tx) + v10 * tx) * (1 - ty) + (v01 * (1 - tx) + v11 * tx) * ty


def _split_xy(x) -> tuple[np.ndarray, np.ndarray, bool]:
    pos = np.asarray(x, dtype=np.float64)
    if pos.shape[-1] != 2:
        raise ValueError("positions must have a trailing axis of length 2")
    if not np.all(np.isfinite(pos)):
        raise ValueError("invalid position")
    scalar = pos.ndim == 1
    return pos[..., 0], pos[..., 1], scalar


def sample_scalar(f: ScalarField, x):
    """Bilinearly interpolate a scalar field at position(s) x.

    Positions are clamped to the field's valid sampling rectangle; exact at
    sites and for fields linear in x and y.
    """
    px, py, scalar = _split_xy(x)
    px = np.minimum(np.maximum(px, 0.0), f.grid.lx)
    py = np.minimum(np.maximum(py, 0.0), f.grid.ly)
    dx = f.grid.dx
    if f.siting == NODE:
        out = _bilinear(f.data, px / dx, py / dx)
    else:
        out = _bilinear(f.data, px / dx - 0.5, py / dx - 0.5)
    return float(out) if scalar else out


def sample_velocity(vel: MacVelocity, x):
    """Interpolate a MAC velocity at position(s) x; each component on its own lattice."""
    px, py, scalar = _split_xy(x)
    px = np.minimum(np.maximum(px, 0.0), vel.grid.lx)
    py = np.minimum(np.maximum(py, 0.0), vel.grid.ly)
    dx = vel.grid.dx
    u = _bilinear(vel.u, px / dx, py / dx - 0.5)
    v = _bilinear(vel.v, px / dx - 0.5, py / dx)
    if scalar:
        return (float(u), float(v))
    return np.stack([u, v], axis=-1)


def _payload_f32(obj) -> bytes:
    if isinstance(obj, ScalarField):
        return obj.data.astype("<f4").tobytes()
    return obj.u.astype("<f4").tobytes() + obj.v.astype("<f4").tobytes()


def write_field(path, obj) -> None:
    """Write a ScalarField or MacVelocity as an SFLD file (f32 payload)."""
    if isinstance(obj, ScalarField):
        kind = _KIND_NODE if obj.siting == NODE else _KIND_CELL
    elif isinstance(obj, MacVelocity):
        kind = _KIND_MAC
    else:
        raise TypeError(f"cannot write {type(obj).__name__} as a field file")
    g = obj.grid
    header = _HEADER.pack(_MAGIC, _VERSION, kind, g.nx, g.ny, g.dx)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_payload_f32(obj))


def read_field(path):
    """Read an SFLD file back as a ScalarField or MacVelocity (float64 data)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FieldFormatError("truncated header")
    magic, version, kind, nx, ny, dx = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise FieldFormatError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise FieldFormatError(f"bad version {version}")
    if kind not in (_KIND_NODE, _KIND_CELL, _KIND_MAC):
        raise FieldFormatError(f"bad kind {kind}")
    try:
        grid = Grid(int(nx), int(ny), float(dx))
    except ValueError as exc:
        raise FieldFormatError(f"bad grid header: {exc}") from exc
    payload = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if kind == _KIND_NODE:
        n = (nx + 1) * (ny + 1)
        if payload.size != n:
            raise FieldFormatError(f"bad payload length {payload.size}, expected {n}")
        return ScalarField(grid, NODE, payload.reshape(ny + 1, nx + 1).astype(np.float64))
    if kind == _KIND_CELL:
        n = nx * ny
        if payload.size != n:
            raise FieldFormatError(f"bad payload length {payload.size}, expected {n}")
        return ScalarField(grid, CELL, payload.reshape(ny, nx).astype(np.float64))
    nu = (nx + 1) * ny
    nv = nx * (ny + 1)
    if payload.size != nu + nv:
        raise FieldFormatError(f"bad payload length {payload.size}, expected {nu + nv}")
    u = payload[:nu].reshape(ny, nx + 1).astype(np.float64)
    v = payload[nu:].reshape(ny + 1, nx).astype(np.float64)
    return MacVelocity(grid, u, v)


def field_kind(obj) -> int:
    """The SFLD kind byte for a field object (0 node, 1 cell, 2 MAC)."""
    if isinstance(obj, MacVelocity):
        return _KIND_MAC
    return _KIND_NODE if obj.siting == NODE else _KIND_CELL
