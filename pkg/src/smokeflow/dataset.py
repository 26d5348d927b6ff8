"""Batch generation of (sketch, stream function, velocity) training triples,
plus the MSE metric and [0, 1] normalization used for evaluation and display.

Randomness comes from numpy's seeded PCG64 generator; each simulation draws
its parameters from an independently spawned child seed, so output is
reproducible regardless of scheduling.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import hhd, sim, streamline
from .fields import Grid, MacVelocity, ScalarField, write_field

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetConfig:
    output_dir: str
    sims: int = 10
    steps: int = 80
    snapshot_every: int = 10
    grid: Grid = field(default_factory=lambda: Grid(64, 64, 1.0 / 64))
    dt: float = 0.02
    rho: float = 1.0
    fx_range: tuple = (-0.5, 0.5)
    fy_range: tuple = (0.5, 2.0)
    emitter_x_range: tuple = (0.25, 0.75)
    emitter_y_range: tuple = (0.1, 0.3)
    emitter_rate_range: tuple = (0.5, 2.0)
    emitter_r: float = 0.08
    seed_count: int = streamline.DEFAULT_SEED_COUNT
    sketch_size: int = 256
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.sims < 1:
            raise ValueError("sims must be >= 1")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")

    @classmethod
    def from_json(cls, text: str) -> "DatasetConfig":
        cfg = json.loads(text)
        grid_cfg = cfg.pop("grid", None)
        if grid_cfg is not None:
            nx = grid_cfg.get("nx", 64)
            cfg["grid"] = Grid(nx, grid_cfg.get("ny", 64), grid_cfg.get("dx", 1.0 / nx))
        for key in (
            "fx_range", "fy_range", "emitter_x_range", "emitter_y_range", "emitter_rate_range",
        ):
            if key in cfg:
                cfg[key] = tuple(cfg[key])
        return cls(**cfg)


def _sample_params(config: DatasetConfig, rng: np.random.Generator) -> sim.SimParams:
    return sim.SimParams(
        grid=config.grid,
        dt=config.dt,
        rho=config.rho,
        f_e=(
            float(rng.uniform(*config.fx_range)),
            float(rng.uniform(*config.fy_range)),
        ),
        force_mode=sim.FORCE_DENSITY,
        tol=config.tol,
        steps=config.steps,
        emitter=sim.Emitter(
            x=float(rng.uniform(*config.emitter_x_range)),
            y=float(rng.uniform(*config.emitter_y_range)),
            r=config.emitter_r,
            rate=float(rng.uniform(*config.emitter_rate_range)),
        ),
    )


def _params_record(p: sim.SimParams) -> dict:
    return {
        "dt": p.dt,
        "rho": p.rho,
        "f_e": list(p.f_e),
        "force_mode": p.force_mode,
        "emitter": {"x": p.emitter.x, "y": p.emitter.y, "r": p.emitter.r, "rate": p.emitter.rate},
    }


def snapshot_triple(vel: MacVelocity, config: DatasetConfig):
    """(psi, sketch image) for one velocity snapshot."""
    psi, stats = hhd.stream_function(vel, tol=config.tol)
    seeds = streamline.select_seeds(vel, config.seed_count)
    lines = streamline.trace_all(vel, seeds)
    img = streamline.render_sketch(
        lines, config.sketch_size, config.sketch_size, domain=(vel.grid.lx, vel.grid.ly)
    )
    return psi, stats, img


def generate(config: DatasetConfig):
    """Run all simulations and write SFLD/PNG artifacts plus an NDJSON manifest.

    Returns the list of manifest records. A solver failure aborts only the
    affected simulation.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    children = np.random.SeedSequence(config.seed).spawn(config.sims)
    records = []
    rec_id = 0
    for sim_id, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        params = _sample_params(config, rng)
        state = sim.SimState.at_rest(config.grid)
        try:
            for k in range(config.steps):
                state = sim.step(state, params)
                if (k + 1) % config.snapshot_every != 0:
                    continue
                vel_path = out / f"sim{sim_id:03d}_f{k + 1:04d}_vel.sfld"
                psi_path = out / f"sim{sim_id:03d}_f{k + 1:04d}_psi.sfld"
                png_path = out / f"sim{sim_id:03d}_f{k + 1:04d}_sketch.png"
                psi, _, img = snapshot_triple(state.vel, config)
                write_field(vel_path, state.vel)
                write_field(psi_path, psi)
                Image.fromarray(img, mode="L").save(png_path)
                records.append(
                    {
                        "id": rec_id,
                        "sim_id": sim_id,
                        "frame": k + 1,
                        "velocity": vel_path.name,
                        "psi": psi_path.name,
                        "sketch": png_path.name,
                        "params": _params_record(params),
                    }
                )
                rec_id += 1
        except sim.ProjectionError as exc:
            log.error("sim %d aborted at step %d: %s", sim_id, state.step_index, exc)
            continue
    manifest = out / "manifest.ndjson"
    with open(manifest, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return records


def mse(a, b) -> float:
    """Mean squared error over all stored samples of two same-shaped fields."""
    if isinstance(a, MacVelocity) and isinstance(b, MacVelocity):
        if a.grid != b.grid:
            raise ValueError("grid mismatch")
        da = np.concatenate([a.u.ravel(), a.v.ravel()])
        db = np.concatenate([b.u.ravel(), b.v.ravel()])
    elif isinstance(a, ScalarField) and isinstance(b, ScalarField):
        if a.grid != b.grid or a.siting != b.siting:
            raise ValueError("field kind or grid mismatch")
        da, db = a.data.ravel(), b.data.ravel()
    else:
        raise ValueError("field kind mismatch")
    return float(np.mean((da - db) ** 2))


def normalize01_array(data: np.ndarray) -> np.ndarray:
    lo = float(np.min(data))
    hi = float(np.max(data))
    if hi == lo:
        return np.full_like(np.asarray(data, dtype=np.float64), 0.5)
    return (data - lo) / (hi - lo)


def normalize01(f: ScalarField) -> ScalarField:
    """Rescale a field to [0, 1]; constant fields map to 0.5 everywhere."""
    return ScalarField(f.grid, f.siting, normalize01_array(f.data))


def density_png_bytes(density: ScalarField) -> bytes:
    """Per-frame normalized 8-bit grayscale PNG of a cell density field.

    Image row 0 is the domain top, matching sketch orientation.
    """
    arr = normalize01_array(density.data)
    img = np.rint(arr[::-1, :] * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(img, mode="L").save(buf, format="PNG")
    return buf.getvalue()
