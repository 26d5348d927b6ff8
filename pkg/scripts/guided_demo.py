"""End-to-end demo: directed strokes -> stream function -> guided smoke run.

Writes psi.sfld, target.sfld, a streamline sketch of the target, and density
frames for both the guided and unguided runs, then prints how far each run
ends up from the target velocity.

Usage: python3 scripts/guided_demo.py [out_dir]
"""

import json
import sys
from pathlib import Path

import numpy as np

from smokeflow import hhd, reconstruct, sim, streamline
from smokeflow.dataset import density_png_bytes, mse
from smokeflow.fields import Grid, write_field
from PIL import Image


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
    out.mkdir(parents=True, exist_ok=True)
    grid = Grid(64, 64, 1.0 / 64)

    # a clockwise-ish swirl drawn as three directed strokes
    t = np.linspace(0.25 * np.pi, 1.75 * np.pi, 24)
    arc = np.stack([0.5 + 0.3 * np.cos(t), 0.5 + 0.3 * np.sin(t)], axis=1)
    strokes = reconstruct.StrokeSet(
        (grid.lx, grid.ly),
        [
            reconstruct.Stroke(arc, speed=1.0),
            reconstruct.Stroke(np.array([[0.15, 0.2], [0.15, 0.8]]), speed=0.6),
            reconstruct.Stroke(np.array([[0.85, 0.8], [0.85, 0.2]]), speed=0.6),
        ],
    )
    (out / "strokes.json").write_text(strokes.to_json())

    psi, report = reconstruct.fit_stream_function(
        strokes, reconstruct.FitParams(grid=grid)
    )
    print(f"fit: {report.n_samples} samples, median cosine {report.median_cosine:.3f}")
    write_field(out / "psi.sfld", psi)
    target = hhd.curl_velocity(psi)
    write_field(out / "target.sfld", target)

    seeds = streamline.select_seeds(target, 128)
    lines = streamline.trace_all(target, seeds)
    img = streamline.render_sketch(lines, 256, 256, domain=(grid.lx, grid.ly))
    Image.fromarray(img, mode="L").save(out / "target_sketch.png")

    def run(gain, tag):
        params = sim.SimParams(
            grid=grid, dt=0.02, f_e=(0.0, 0.4), guidance_gain=gain, steps=120,
            emitter=sim.Emitter(x=0.5, y=0.15, r=0.08, rate=1.0),
        )
        frame_dir = out / tag
        frame_dir.mkdir(exist_ok=True)

        def save(state):
            if state.step_index % 20 == 0:
                png = density_png_bytes(state.density)
                (frame_dir / f"frame{state.step_index:04d}.png").write_bytes(png)

        state = sim.run(params, target=target if gain else None, on_step=save)
        d = mse(state.vel, target)
        print(f"{tag}: final velocity mse to target {d:.4f}")
        return state

    run(5.0, "guided")
    run(0.0, "unguided")
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()
