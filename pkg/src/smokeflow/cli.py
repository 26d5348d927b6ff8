"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime/solver failure. stdout
carries only machine-readable results (numbers, JSON, paths); diagnostics
go to stderr. Numbers print as lowercase scientific with six decimals.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from PIL import Image

from . import dataset as ds
from . import hhd, reconstruct, sim, streamline
from .fields import (
    FieldFormatError,
    Grid,
    MacVelocity,
    ScalarField,
    read_field,
    write_field,
)


def _fmt(x: float) -> str:
    return f"{x:.6e}"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    p = _Parser(prog="smokeflow", description="2D smoke-flow toolkit")
    subs = p.add_subparsers(dest="command", required=True)

    s = subs.add_parser("simulate", help="run a smoke simulation from a JSON config")
    s.add_argument("--config", required=True, help="simulation config JSON file")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--frames-every", type=int, default=0, help="write a density PNG every N steps")

    s = subs.add_parser("hhd", help="extract the stream function from a velocity SFLD")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--psi", required=True, help="output stream-function SFLD")
    s.add_argument("--tol", type=float, default=1e-10)

    s = subs.add_parser("curl", help="divergence-free velocity from a stream-function SFLD")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)

    s = subs.add_parser("streamlines", help="trace top-speed streamlines to strokes JSON")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--k", type=int, default=streamline.DEFAULT_SEED_COUNT)

    s = subs.add_parser("sketch", help="rasterize strokes JSON to a PNG sketch")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--width", type=int, default=256)
    s.add_argument("--height", type=int, default=256)

    s = subs.add_parser("reconstruct", help="fit a stream function to directed strokes")
    s.add_argument("--strokes", required=True)
    s.add_argument("--psi", required=True)
    s.add_argument("--velocity", help="also write the curl velocity SFLD")
    s.add_argument("--nx", type=int, default=64)
    s.add_argument("--ny", type=int, default=64)
    s.add_argument("--lam", type=float, default=1e-2)

    s = subs.add_parser("guide", help="simulate with guidance toward a target velocity")
    s.add_argument("--config", required=True)
    s.add_argument("--target", required=True, help="target velocity SFLD")
    s.add_argument("--gain", type=float, default=5.0)
    s.add_argument("--out", required=True)
    s.add_argument("--frames-every", type=int, default=1)

    s = subs.add_parser("dataset", help="generate a training dataset")
    s.add_argument("--config", required=True, help="dataset config JSON file")

    s = subs.add_parser("eval", help="evaluation metrics")
    ev = s.add_subparsers(dest="metric", required=True)
    m = ev.add_parser("mse")
    m.add_argument("--a", required=True)
    m.add_argument("--b", required=True)

    s = subs.add_parser("serve", help="run the HTTP session service")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--max-sessions", type=int, default=16)
    s.add_argument("--idle-timeout-secs", type=float, default=600.0)
    return p


def _write_frames(out_dir: Path, state: sim.SimState, every: int):
    if every > 0 and state.step_index % every == 0:
        png = ds.density_png_bytes(state.density)
        (out_dir / f"frame{state.step_index:05d}.png").write_bytes(png)


def _cmd_simulate(args) -> int:
    params = sim.SimParams.from_json(Path(args.config).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = sim.run(params, on_step=lambda s: _write_frames(out, s, args.frames_every))
    write_field(out / "velocity.sfld", state.vel)
    print(str(out / "velocity.sfld"))
    return 0


def _cmd_hhd(args) -> int:
    vel = read_field(args.inp)
    if not isinstance(vel, MacVelocity):
        raise ValueError("hhd expects a MAC velocity SFLD")
    psi, stats = hhd.stream_function(vel, tol=args.tol)
    if not stats.converged:
        print(f"stream-function solve did not converge: {stats.final_residual:.3e}", file=sys.stderr)
        return 2
    write_field(args.psi, psi)
    print(_fmt(stats.final_residual))
    return 0


def _cmd_curl(args) -> int:
    psi = read_field(args.inp)
    if not isinstance(psi, ScalarField) or psi.siting != "node":
        raise ValueError("curl expects a node scalar SFLD")
    write_field(args.out, hhd.curl_velocity(psi))
    print(args.out)
    return 0


def _cmd_streamlines(args) -> int:
    vel = read_field(args.inp)
    if not isinstance(vel, MacVelocity):
        raise ValueError("streamlines expects a MAC velocity SFLD")
    seeds = streamline.select_seeds(vel, args.k)
    lines = streamline.trace_all(vel, seeds)
    Path(args.out).write_text(
        streamline.polylines_to_json(lines, (vel.grid.lx, vel.grid.ly))
    )
    print(args.out)
    return 0


def _cmd_sketch(args) -> int:
    lines, domain = streamline.polylines_from_json(Path(args.inp).read_text())
    img = streamline.render_sketch(lines, args.width, args.height, domain=domain)
    Image.fromarray(img, mode="L").save(args.out)
    print(args.out)
    return 0


def _cmd_reconstruct(args) -> int:
    strokes = reconstruct.StrokeSet.from_json(Path(args.strokes).read_text())
    lx, ly = strokes.domain
    grid = Grid(args.nx, args.ny, lx / args.nx)
    psi, report = reconstruct.fit_stream_function(
        strokes, reconstruct.FitParams(grid=grid, lam=args.lam)
    )
    write_field(args.psi, psi)
    if args.velocity:
        write_field(args.velocity, hhd.curl_velocity(psi))
    print(
        json.dumps(
            {
                "no_constraints": report.no_constraints,
                "n_samples": report.n_samples,
                "median_cosine": None if report.no_constraints else report.median_cosine,
            }
        )
    )
    return 0


def _cmd_guide(args) -> int:
    params = sim.SimParams.from_json(Path(args.config).read_text())
    target = read_field(args.target)
    if not isinstance(target, MacVelocity):
        raise ValueError("guide expects a MAC velocity SFLD target")
    params = sim.SimParams(
        grid=params.grid, dt=params.dt, rho=params.rho, f_e=params.f_e,
        force_mode=params.force_mode, guidance_gain=args.gain, tol=params.tol,
        steps=params.steps, emitter=params.emitter, seed=params.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = sim.run(
        params, target=target, on_step=lambda s: _write_frames(out, s, args.frames_every)
    )
    write_field(out / "velocity.sfld", state.vel)
    print(str(out / "velocity.sfld"))
    return 0


def _cmd_dataset(args) -> int:
    config = ds.DatasetConfig.from_json(Path(args.config).read_text())
    records = ds.generate(config)
    print(len(records))
    return 0


def _cmd_eval(args) -> int:
    a = read_field(args.a)
    b = read_field(args.b)
    print(_fmt(ds.mse(a, b)))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(max_sessions=args.max_sessions, idle_timeout_secs=args.idle_timeout_secs)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "hhd": _cmd_hhd,
    "curl": _cmd_curl,
    "streamlines": _cmd_streamlines,
    "sketch": _cmd_sketch,
    "reconstruct": _cmd_reconstruct,
    "guide": _cmd_guide,
    "dataset": _cmd_dataset,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help exits 0 through here
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (FieldFormatError, ValueError, sim.ProjectionError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
