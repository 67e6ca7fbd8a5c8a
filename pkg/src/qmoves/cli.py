"""Command-line entry points: one subcommand per experiment.

Exit codes: 0 success, 2 configuration/usage error, 3 numeric error.
Every run writes its outputs plus a manifest.json into an output
directory (default: a fresh timestamped directory under ./runs or
$QMOVES_STATE_DIR).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .config import PhysicsConfig
from .core import density_and_cdf, ground_state
from .errors import ContractError, DomainError, NumericError, ResourceError
from .manifest import RunManifest, run_directory
from .optimizer import RNG_ID, OptimizerConfig, run_ensemble
from .propagation import (
    PositionLattice,
    SpectralStore,
    default_n_rule,
    fidelity_curve,
    simulate_protocol,
)
from .protocols import (
    Protocol,
    build_metric_table,
    classical_speed_limit,
    default_metric_table,
    make_reference_protocol,
)
from .tunneling import fit_decay_constant, max_tunnel_distance, tunnel_curve

CONFIG_FLAGS = {
    "A": "amp_moving",
    "B": "amp_static",
    "sigma": "sigma",
    "mass": "mass",
    "x_static": "x_static",
    "grid_min": "grid_min",
    "grid_max": "grid_max",
    "grid_points": "n_grid",
    "x_start": "x0_start",
    "x_end": "x0_end",
    "initial_state": "initial_state",
}


def _add_config_flags(parser):
    parser.add_argument("--config", type=Path, help="JSON file with config overrides")
    parser.add_argument("--A", type=float, help="moving tweezer amplitude")
    parser.add_argument("--B", type=float, help="static tweezer amplitude")
    parser.add_argument("--sigma", type=float, help="tweezer width")
    parser.add_argument("--mass", type=float)
    parser.add_argument("--x-static", dest="x_static", type=float)
    parser.add_argument("--grid-min", dest="grid_min", type=float)
    parser.add_argument("--grid-max", dest="grid_max", type=float)
    parser.add_argument("--grid-points", dest="grid_points", type=int)
    parser.add_argument("--x-start", dest="x_start", type=float)
    parser.add_argument("--x-end", dest="x_end", type=float)
    parser.add_argument("--initial-state", dest="initial_state", choices=["joint", "static"])
    parser.add_argument("--out", type=Path, help="output directory (default: runs/...)")


def resolve_config(args) -> PhysicsConfig:
    """Merge precedence: explicit flag > config file > defaults."""
    values: dict = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path is not None:
        try:
            values.update(json.loads(Path(cfg_path).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot read config file {cfg_path}: {exc}") from exc
    for flag, field_name in CONFIG_FLAGS.items():
        v = getattr(args, flag.replace("-", "_"), None)
        if v is not None:
            values[field_name] = v
    return PhysicsConfig.from_dict(values)


def _state_root() -> Path:
    return Path(os.environ.get("QMOVES_STATE_DIR", "runs"))


def _out_dir(args, command: str, cfg: PhysicsConfig) -> Path:
    if args.out is not None:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        return path
    return run_directory(_state_root(), command, cfg.to_dict())


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _finish(out_dir: Path, command: str, cfg: PhysicsConfig, t0: float,
            outputs, inputs=(), rng=None) -> int:
    manifest = RunManifest(
        command=command,
        config=cfg.to_dict(),
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        duration_s=time.time() - t0,
        rng=rng or {},
    )
    manifest.write(out_dir / "manifest.json")
    return 0


def cmd_speed_limit(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    distance = args.L if args.L is not None else cfg.transport_distance
    report = classical_speed_limit(cfg, distance)
    print(f"T_CSL = {report.t_csl_exact:.4f}")
    print(f"T_CSL (harmonic) = {report.t_csl_harmonic:.4f}")
    print(f"a_max = {report.a_max:.2f}")
    print(f"omega = {report.omega:.2f}")
    out_dir = _out_dir(args, "speed-limit", cfg)
    path = out_dir / "speed_limit.json"
    path.write_text(json.dumps({
        "L": distance,
        "t_csl_exact": report.t_csl_exact,
        "t_csl_harmonic": report.t_csl_harmonic,
        "a_max": report.a_max,
        "omega": report.omega,
    }, indent=2))
    return _finish(out_dir, "speed-limit", cfg, t0, [path])


def cmd_ground_state(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    x0 = args.x0 if args.x0 is not None else cfg.x0_start
    energy, psi = ground_state(x0, cfg)
    density, cdf = density_and_cdf(psi)
    print(f"E0 = {energy:.6f}")
    out_dir = _out_dir(args, "ground-state", cfg)
    dens_path = out_dir / "ground_state_density.csv"
    _write_csv(dens_path, ["x", "value"], zip(psi.grid.points, density))
    cdf_path = out_dir / "ground_state_cdf.csv"
    _write_csv(cdf_path, ["x", "value"], zip(psi.grid.points, cdf))
    info_path = out_dir / "ground_state.json"
    info_path.write_text(json.dumps({"x0": x0, "E0": energy}, indent=2))
    return _finish(out_dir, "ground-state", cfg, t0, [dens_path, cdf_path, info_path])


def cmd_metric(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    table = build_metric_table(cfg, args.x0_min, args.x0_max, args.samples)
    out_dir = _out_dir(args, "metric", cfg)
    path = out_dir / "metric.csv"
    _write_csv(path, ["x0", "g"], zip(table.positions, table.g_values))
    print(f"metric table: {args.samples} samples on [{args.x0_min}, {args.x0_max}]")
    print(f"g range: [{table.g_values.min():.4f}, {table.g_values.max():.4f}]")
    return _finish(out_dir, "metric", cfg, t0, [path])


def cmd_geodesic(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    protocol = make_reference_protocol(
        "geodesic", args.T, cfg, ramp_fraction=args.ramp_fraction
    )
    out_dir = _out_dir(args, "geodesic", cfg)
    path = out_dir / "protocol.json"
    path.write_text(protocol.to_json())
    print(f"geodesic protocol written to {path}")
    return _finish(out_dir, "geodesic", cfg, t0, [path])


def cmd_cd(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    kind = "cd_single" if args.kind == "single" else "cd_double"
    protocol = make_reference_protocol(
        kind, args.T, cfg, ramp_fraction=args.ramp_fraction
    )
    out_dir = _out_dir(args, "cd", cfg)
    path = out_dir / "protocol.json"
    path.write_text(protocol.to_json())
    print(f"{kind} protocol written to {path}")
    return _finish(out_dir, "cd", cfg, t0, [path])


def cmd_simulate(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    try:
        protocol = Protocol.from_json(Path(args.protocol).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read protocol file: {exc}") from exc
    stride = 0
    if args.frames:
        n = args.steps or default_n_rule(protocol.duration)
        stride = max(1, n // 60)
    result = simulate_protocol(protocol, cfg, n_steps=args.steps, frame_stride=stride)
    print(f"F = {result.fidelity:.6f}")
    out_dir = _out_dir(args, "simulate", cfg)
    path = out_dir / "result.json"
    payload = {"fidelity": result.fidelity, "protocol_kind": protocol.kind,
               "T": protocol.duration}
    if result.frames is not None:
        payload["frames"] = [
            {"t": float(t), "density": [float(v) for v in dens]}
            for t, dens in result.frames
        ]
    path.write_text(json.dumps(payload))
    return _finish(out_dir, "simulate", cfg, t0, [path], inputs=[args.protocol])


def cmd_fidelity_curve(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    if args.t_list:
        t_list = [float(v) for v in args.t_list.split(",")]
    else:
        t_list = list(np.linspace(args.t_min, args.t_max, args.num))
    lattice = PositionLattice.default()
    table = default_metric_table(cfg) if args.kind in ("geodesic", "cd_double") else None

    def family(t):
        return make_reference_protocol(args.kind, t, cfg, table=table)

    rows = fidelity_curve(family, cfg, lattice, t_list)
    out_dir = _out_dir(args, "fidelity-curve", cfg)
    path = out_dir / "fidelity_curve.csv"
    _write_csv(path, ["T", "F", "protocol_kind"],
               [(r["T"], r["F"], r["protocol_kind"]) for r in rows])
    for r in rows:
        print(f"T={r['T']:.4f}  F={r['F']:.4f}")
    return _finish(out_dir, "fidelity-curve", cfg, t0, [path])


def cmd_optimize(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    from .propagation import build_bank, initial_state, target_state

    lattice = PositionLattice.default()
    bank = build_bank(cfg, lattice, args.T, args.N)
    template = OptimizerConfig(
        n_steps=args.N,
        lattice=lattice,
        max_sweeps=args.max_sweeps,
        tolerance=args.tolerance,
        pin_ends=args.pin_ends,
    )
    out_dir = _out_dir(args, "optimize", cfg)
    psi0, phi = initial_state(cfg), target_state(cfg)
    outputs = []

    def progress(trace):
        path = out_dir / f"trace_{trace.seed:04d}.json"
        path.write_text(json.dumps(trace.to_json_dict()))
        outputs.append(path)
        print(
            f"seed={trace.seed}: F={trace.final_fidelity:.4f} "
            f"sweeps={trace.sweeps} converged={trace.converged}"
        )

    traces, summary = run_ensemble(args.seeds, template, bank, psi0, phi, progress=progress)
    summary_path = out_dir / "summary.csv"
    _write_csv(
        summary_path,
        ["seed", "final_fidelity", "sweeps", "updates"],
        [(t.seed, t.final_fidelity, t.sweeps, t.updates) for t in traces],
    )
    outputs.append(summary_path)
    stats_path = out_dir / "ensemble.json"
    stats_path.write_text(json.dumps(summary, indent=2))
    outputs.append(stats_path)
    print(json.dumps(summary, indent=2))
    return _finish(out_dir, "optimize", cfg, t0, outputs,
                   rng={"algorithm": RNG_ID, "seeds": list(range(args.seeds))})


def cmd_tunnel(args, cfg: PhysicsConfig) -> int:
    t0 = time.time()
    ds = np.linspace(args.d_min, args.d_max, args.num)
    curve = tunnel_curve(cfg, ds)
    out_dir = _out_dir(args, "tunnel", cfg)
    path = out_dir / "tunnel.csv"
    rows = list(curve.rows(cfg))
    _write_csv(
        path,
        ["d", "splitting", "transfer_time", "barrier_height", "E0", "tunneling_regime"],
        [(r["d"], r["splitting"], r["transfer_time"], r["barrier_height"],
          r["E0"], r["tunneling_regime"]) for r in rows],
    )
    outputs = [path]
    fit_lo, fit_hi = 4 * cfg.sigma, 8 * cfg.sigma
    if curve.separations[0] <= fit_lo and curve.separations[-1] >= fit_hi:
        kappa, r_sq = fit_decay_constant(curve, cfg)
        kappa_th = float(np.sqrt(-2 * cfg.mass * curve.ground_energies[-1]) / cfg.hbar)
        t_csl = classical_speed_limit(cfg, cfg.transport_distance).t_csl_exact
        reach = max_tunnel_distance(curve, t_csl)
        info = {
            "kappa_fit": kappa,
            "kappa_theory": kappa_th,
            "r_squared": r_sq,
            "max_distance_within_t_csl": reach,
        }
        info_path = out_dir / "tunnel_fit.json"
        info_path.write_text(json.dumps(info, indent=2))
        outputs.append(info_path)
        print(json.dumps(info, indent=2))
    return _finish(out_dir, "tunnel", cfg, t0, outputs)


def cmd_serve(args, cfg: PhysicsConfig) -> int:
    import uvicorn

    from .service import create_app

    state_dir = args.state_dir or _state_root() / "service"
    Path(state_dir).mkdir(parents=True, exist_ok=True)
    app = create_app(
        cfg=cfg,
        state_dir=Path(state_dir),
        static_dir=args.static_dir,
        bank_budget_mb=args.bank_budget_mb,
    )
    manifest = RunManifest(command="serve", config=cfg.to_dict(),
                           outputs=[str(state_dir)])
    manifest.write(Path(state_dir) / "manifest.json")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmoves",
        description="Single-atom tweezer transport lab: protocols, propagation, "
        "optimization, tunneling, and the transport game service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("speed-limit", help="classical speed limit for a transport distance")
    p.add_argument("--L", type=float, help="transport distance (default: config endpoints)")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_speed_limit)

    p = sub.add_parser("ground-state", help="ground state at a tweezer position")
    p.add_argument("--x0", type=float)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_ground_state)

    p = sub.add_parser("metric", help="adiabatic metric table")
    p.add_argument("--x0-min", dest="x0_min", type=float, default=-1.0)
    p.add_argument("--x0-max", dest="x0_max", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=129)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_metric)

    p = sub.add_parser("geodesic", help="geodesic transport protocol")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--ramp-fraction", dest="ramp_fraction", type=float, default=0.15)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_geodesic)

    p = sub.add_parser("cd", help="counter-diabatic protocol")
    p.add_argument("--kind", choices=["single", "double"], required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--ramp-fraction", dest="ramp_fraction", type=float, default=0.15)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_cd)

    p = sub.add_parser("simulate", help="evolve a protocol file and report fidelity")
    p.add_argument("--protocol", type=Path, required=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--frames", action="store_true")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("fidelity-curve", help="fidelity versus duration for a protocol family")
    p.add_argument("--kind", choices=["cubic", "cd_single", "geodesic", "cd_double"],
                   default="cd_double")
    p.add_argument("--t-min", dest="t_min", type=float, default=0.05)
    p.add_argument("--t-max", dest="t_max", type=float, default=0.2)
    p.add_argument("--num", type=int, default=16)
    p.add_argument("--t-list", dest="t_list", help="comma-separated durations")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_fidelity_curve)

    p = sub.add_parser("optimize", help="stochastic ascent over discretized protocols")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--N", type=int, default=40)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=200)
    p.add_argument("--tolerance", type=float, default=0.0)
    p.add_argument("--pin-ends", dest="pin_ends", action="store_true")
    _add_config_flags(p)
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("tunnel", help="tunnel splitting versus separation")
    p.add_argument("--d-min", dest="d_min", type=float, default=0.0)
    p.add_argument("--d-max", dest="d_max", type=float, default=1.0)
    p.add_argument("--num", type=int, default=81)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_tunnel)

    p = sub.add_parser("serve", help="HTTP service for the transport game")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", dest="static_dir", type=Path)
    p.add_argument("--state-dir", dest="state_dir", type=Path)
    p.add_argument("--bank-budget-mb", dest="bank_budget_mb", type=float, default=1024.0)
    _add_config_flags(p)
    p.set_defaults(handler=cmd_serve)

    return parser


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = resolve_config(args)
        return args.handler(args, cfg)
    except (DomainError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ResourceError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
