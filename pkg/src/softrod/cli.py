"""Command-line entry point: ``softrod <subcommand> [--config FILE] [--out DIR] [overrides]``.

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 numerical instability in a non-benchmark run.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .bdf import KINDS
from .config import ScenarioConfig, load_config, save_config
from .dynamics import RPE_MODES
from .errors import NoConvergence, NumericalBlowup, ParseError
from .scenarios import (
    benchmark_methods,
    export_trajectory,
    run_convergence_study,
    run_dynamic,
    run_rpe_fit,
    run_static_sweep,
    sweep_summary,
    tcp_trajectory,
    write_summary,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_UNSTABLE = 4


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML scenario file (defaults built in)")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--case", choices=["a", "b", "all"], default=None, help="static sweep actuation case")
    parser.add_argument("--scheme", choices=[k for k in KINDS if k != "static"], default=None)
    parser.add_argument("--alpha", type=float, default=None, help="BDF-alpha parameter in [-0.5, 0]")
    parser.add_argument("--spatial", choices=["euler", "rk4"], default=None)
    parser.add_argument("--nodes", type=int, default=None, help="spatial grid size")
    parser.add_argument("--dt", type=float, default=None, help="time step (s)")
    parser.add_argument("--timeframe", type=float, default=None, help="simulated time (s)")
    parser.add_argument("--rpe-mode", choices=list(RPE_MODES), default=None)
    parser.add_argument("--material", choices=["homogeneous", "inhomogeneous"], default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="softrod", description="Cosserat-rod simulation of a three-actuator soft manipulator.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (
        ("static-sweep", "static equilibria over a pressure range"),
        ("dynamic", "time-march the configured pressure program"),
        ("benchmark", "runtime, stability and accuracy of every method pair"),
        ("convergence", "spatial and temporal order estimates"),
        ("rpe-fit", "radial pressure effect from the continuum tube model"),
    ):
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name == "benchmark":
            p.add_argument("--no-reference", action="store_true", help="skip the fine reference and RMSE column")
            p.add_argument("--no-cache", action="store_true", help="recompute the reference even if cached")
        if name == "dynamic":
            p.add_argument("--initial", choices=["static", "rest", "slow"], default=None)
    return ap


def apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    sim = cfg.simulation
    changes = {
        "nodes": args.nodes,
        "dt": args.dt,
        "timeframe": args.timeframe,
        "scheme": args.scheme,
        "alpha": args.alpha,
        "spatial": args.spatial,
        "initial": getattr(args, "initial", None),
    }
    sim = dataclasses.replace(sim, **{k: v for k, v in changes.items() if v is not None})
    cfg = dataclasses.replace(cfg, simulation=sim)
    if args.case is not None:
        cfg = dataclasses.replace(cfg, static_sweep=dataclasses.replace(cfg.static_sweep, case=args.case))
    if args.rpe_mode is not None:
        cfg = dataclasses.replace(cfg, rpe=dataclasses.replace(cfg.rpe, mode=args.rpe_mode))
    if args.material is not None:
        cfg = dataclasses.replace(cfg, material=dataclasses.replace(cfg.material, law=args.material))
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=str(args.out))
    return cfg


def _static_sweep(cfg: ScenarioConfig, out: Path) -> int:
    levels = run_static_sweep(cfg)
    case = cfg.static_sweep.case
    for lv in levels:
        if lv.result is not None:
            tag = "_".join(f"{p:.2f}" for p in lv.pressures)
            export_trajectory([lv.result], out / f"static_case-{case}_{tag}.csv")
    write_summary({"case": case, "levels": sweep_summary(levels)}, out / f"static_case-{case}.yaml")
    for lv in levels:
        msg = lv.error if lv.result is None else "tcp = (" + ", ".join(f"{x:+.6f}" for x in lv.tcp) + ") m"
        print(f"P = {lv.pressures} bar: {msg}")
    return EXIT_NO_CONVERGENCE if any(lv.result is None for lv in levels) else EXIT_OK


def _dynamic(cfg: ScenarioConfig, out: Path) -> int:
    traj = run_dynamic(cfg)
    export_trajectory(traj.steps, out / "trajectory.csv")
    tcp = tcp_trajectory(traj)
    summary = {
        "scheme": traj.scheme,
        "spatial": traj.method,
        "nodes": traj.num_nodes,
        "dt_s": traj.dt,
        "steps_completed": len(traj.steps) - 1,
        "wall_s": traj.wall_s,
        "status": "ok" if traj.completed else ("unstable" if traj.unstable else "no-convergence"),
        "failed_step": traj.failed_step,
        "failure": None if traj.failure is None else str(traj.failure),
        "final_tcp_m": [float(x) for x in tcp[-1]],
    }
    write_summary(summary, out / "dynamic.yaml")
    print(f"{traj.scheme} / {traj.method} / N={traj.num_nodes}: {summary['status']}, "
          f"{summary['steps_completed']} steps in {traj.wall_s:.3f} s")
    if traj.failure is None:
        return EXIT_OK
    print(f"stopped at step {traj.failed_step}: {traj.failure}", file=sys.stderr)
    return EXIT_UNSTABLE if traj.unstable else EXIT_NO_CONVERGENCE


def _benchmark(cfg: ScenarioConfig, out: Path, args: argparse.Namespace) -> int:
    table = benchmark_methods(cfg, with_reference=not args.no_reference, use_cache=not args.no_cache)
    text = table.render()
    out.mkdir(parents=True, exist_ok=True)
    (out / "benchmark.txt").write_text(text + "\n")
    write_summary(table.to_dict(), out / "benchmark.yaml")
    print(text)
    return EXIT_OK


def _convergence(cfg: ScenarioConfig, out: Path) -> int:
    report = run_convergence_study(cfg)
    write_summary(report, out / "convergence.yaml")
    for kind in ("spatial", "temporal"):
        for est in report[kind]:
            print(f"{kind:<9}{est['label']:<18} slope {est['slope']:.3f}  R^2 {est['r_squared']:.5f}")
    return EXIT_OK


def _rpe_fit(cfg: ScenarioConfig, out: Path) -> int:
    report = run_rpe_fit(cfg)
    write_summary(report, out / "rpe_fit.yaml")
    print(f"lambda_z = a P + 1 with a = {report['slope_per_bar']:.8f} 1/bar, R^2 = {report['r_squared']:.5f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ScenarioConfig() if args.config is None else load_config(args.config)
        cfg = apply_overrides(cfg, args)
        cfg.validate()
    except (ParseError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.yaml")
    try:
        if args.command == "static-sweep":
            return _static_sweep(cfg, out)
        if args.command == "dynamic":
            return _dynamic(cfg, out)
        if args.command == "benchmark":
            return _benchmark(cfg, out, args)
        if args.command == "convergence":
            return _convergence(cfg, out)
        return _rpe_fit(cfg, out)
    except NumericalBlowup as exc:
        print(f"numerical instability: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except NoConvergence as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
