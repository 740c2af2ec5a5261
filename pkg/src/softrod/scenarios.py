"""Scenario drivers: static sweeps, dynamic runs, method benchmarks and convergence studies."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .actuator import fit_rpe_polynomial, radial_only_sweep
from .bdf import BdfScheme
from .dynamics import ActuationInput, build_problem
from .errors import NoConvergence, NumericalBlowup
from .kinematics import RodState
from .config import ScenarioConfig, config_to_dict
from .shooting import SolverConfig, solve
from .simulation import RodSimulator, StepResult, Trajectory

CSV_COLUMNS = ("t", "node_index", "s", "x", "y", "z", "h1", "h2", "h3", "h4", "P1", "P2", "P3", "iters", "step_wall_ms")


def central_axis_transform(p_na, R, D_na) -> np.ndarray:
    """Point on the geometric central axis for neutral-axis point ``p_na`` with frame ``R``.

    The neutral axis is offset by ``D_na`` from the centroid; the shift by the
    constant ``D_na`` keeps the base of the central axis at the origin.
    """
    D = np.asarray(D_na, dtype=float)
    return np.asarray(p_na, dtype=float) + D - np.asarray(R) @ D


def central_backbone(state: RodState, D_na) -> np.ndarray:
    return np.array([central_axis_transform(state.p[k], state.rotation(k), D_na) for k in range(state.num_nodes)])


def tcp_position(result: StepResult) -> np.ndarray:
    """Tool center point: end of the central axis."""
    st = result.state
    return central_axis_transform(st.p[-1], st.rotation(st.num_nodes - 1), result.section.D_na)


# -- export ---------------------------------------------------------------------


def trajectory_rows(results: list[StepResult]):
    for res in results:
        st = res.state
        backbone = central_backbone(st, res.section.D_na)
        for k in range(st.num_nodes):
            yield (
                res.t,
                k,
                st.s[k],
                *backbone[k],
                *st.h[k],
                *res.pressures,
                res.iterations,
                res.wall_ms,
            )


def export_trajectory(results: list[StepResult], path) -> Path:
    """One CSV row per (time, node), central-axis positions, fixed column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for row in trajectory_rows(results):
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def write_summary(data, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return path


# -- static sweeps ----------------------------------------------------------------


CASES = {"a": (1.0, 0.0, 0.0), "b": (0.0, 1.0, 1.0), "all": (1.0, 1.0, 1.0)}


def sweep_levels(cfg: ScenarioConfig) -> np.ndarray:
    sw = cfg.static_sweep
    n = int(round((sw.p_stop - sw.p_start) / sw.p_step))
    return np.round(sw.p_start + sw.p_step * np.arange(n + 1), 12)


@dataclass
class SweepLevel:
    pressures: np.ndarray
    result: StepResult | None
    error: str | None = None

    @property
    def tcp(self) -> np.ndarray | None:
        return None if self.result is None else tcp_position(self.result)


def run_static_sweep(cfg: ScenarioConfig, case: str | None = None, levels=None) -> list[SweepLevel]:
    """One static solve per pressure level; failures are recorded and the sweep continues."""
    case = cfg.static_sweep.case if case is None else case
    mask = np.array(CASES[case])
    levels = sweep_levels(cfg) if levels is None else levels
    sim = RodSimulator(
        cfg.manipulator(), cfg.actuation_input(), cfg.simulation.nodes, cfg.simulation.spatial, cfg.solver_config()
    )
    out = []
    G = None
    for p in levels:
        P = mask * p
        try:
            res = sim.static_solve(P, G0=G)
            G = res.G
            out.append(SweepLevel(P, res))
        except (NoConvergence, NumericalBlowup) as exc:
            out.append(SweepLevel(P, None, f"{type(exc).__name__}: {exc}"))
    return out


def sweep_summary(levels: list[SweepLevel]) -> list[dict]:
    rows = []
    for lv in levels:
        row = {"pressures_bar": [float(x) for x in lv.pressures]}
        if lv.result is None:
            row["error"] = lv.error
        else:
            row["tcp_m"] = [float(x) for x in lv.tcp]
            row["iterations"] = int(lv.result.iterations)
        rows.append(row)
    return rows


# -- dynamic runs -------------------------------------------------------------------


def make_simulator(cfg: ScenarioConfig, num_nodes: int | None = None, method: str | None = None) -> RodSimulator:
    sim = cfg.simulation
    return RodSimulator(
        cfg.manipulator(),
        cfg.actuation_input(),
        sim.nodes if num_nodes is None else num_nodes,
        sim.spatial if method is None else method,
        cfg.solver_config(),
    )


def run_dynamic(cfg: ScenarioConfig, scheme: BdfScheme | None = None, num_nodes: int | None = None,
                method: str | None = None) -> Trajectory:
    """Time-march the configured program; blowup or non-convergence is recorded on the trajectory."""
    scheme = cfg.scheme() if scheme is None else scheme
    sim = make_simulator(cfg, num_nodes, method)
    return sim.simulate(scheme, cfg.simulation.timeframe, cfg.simulation.initial)


def tcp_trajectory(traj: Trajectory) -> np.ndarray:
    return np.array([tcp_position(r) for r in traj.steps])


# -- benchmark ----------------------------------------------------------------------


def benchmark_schemes(cfg: ScenarioConfig, dt: float | None = None) -> list[BdfScheme]:
    dt = cfg.simulation.dt if dt is None else dt
    out = [BdfScheme("bdf1", dt), BdfScheme("bdf2", dt)]
    out += [BdfScheme("bdf-alpha", dt, float(a)) for a in cfg.benchmark.alphas]
    out += [BdfScheme("trapezoidal", dt), BdfScheme("bdf3", dt)]
    return out


@dataclass
class BenchmarkCell:
    method: str
    scheme: str
    num_nodes: int
    runtime_s: float
    status: str
    steps_completed: int
    rmse_m: float | None = None
    failed_step: int | None = None

    @property
    def stable(self) -> bool:
        return self.status == "ok"


@dataclass
class BenchmarkTable:
    cells: list[BenchmarkCell] = field(default_factory=list)
    reference_error_m: float | None = None

    def cell(self, method: str, scheme: str, num_nodes: int) -> BenchmarkCell:
        for c in self.cells:
            if (c.method, c.scheme, c.num_nodes) == (method, scheme, num_nodes):
                return c
        raise KeyError((method, scheme, num_nodes))

    def to_dict(self) -> dict:
        return {
            "reference_error_estimate_m": self.reference_error_m,
            "cells": [dataclasses.asdict(c) for c in self.cells],
        }

    def render(self) -> str:
        """Aligned text table: one row per (method, scheme), runtime and RMSE per grid size."""
        sizes = sorted({c.num_nodes for c in self.cells})
        head = f"{'Method':<8}{'Scheme':<18}" + "".join(f"{f'Runtime N={n}':>18}{f'RMSE N={n}':>16}" for n in sizes)
        lines = [head, "-" * len(head)]
        seen = []
        for c in self.cells:
            if (c.method, c.scheme) not in seen:
                seen.append((c.method, c.scheme))
        for method, scheme in seen:
            row = f"{method:<8}{scheme:<18}"
            for n in sizes:
                c = self.cell(method, scheme, n)
                if c.status == "ok":
                    rm = "n/a" if c.rmse_m is None else f"{1e3 * c.rmse_m:.4f} mm"
                    row += f"{c.runtime_s:>16.4f} s{rm:>16}"
                else:
                    label = "Unstable" if c.status == "unstable" else "Failed"
                    row += f"{label:>18}{'-':>16}"
            lines.append(row)
        return "\n".join(lines)


def _config_hash(cfg: ScenarioConfig, extra: dict) -> str:
    data = config_to_dict(cfg)
    for key in ("output_dir", "benchmark", "convergence", "static_sweep"):
        data.pop(key, None)
    data["simulation"] = {k: v for k, v in data["simulation"].items() if k not in ("nodes", "dt_s", "scheme", "alpha", "spatial")}
    blob = json.dumps({"cfg": data, "extra": extra}, sort_keys=True, default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _tip_series(cfg: ScenarioConfig, scheme: BdfScheme, num_nodes: int, method: str) -> tuple[np.ndarray, np.ndarray]:
    traj = run_dynamic(cfg, scheme, num_nodes, method)
    if not traj.completed:
        raise traj.failure
    return traj.times, tcp_trajectory(traj)


def reference_solution(cfg: ScenarioConfig, use_cache: bool = True) -> tuple[np.ndarray, np.ndarray, float]:
    """Fine reference TCP trajectory at the benchmark output times.

    RK4 in space, BDF-alpha(-0.2) in time on ``reference_nodes`` nodes. It is
    computed at ``reference_dt`` and ``2 reference_dt`` and combined by
    second-order Richardson extrapolation; the returned error estimate is the
    max difference between the extrapolated and the finest run. Results are
    cached on disk keyed by a hash of every setting that affects them.
    """
    bm = cfg.benchmark
    dt_out = cfg.simulation.dt
    extra = {"nodes": bm.reference_nodes, "dt": bm.reference_dt, "dt_out": dt_out, "v": 1}
    cache = Path(bm.cache_dir) / f"reference_{_config_hash(cfg, extra)}.npz"
    if use_cache and cache.exists():
        with np.load(cache) as data:
            return data["t"], data["tcp"], float(data["err"])
    fine = BdfScheme("bdf-alpha", bm.reference_dt, -0.2)
    coarse = BdfScheme("bdf-alpha", 2.0 * bm.reference_dt, -0.2)
    t_f, p_f = _tip_series(cfg, fine, bm.reference_nodes, "rk4")
    t_c, p_c = _tip_series(cfg, coarse, bm.reference_nodes, "rk4")
    t_out = dt_out * np.arange(int(round(cfg.simulation.timeframe / dt_out)) + 1)
    idx_f = np.rint(t_out / bm.reference_dt).astype(int)
    idx_c = np.rint(t_out / (2.0 * bm.reference_dt)).astype(int)
    rich = p_f[idx_f] + (p_f[idx_f] - p_c[idx_c]) / 3.0
    err = float(np.max(np.abs(rich - p_f[idx_f])))
    if use_cache:
        cache.parent.mkdir(parents=True, exist_ok=True)
        np.savez(cache, t=t_out, tcp=rich, err=err)
    return t_out, rich, err


def tip_rmse(tcp: np.ndarray, ref: np.ndarray) -> float:
    """Root-mean-square Euclidean TCP error over the shared output frames."""
    n = min(len(tcp), len(ref))
    d = np.linalg.norm(tcp[:n] - ref[:n], axis=1)
    return float(np.sqrt(np.mean(d * d)))


def warm_up(cfg: ScenarioConfig) -> None:
    """Compile the kernels once so that timings exclude JIT work."""
    for method in ("euler", "rk4"):
        run_dynamic(dataclasses.replace(cfg, simulation=dataclasses.replace(cfg.simulation, timeframe=2 * cfg.simulation.dt)),
                    BdfScheme("bdf1", cfg.simulation.dt), 5, method)


def benchmark_methods(cfg: ScenarioConfig, with_reference: bool = True, schemes=None, use_cache: bool = True) -> BenchmarkTable:
    """Run every (spatial method, time scheme, grid size) cell sequentially.

    Runtime is the wall clock of the full run (minimum over ``repeats``);
    failures are recorded per cell.
    """
    warm_up(cfg)
    table = BenchmarkTable()
    ref = None
    if with_reference:
        _, ref, table.reference_error_m = reference_solution(cfg, use_cache)
    schemes = benchmark_schemes(cfg) if schemes is None else schemes
    for method in ("euler", "rk4"):
        for scheme in schemes:
            for N in cfg.benchmark.nodes:
                best = math.inf
                traj = None
                for _ in range(max(1, cfg.benchmark.repeats)):
                    traj = run_dynamic(cfg, scheme, int(N), method)
                    best = min(best, traj.wall_s)
                if traj.completed:
                    status = "ok"
                elif traj.unstable:
                    status = "unstable"
                else:
                    status = "failed"
                cell = BenchmarkCell(method, scheme.label, int(N), best, status, len(traj.steps) - 1,
                                     failed_step=traj.failed_step)
                if status == "ok" and ref is not None:
                    cell.rmse_m = tip_rmse(tcp_trajectory(traj), ref)
                table.cells.append(cell)
    return table


# -- convergence study ----------------------------------------------------------------


def loglog_slope(h, err) -> tuple[float, float]:
    """Least-squares slope of ``log err`` against ``log h`` and its R^2."""
    x = np.log(np.asarray(h, dtype=float))
    y = np.log(np.asarray(err, dtype=float))
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return float(coef[0]), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def arc_tip(curvature: float, length: float) -> np.ndarray:
    """Tip of a planar arc bending towards +x with the base tangent along +z."""
    k = curvature
    return np.array([(1.0 - math.cos(k * length)) / k, 0.0, math.sin(k * length) / k])


def manufactured_arc_error(cfg: ScenarioConfig, method: str, num_nodes: int, curvature: float) -> float:
    """Tip error of a weightless rod under a pure tip moment against the closed-form arc."""
    man = cfg.manipulator()
    section = man.section((0.0, 0.0, 0.0))
    moment = np.array([0.0, section.K_bt[1, 1] * curvature, 0.0])
    act = ActuationInput(cap_mass=0.0, gravity=np.zeros(3), self_weight=False, tip_moment=moment, rpe_mode="off")
    s = man.grid(num_nodes)
    prob = build_problem(man, act, np.zeros(3), s, method, section=section)
    G, state, _ = solve(prob, np.zeros(6), SolverConfig(tol_force=1e-12, tol_moment=1e-13))
    return float(np.linalg.norm(state.tip_position - arc_tip(curvature, man.length)))


@dataclass
class OrderEstimate:
    label: str
    h: list
    errors: list
    slope: float
    r_squared: float


def spatial_convergence(cfg: ScenarioConfig) -> list[OrderEstimate]:
    cv = cfg.convergence
    out = []
    for method, nodes in (("euler", cv.spatial_euler_nodes), ("rk4", cv.spatial_rk4_nodes)):
        h = [cfg.geometry.l_o / (n - 1) for n in nodes]
        err = [manufactured_arc_error(cfg, method, int(n), cv.curvature) for n in nodes]
        slope, r2 = loglog_slope(h, err)
        out.append(OrderEstimate(method, h, err, slope, r2))
    return out


def _tight(cfg: ScenarioConfig) -> ScenarioConfig:
    cv = cfg.convergence
    return dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, tol_force=cv.tol_force, tol_moment=cv.tol_moment))


def temporal_convergence(cfg: ScenarioConfig, schemes=None) -> list[OrderEstimate]:
    """Temporal order of each scheme on the configured program.

    The reference is BDF-alpha(-0.2) at a half and a quarter of the finest
    step, Richardson-extrapolated. Errors are RMS TCP differences at the
    coarsest step's output times; the grid is fixed.
    """
    cv = cfg.convergence
    cfg = _tight(cfg)
    cfg = dataclasses.replace(
        cfg, simulation=dataclasses.replace(cfg.simulation, timeframe=cv.temporal_timeframe, initial=cv.initial)
    )
    N = cv.temporal_nodes
    dts = sorted(cv.temporal_dts, reverse=True)
    dt_min = dts[-1]
    dt_out = dts[0]
    t_out = dt_out * np.arange(int(round(cv.temporal_timeframe / dt_out)) + 1)

    def sampled(scheme):
        traj = run_dynamic(cfg, scheme, N, "rk4")
        if not traj.completed:
            raise traj.failure
        idx = np.rint(t_out / scheme.dt).astype(int)
        return tcp_trajectory(traj)[idx]

    r1 = sampled(BdfScheme("bdf-alpha", dt_min / 2.0, -0.2))
    r2 = sampled(BdfScheme("bdf-alpha", dt_min / 4.0, -0.2))
    ref = r2 + (r2 - r1) / 3.0
    schemes = schemes or [("bdf1", 0.0), ("bdf-alpha", -0.2)]
    out = []
    for kind, alpha in schemes:
        err = []
        for dt in dts:
            tcp = sampled(BdfScheme(kind, dt, alpha))
            err.append(tip_rmse(tcp, ref))
        label = BdfScheme(kind, dts[0], alpha).label
        slope, r2v = loglog_slope(dts, err)
        out.append(OrderEstimate(label, list(dts), err, slope, r2v))
    return out


def run_convergence_study(cfg: ScenarioConfig) -> dict:
    spatial = spatial_convergence(cfg)
    temporal = temporal_convergence(cfg)
    return {
        "spatial": [dataclasses.asdict(e) for e in spatial],
        "temporal": [dataclasses.asdict(e) for e in temporal],
    }


# -- RPE fit ----------------------------------------------------------------------------


def run_rpe_fit(cfg: ScenarioConfig) -> dict:
    """Radial-only continuum equilibria over the configured range and their affine fit."""
    t = cfg.tube
    n = int(round((t.p_stop - t.p_start) / t.p_step))
    levels = np.round(t.p_start + t.p_step * np.arange(n + 1), 12)
    sweep = radial_only_sweep(cfg.actuator_geometry(), cfg.hyperelastic(), levels)
    samples = [(p, st.lambda_z) for p, st in sweep]
    fit = fit_rpe_polynomial(samples)
    return {
        "samples": [{"P_bar": float(p), "lambda_z": float(st.lambda_z), "lambda_r": float(st.lambda_r)} for p, st in sweep],
        "slope_per_bar": fit.a,
        "r_squared": fit.r_squared,
    }


def model_variant_tips(cfg: ScenarioConfig, P_bar, variants=None) -> dict[str, np.ndarray]:
    """Static TCP for each named (material law, RPE mode) variant at pressures ``P_bar``."""
    variants = variants or {
        "homogeneous/no-RPE": ("homogeneous", "off"),
        "homogeneous/RPE": ("homogeneous", "equivalent-force"),
        "inhomogeneous/RPE": ("inhomogeneous", "equivalent-force"),
    }
    out = {}
    for name, (law, mode) in variants.items():
        c = dataclasses.replace(
            cfg,
            material=dataclasses.replace(cfg.material, law=law),
            rpe=dataclasses.replace(cfg.rpe, mode=mode),
        )
        sim = make_simulator(c)
        out[name] = tcp_position(sim.static_solve(np.asarray(P_bar, dtype=float)))
    return out
