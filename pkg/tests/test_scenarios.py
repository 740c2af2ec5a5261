from __future__ import annotations

import csv
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from softrod.config import ScenarioConfig
from softrod.scenarios import (
    CSV_COLUMNS,
    benchmark_methods,
    benchmark_schemes,
    central_axis_transform,
    export_trajectory,
    loglog_slope,
    run_dynamic,
    run_rpe_fit,
    run_static_sweep,
    sweep_summary,
    tip_rmse,
)

CFG = ScenarioConfig()


def _small(cfg=CFG, **sim):
    base = dict(nodes=15, timeframe=0.2)
    base.update(sim)
    return dataclasses.replace(cfg, simulation=dataclasses.replace(cfg.simulation, **base))


def test_central_axis_transform_examples():
    p = np.array([0.01, -0.02, 0.15])
    R = Rotation.from_euler("xyz", [0.3, -0.2, 1.0]).as_matrix()
    assert np.array_equal(central_axis_transform(p, R, np.zeros(3)), p)
    assert np.allclose(central_axis_transform(p, np.eye(3), [0.004, -0.001, 0.0]), p, atol=1e-18)
    d = 0.006
    Rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert central_axis_transform(p, Rz, [d, 0.0, 0.0]) == pytest.approx(p + [d, -d, 0.0], abs=1e-18)


@given(st.integers(0, 2**31 - 1), st.floats(-0.01, 0.01), st.floats(-0.01, 0.01))
def test_central_axis_offset_keeps_distance(seed, dx, dy):
    R = Rotation.random(random_state=seed).as_matrix()
    D = np.array([dx, dy, 0.0])
    p = np.array([0.05, 0.0, 0.1])
    # the central axis point sits at the fixed offset -R D from the shifted neutral point
    assert np.linalg.norm(central_axis_transform(p, R, D) - (p + D)) == pytest.approx(np.linalg.norm(D), abs=1e-15)


def test_static_sweep_cases_are_planar():
    cfg = _small(nodes=30)
    a = run_static_sweep(cfg, "a")
    assert all(lv.result is not None for lv in a)
    assert max(abs(lv.tcp[1]) for lv in a) < 1e-9
    # case (a) bends away from actuator 1, which sits on +x
    assert all(lv.tcp[0] < 0.0 for lv in a)
    b = run_static_sweep(cfg, "b")
    assert max(abs(lv.tcp[1]) for lv in b) < 1e-9
    assert all(lv.tcp[0] > 0.0 for lv in b)


def test_equal_sweep_is_pure_extension():
    levels = run_static_sweep(_small(nodes=30), "all")
    tcp = np.array([lv.tcp for lv in levels])
    assert np.max(np.abs(tcp[:, :2])) < 1e-9
    assert np.all(np.diff(tcp[:, 2]) > 0.0)


def test_zero_pressure_level_is_near_rest():
    (lv,) = run_static_sweep(_small(nodes=30), "a", levels=[0.0])
    assert np.allclose(lv.tcp[:2], 0.0, atol=1e-12)
    # only gravity sag shortens the rod, by well under a millimetre
    assert 0.0 < CFG.geometry.l_o - lv.tcp[2] < 1e-3


def test_sweep_failures_are_recorded():
    cfg = dataclasses.replace(CFG, solver=dataclasses.replace(CFG.solver, max_iter=1))
    levels = run_static_sweep(_small(cfg), "a", levels=[0.3, 0.6])
    assert all(lv.result is None and "NoConvergence" in lv.error for lv in levels)
    assert all("error" in row for row in sweep_summary(levels))


def test_export_columns_and_determinism(tmp_path):
    cfg = _small()
    paths = [export_trajectory(run_dynamic(cfg).steps, tmp_path / f"run{k}.csv") for k in range(2)]
    tables = []
    for path in paths:
        with path.open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == CSV_COLUMNS
        assert len(rows) == 1 + 7 * 15
        t = [float(r[0]) for r in rows[1:]]
        assert t == sorted(t)
        wall = CSV_COLUMNS.index("step_wall_ms")
        tables.append([r[:wall] for r in rows])
    assert tables[0] == tables[1]


def test_homogeneous_export_is_neutral_axis():
    traj = run_dynamic(_small())
    res = traj.steps[-1]
    with_transform = [central_axis_transform(res.state.p[k], res.state.rotation(k), res.section.D_na) for k in range(15)]
    assert np.array_equal(np.array(with_transform), res.state.p)


def test_benchmark_schemes_layout():
    labels = [s.label for s in benchmark_schemes(CFG)]
    assert labels == ["BDF1", "BDF2", "BDF-alpha(-0.1)", "BDF-alpha(-0.2)", "BDF-alpha(-0.3)", "Trapezoidal", "BDF3"]


def test_benchmark_table_structure():
    cfg = dataclasses.replace(_small(timeframe=0.1), benchmark=dataclasses.replace(CFG.benchmark, nodes=[6, 10]))
    table = benchmark_methods(cfg, with_reference=False, schemes=benchmark_schemes(cfg)[:2])
    assert len(table.cells) == 2 * 2 * 2
    text = table.render()
    assert len(text.splitlines()) == 2 + 4
    assert "Runtime N=6" in text and "Runtime N=10" in text
    assert table.cell("rk4", "BDF2", 10).steps_completed == 3
    assert set(table.to_dict()) == {"reference_error_estimate_m", "cells"}


def test_tip_rmse_examples():
    ref = np.random.default_rng(1).standard_normal((31, 3))
    assert tip_rmse(ref, ref) == 0.0
    assert tip_rmse(ref + [0.003, 0.004, 0.0], ref) == pytest.approx(0.005, rel=1e-12)


def test_loglog_slope_exact_power_law():
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    slope, r2 = loglog_slope(h, 3.0 * h**2.5)
    assert slope == pytest.approx(2.5, abs=1e-12) and r2 == pytest.approx(1.0, abs=1e-12)


def test_rpe_fit_report():
    rep = run_rpe_fit(CFG)
    assert rep["slope_per_bar"] > 0.0 and rep["r_squared"] > 0.99
    assert rep["samples"][0]["lambda_z"] == pytest.approx(1.0, abs=1e-10)
    assert len(rep["samples"]) == 14
    assert math.isfinite(rep["samples"][-1]["lambda_r"])
