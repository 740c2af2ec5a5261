"""Scenario configuration: YAML with unit-suffixed keys, loaded into dataclasses.

Every physical quantity carries its unit in the key name (``b_m``, ``dt_s``,
``E_Pa``). Unknown keys and wrongly typed values raise :class:`ParseError`
naming the offending field and, when available, its line.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .actuator import DEFAULT_RPE_SLOPE, ActuatorGeometry, HyperelasticParams
from .bdf import BdfScheme
from .constitutive import CrossSectionGeometry, MaterialLaw
from .dynamics import RPE_MODES, ActuationInput, Manipulator
from .errors import ParseError
from .shooting import SolverConfig
from .signals import SIGNAL_TYPES, Constant, PressureProgram, Ramp, Sinusoid, Tabulated


def _key(name: str, **kw):
    """Dataclass field whose YAML key is ``name``."""
    return field(metadata={"key": name}, **kw)


@dataclass
class GeometryConfig:
    b: float = _key("b_m", default=0.055)
    R_i: float = _key("R_i_m", default=9.5e-3)
    R_f: float = _key("R_f_m", default=12.5e-3)
    R_o: float = _key("R_o_m", default=14.0e-3)
    l_o: float = _key("l_o_m", default=0.170)
    l_cap: float = _key("l_cap_m", default=0.015)
    phi: float = _key("phi_deg", default=120.0)


@dataclass
class MaterialConfig:
    law: str = _key("law", default="homogeneous")
    E: float = _key("E_Pa", default=289142.05)
    a1: float = _key("a1_per_N", default=0.00742681)
    a2: float = _key("a2_per_N2", default=0.00031962)
    gamma: float = _key("gamma", default=0.4094)
    rho: float = _key("rho_kg_m3", default=1100.0)


@dataclass
class RpeConfig:
    mode: str = _key("mode", default="equivalent-force")
    slope: float = _key("slope_per_bar", default=DEFAULT_RPE_SLOPE)
    use_stretch: bool = _key("use_stretch", default=False)


@dataclass
class TubeConfig:
    """Continuum actuator model parameters used by ``rpe-fit``."""

    mu: float = _key("mu_Pa", default=1.0e5)
    c1: float = _key("c1", default=0.8)
    c2: float = _key("c2", default=0.2)
    E_fiber: float = _key("E_fiber_Pa", default=5.0e7)
    psi: float = _key("psi_deg", default=3.0)
    p_start: float = _key("p_start_bar", default=0.0)
    p_stop: float = _key("p_stop_bar", default=0.65)
    p_step: float = _key("p_step_bar", default=0.05)


@dataclass
class LoadsConfig:
    gravity: list = _key("gravity_m_s2", default_factory=lambda: [0.0, 0.0, -9.81])
    cap_mass: float = _key("cap_mass_kg", default=0.02)
    self_weight: bool = _key("self_weight", default=True)
    tip_force: list = _key("tip_force_N", default_factory=lambda: [0.0, 0.0, 0.0])
    tip_moment: list = _key("tip_moment_Nm", default_factory=lambda: [0.0, 0.0, 0.0])
    dist_force: list = _key("dist_force_N_per_m", default_factory=lambda: [0.0, 0.0, 0.0])
    dist_moment: list = _key("dist_moment_Nm_per_m", default_factory=lambda: [0.0, 0.0, 0.0])


@dataclass
class SimulationConfig:
    nodes: int = _key("nodes", default=50)
    dt: float = _key("dt_s", default=1.0 / 30.0)
    timeframe: float = _key("timeframe_s", default=1.0)
    scheme: str = _key("scheme", default="bdf-alpha")
    alpha: float = _key("alpha", default=-0.2)
    spatial: str = _key("spatial", default="rk4")
    initial: str = _key("initial", default="static")


@dataclass
class SolverSection:
    tol_force: float = _key("tol_force_N", default=1e-8)
    tol_moment: float = _key("tol_moment_Nm", default=1e-9)
    max_iter: int = _key("max_iter", default=100)
    fd_step: float = _key("fd_step", default=1e-7)
    lm_damping_init: float = _key("lm_damping_init", default=1e-3)
    method: str = _key("method", default="lm")
    warm_start: bool = _key("warm_start", default=True)


@dataclass
class SweepConfig:
    case: str = _key("case", default="a")
    p_start: float = _key("p_start_bar", default=0.15)
    p_stop: float = _key("p_stop_bar", default=0.65)
    p_step: float = _key("p_step_bar", default=0.05)


@dataclass
class BenchmarkConfig:
    nodes: list = _key("nodes", default_factory=lambda: [50, 200])
    alphas: list = _key("alphas", default_factory=lambda: [-0.1, -0.2, -0.3])
    reference_nodes: int = _key("reference_nodes", default=800)
    reference_dt: float = _key("reference_dt_s", default=1.0 / 240.0)
    cache_dir: str = _key("cache_dir", default=".softrod_cache")
    repeats: int = _key("repeats", default=1)


@dataclass
class ConvergenceConfig:
    spatial_euler_nodes: list = _key("spatial_euler_nodes", default_factory=lambda: [50, 100, 200, 400])
    spatial_rk4_nodes: list = _key("spatial_rk4_nodes", default_factory=lambda: [8, 16, 32, 64])
    curvature: float = _key("curvature_per_m", default=6.0)
    temporal_dts: list = _key(
        "temporal_dt_s", default_factory=lambda: [1.0 / 15.0, 1.0 / 30.0, 1.0 / 60.0, 1.0 / 120.0]
    )
    temporal_nodes: int = _key("temporal_nodes", default=20)
    temporal_timeframe: float = _key("temporal_timeframe_s", default=1.0)
    # small steps make the shooting problem ill-conditioned, so these cannot go much lower
    initial: str = _key("temporal_initial", default="slow")
    tol_force: float = _key("tol_force_N", default=1e-9)
    tol_moment: float = _key("tol_moment_Nm", default=1e-10)


INITIAL_CONDITIONS = ("static", "rest", "slow")

DEFAULT_ACTUATION = [
    {"type": "sinusoid", "mean_bar": 0.35, "amplitude_bar": 0.25, "omega_rad_s": 1.0,
     "phase_rad": 4.0 * math.pi / 3.0, "phi0_rad": 0.0},
    {"type": "constant", "value_bar": 0.0},
    {"type": "constant", "value_bar": 0.0},
]

SIGNAL_KEYS = {
    "constant": {"value_bar": "value"},
    "ramp": {"start_bar": "start", "end_bar": "end", "t0_s": "t0", "t1_s": "t1"},
    "sinusoid": {"mean_bar": "mean", "amplitude_bar": "amplitude", "omega_rad_s": "omega",
                 "phase_rad": "phase", "phi0_rad": "phi0"},
    "tabulated": {"times_s": "times", "values_bar": "values"},
}


@dataclass
class ScenarioConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    rpe: RpeConfig = field(default_factory=RpeConfig)
    tube: TubeConfig = field(default_factory=TubeConfig)
    loads: LoadsConfig = field(default_factory=LoadsConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    actuation: list = field(default_factory=lambda: [dict(d) for d in DEFAULT_ACTUATION])
    static_sweep: SweepConfig = field(default_factory=SweepConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    output_dir: str = "out"

    # -- builders -----------------------------------------------------------
    def cross_section(self) -> CrossSectionGeometry:
        g = self.geometry
        return CrossSectionGeometry(b=g.b, R_i=g.R_i, R_o=g.R_o)

    def material_law(self) -> MaterialLaw:
        m = self.material
        return MaterialLaw(kind=m.law, E_const=m.E, a1=m.a1, a2=m.a2, gamma=m.gamma, rho=m.rho)

    def manipulator(self) -> Manipulator:
        return Manipulator(geometry=self.cross_section(), law=self.material_law(), length=self.geometry.l_o)

    def pressure_program(self) -> PressureProgram:
        return PressureProgram(tuple(build_signal(d) for d in self.actuation))

    def actuation_input(self, pressures=None) -> ActuationInput:
        ld = self.loads
        return ActuationInput(
            pressures=self.pressure_program() if pressures is None else pressures,
            cap_mass=ld.cap_mass,
            gravity=np.array(ld.gravity, dtype=float),
            self_weight=ld.self_weight,
            tip_force=np.array(ld.tip_force, dtype=float),
            tip_moment=np.array(ld.tip_moment, dtype=float),
            dist_force=np.array(ld.dist_force, dtype=float),
            dist_moment=np.array(ld.dist_moment, dtype=float),
            rpe_mode=self.rpe.mode,
            rpe_slope=self.rpe.slope,
            rpe_use_stretch=self.rpe.use_stretch,
        )

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            tol_force=s.tol_force,
            tol_moment=s.tol_moment,
            max_iter=s.max_iter,
            fd_step=s.fd_step,
            lm_damping_init=s.lm_damping_init,
            method=s.method,
            warm_start=s.warm_start,
        )

    def scheme(self) -> BdfScheme:
        sim = self.simulation
        return BdfScheme(sim.scheme, dt=sim.dt, alpha=sim.alpha if sim.scheme == "bdf-alpha" else 0.0)

    def actuator_geometry(self) -> ActuatorGeometry:
        g, t = self.geometry, self.tube
        return ActuatorGeometry(R_i=g.R_i, R_m=g.R_f, R_o=g.R_o, psi=math.radians(t.psi), L0=g.l_o)

    def hyperelastic(self) -> HyperelasticParams:
        t = self.tube
        return HyperelasticParams(mu=t.mu, c1=t.c1, c2=t.c2, E_fiber=t.E_fiber)

    def validate(self) -> None:
        """Cross-field checks; raises :class:`ParseError` naming the field."""
        checks = [
            (self.material.law in ("homogeneous", "inhomogeneous"), "material.law", "must be homogeneous or inhomogeneous"),
            (self.rpe.mode in RPE_MODES, "rpe.mode", f"must be one of {RPE_MODES}"),
            (self.simulation.spatial in ("euler", "rk4"), "simulation.spatial", "must be euler or rk4"),
            (self.simulation.initial in INITIAL_CONDITIONS, "simulation.initial", f"must be one of {INITIAL_CONDITIONS}"),
            (self.solver.method in ("lm", "dogleg"), "solver.method", "must be lm or dogleg"),
            (self.static_sweep.case in ("a", "b", "all"), "static_sweep.case", "must be a, b or all"),
            (self.simulation.nodes >= 2, "simulation.nodes", "must be at least 2"),
            (self.simulation.dt > 0.0, "simulation.dt_s", "must be positive"),
            (self.simulation.timeframe > 0.0, "simulation.timeframe_s", "must be positive"),
            (abs(self.geometry.phi - 120.0) < 1e-12, "geometry.phi_deg", "only the symmetric 120 deg layout is supported"),
            (len(self.actuation) == 3, "actuation", "needs exactly three signals"),
        ]
        for ok, name, msg in checks:
            if not ok:
                raise ParseError(msg, field=name)
        try:
            self.scheme()
            self.manipulator()
            self.solver_config()
            self.actuator_geometry()
            self.hyperelastic()
            self.pressure_program()
        except ParseError:
            raise
        except ValueError as exc:
            raise ParseError(str(exc)) from exc


def build_signal(spec: dict):
    kind = spec.get("type")
    if kind not in SIGNAL_TYPES:
        raise ParseError(f"unknown signal type {kind!r}", field="actuation.type")
    names = SIGNAL_KEYS[kind]
    kwargs = {}
    for key, value in spec.items():
        if key == "type":
            continue
        if key not in names:
            raise ParseError(f"unknown key for {kind} signal", field=f"actuation.{key}")
        kwargs[names[key]] = tuple(value) if isinstance(value, list) else value
    try:
        return SIGNAL_TYPES[kind](**kwargs)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), field="actuation") from exc


def signal_to_dict(sig) -> dict:
    kind = {Constant: "constant", Ramp: "ramp", Sinusoid: "sinusoid", Tabulated: "tabulated"}[type(sig)]
    out = {"type": kind}
    for key, attr in SIGNAL_KEYS[kind].items():
        value = getattr(sig, attr)
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


# -- (de)serialization ---------------------------------------------------------

SECTIONS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _line_map(text: str) -> dict[tuple, int]:
    """1-based line of every mapping key, indexed by its key path."""
    lines: dict[tuple, int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (k.value,)
                lines[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                lines[path + (i,)] = v.start_mark.line + 1
                walk(v, path + (i,))

    try:
        walk(yaml.compose(text), ())
    except yaml.YAMLError:
        pass
    return lines


def _coerce(value, default, name: str, line: int | None):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ParseError("expected true or false", field=name, line=line)
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ParseError("expected an integer", field=name, line=line)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError("expected a number", field=name, line=line)
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ParseError("expected a string", field=name, line=line)
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ParseError("expected a list", field=name, line=line)
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ParseError("expected a list of numbers", field=name, line=line)
        return list(value)
    return value


def _section_from_dict(cls, data, section: str, lines: dict) -> Any:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("expected a mapping", field=section, line=lines.get((section,)))
    obj = cls()
    keys = {f.metadata["key"]: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        line = lines.get((section, key))
        if key not in keys:
            raise ParseError("unknown key", field=f"{section}.{key}", line=line)
        f = keys[key]
        setattr(obj, f.name, _coerce(value, getattr(obj, f.name), f"{section}.{key}", line))
    return obj


def config_from_dict(data: dict, lines: dict | None = None) -> ScenarioConfig:
    lines = lines or {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ParseError("top level must be a mapping")
    cfg = ScenarioConfig()
    for key, value in data.items():
        line = lines.get((key,))
        if key not in SECTIONS:
            raise ParseError("unknown section", field=key, line=line)
        if key == "output_dir":
            cfg.output_dir = _coerce(value, "", key, line)
        elif key == "actuation":
            if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
                raise ParseError("expected a list of signal mappings", field=key, line=line)
            for i, spec in enumerate(value):
                try:
                    build_signal(spec)
                except ParseError as exc:
                    raise ParseError(str(exc).split(" (")[0], field=exc.field, line=lines.get((key, i))) from exc
            cfg.actuation = [dict(v) for v in value]
        else:
            cls = type(getattr(cfg, key))
            setattr(cfg, key, _section_from_dict(cls, value, key, lines))
    cfg.validate()
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out: dict[str, Any] = {}
    for name in SECTIONS:
        value = getattr(cfg, name)
        if dataclasses.is_dataclass(value):
            out[name] = {f.metadata["key"]: getattr(value, f.name) for f in dataclasses.fields(value)}
        elif name == "actuation":
            out[name] = [dict(v) for v in value]
        else:
            out[name] = value
    return out


def loads_config(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"invalid YAML: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None) from exc
    return config_from_dict(data, _line_map(text))


def dumps_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def load_config(path) -> ScenarioConfig:
    return loads_config(Path(path).read_text())


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))
