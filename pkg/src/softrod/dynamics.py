"""Semi-discretized rod dynamics: loads, actuation, right-hand side and spatial marching.

After replacing every time derivative by ``c0 y + y_h`` the rod equations
become an ODE in arclength alone. :class:`RodProblem` bundles everything one
such ODE needs (section stiffness, actuator forces, loads, history terms) and
integrates it from a base guess ``G = (n(0), m(0))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from . import _kernels
from .actuator import DEFAULT_RPE_SLOPE, PA_PER_BAR
from .constitutive import CrossSectionGeometry, MaterialLaw, SectionState, build_section
from .errors import NumericalBlowup
from .kinematics import E3, IDENTITY_QUAT, RodState, curvature_quat_matrix, quat_to_rotation

RpeMode = Literal["equivalent-force", "strain-transfer", "off"]
RPE_MODES = ("equivalent-force", "strain-transfer", "off")
SpatialMethod = Literal["euler", "rk4"]

BLOWUP_BOUND = 1e8


def _vec3(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).reshape(3)
    return arr


@dataclass(frozen=True)
class Manipulator:
    """Geometry and material of the rod, plus its clamped base pose."""

    geometry: CrossSectionGeometry = field(default_factory=CrossSectionGeometry)
    law: MaterialLaw = field(default_factory=MaterialLaw)
    length: float = 0.170
    base_position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    base_quat: tuple[float, float, float, float] = tuple(IDENTITY_QUAT)

    def __post_init__(self):
        if self.length <= 0.0:
            raise ValueError("rod length must be positive")

    def section(self, P_bar) -> SectionState:
        return build_section(self.geometry, self.law, P_bar)

    def grid(self, num_nodes: int) -> np.ndarray:
        if num_nodes < 2:
            raise ValueError("grid needs at least two nodes")
        return np.linspace(0.0, self.length, num_nodes)


@dataclass
class ActuationInput:
    """Pressure program and external loads.

    ``pressures(t)`` returns the three chamber pressures in bar. Distributed
    and tip loads are constant global-frame vectors. ``rpe_slope`` is the
    per-bar coefficient ``a`` of ``v3 = a P + 1``.
    """

    pressures: Callable[[float], np.ndarray] = lambda t: np.zeros(3)
    cap_mass: float = 0.02
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    self_weight: bool = True
    tip_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    tip_moment: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dist_force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dist_moment: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rpe_mode: RpeMode = "equivalent-force"
    rpe_slope: float = DEFAULT_RPE_SLOPE
    rpe_use_stretch: bool = False

    def __post_init__(self):
        if self.rpe_mode not in RPE_MODES:
            raise ValueError(f"unknown RPE mode {self.rpe_mode!r}")
        if self.cap_mass < 0.0:
            raise ValueError("cap mass must be non-negative")
        for name in ("gravity", "tip_force", "tip_moment", "dist_force", "dist_moment"):
            setattr(self, name, _vec3(getattr(self, name)))

    def pressures_at(self, t: float) -> np.ndarray:
        P = np.asarray(self.pressures(t), dtype=float).reshape(3)
        if np.any(P < 0.0) or not np.all(np.isfinite(P)):
            raise ValueError(f"invalid pressures {P} bar at t={t:g} s")
        return P


@dataclass(frozen=True)
class ActuatorDrive:
    """Axial actuator forces (N, along the local d3) and the rest strains they imply."""

    forces: np.ndarray
    v_star: np.ndarray
    u_star: np.ndarray


def actuator_drive(section: SectionState, P_bar, actuation: ActuationInput) -> ActuatorDrive:
    """Per-actuator force and rest strains for the selected RPE treatment.

    * ``equivalent-force``: ``F_i = P_i A_in + E_i A_m eps_i`` where
      ``eps_i = a P_i`` (or the full stretch ``1 + a P_i`` when
      ``rpe_use_stretch`` is set).
    * ``strain-transfer``: ``F_i = P_i A_in``; the RPE strains become rest
      strains of the section, ``v3* = 1 + sum E_i eps_i / sum E_i`` and
      ``K_bt u* = sum E_i A_m eps_i (y_i, -x_i, 0)`` about the neutral axis.
    * ``off``: ``F_i = P_i A_in``.
    """
    P = np.asarray(P_bar, dtype=float)
    cap = P * PA_PER_BAR * section.A_in
    v_star = E3.copy()
    u_star = np.zeros(3)
    if actuation.rpe_mode == "off":
        return ActuatorDrive(cap, v_star, u_star)
    eps = actuation.rpe_slope * P
    E = section.E
    if actuation.rpe_mode == "equivalent-force":
        stretch_term = 1.0 + eps if actuation.rpe_use_stretch else eps
        return ActuatorDrive(cap + E * section.A_m * stretch_term, v_star, u_star)
    v_star[2] = 1.0 + np.sum(E * eps) / np.sum(E)
    r = section.shifted_offsets
    rhs = section.A_m * np.array([np.sum(E * eps * r[:, 1]), -np.sum(E * eps * r[:, 0]), 0.0])
    u_star = np.linalg.solve(section.K_bt, rhs)
    return ActuatorDrive(cap, v_star, u_star)


@dataclass
class RodProblem:
    """One spatial boundary-value problem (a static solve or one time step)."""

    s: np.ndarray
    method: SpatialMethod
    section: SectionState
    drive: ActuatorDrive
    rho: float
    c0: float
    hist: np.ndarray
    dist_force: np.ndarray
    dist_moment: np.ndarray
    weight_density: np.ndarray
    cap_weight: np.ndarray
    tip_force: np.ndarray
    tip_moment: np.ndarray
    p0: np.ndarray = field(default_factory=lambda: np.zeros(3))
    h0: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())
    bound: float = BLOWUP_BOUND

    def __post_init__(self):
        if self.method not in ("euler", "rk4"):
            raise ValueError(f"unknown spatial method {self.method!r}")
        self.s = np.ascontiguousarray(self.s, dtype=float)
        self.hist = np.ascontiguousarray(self.hist, dtype=float).reshape(history_rows(self.s.size, self.method), 12)
        sec = self.section
        self._K_se_inv = np.ascontiguousarray(sec.K_se_inv)
        self._K_bt_inv = np.ascontiguousarray(sec.K_bt_inv)
        self._rho_a = self.rho * sec.A_total
        self._rho_j = np.ascontiguousarray(self.rho * sec.J)
        self._f_sum = float(np.sum(self.drive.forces))
        self._f_moment = np.ascontiguousarray(self.drive.forces @ sec.shifted_offsets)
        # total distributed force includes the self weight
        self._f_dist = np.ascontiguousarray(self.dist_force + self.weight_density)

    @property
    def num_nodes(self) -> int:
        return self.s.size

    @property
    def force_scale(self) -> float:
        return self.section.mean_modulus * self.section.A_m

    @property
    def moment_scale(self) -> float:
        return self.force_scale * self.section.b

    def initial_state(self, G) -> np.ndarray:
        G = np.asarray(G, dtype=float)
        y0 = np.zeros(_kernels.STATE_DIM)
        y0[0:3] = self.p0
        y0[3:7] = self.h0
        y0[7:13] = G
        return y0

    def tip_targets(self, R_L: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return tip_boundary_targets(R_L, self)

    def integrate(self, G, fast: bool = True) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Integrate from base loads ``G``.

        Returns the node states ``(N, 19)``, the node strains ``(N, 6)`` and the
        history-layout fields ``[q, w, v, u]`` (see :func:`history_rows`).

        Raises:
            NumericalBlowup: a component left ``[-bound, bound]`` or became non-finite.
        """
        y0 = self.initial_state(G)
        if not fast:
            return _integrate_reference(self, y0)
        N = self.num_nodes
        Y = np.empty((N, _kernels.STATE_DIM))
        S = np.empty((N, 6))
        Z = np.empty_like(self.hist)
        status = _kernels.integrate_rod(
            y0,
            self.s,
            self.method == "rk4",
            self.hist,
            self.c0,
            self._K_se_inv,
            self._K_bt_inv,
            self.drive.v_star,
            self.drive.u_star,
            self._rho_a,
            self._rho_j,
            self._f_sum,
            self._f_moment,
            self._f_dist,
            self.dist_moment,
            self.weight_density,
            self.section.D_na,
            self.bound,
            Y,
            S,
            Z,
        )
        if status >= 0:
            raise NumericalBlowup(f"rod state exceeded {self.bound:g} at node {status}", node=int(status))
        return Y, S, Z

    def solve_state(self, G, fast: bool = True) -> RodState:
        Y, S, _ = self.integrate(G, fast=fast)
        return RodState.from_stacked(self.s, Y, S)

    def history_fields(self, G) -> np.ndarray:
        """Fields ``[q, w, v, u]`` at every point the integrator visits, in history layout."""
        return self.integrate(G)[2]


def ode_rhs(y: np.ndarray, problem: RodProblem, hist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Arclength derivative of the 19-component node state, written out in plain numpy.

    ``hist`` is ``[q_h, w_h, v_h, u_h]`` at this arclength. Returns the
    derivative and the recovered strains ``[v, u]``. The compiled kernel
    evaluates the same expressions.
    """
    sec, drive = problem.section, problem.drive
    h = y[3:7]
    n, m, q, w = y[7:10], y[10:13], y[13:16], y[16:19]
    qh, wh, vh, uh = hist[0:3], hist[3:6], hist[6:9], hist[9:12]
    c0 = problem.c0
    R = quat_to_rotation(h)
    v = drive.v_star + np.linalg.solve(sec.K_se, R.T @ n)
    u = drive.u_star + np.linalg.solve(sec.K_bt, R.T @ m)
    u_x_e3 = np.cross(u, E3)
    F = drive.forces
    r = sec.shifted_offsets

    p_s = R @ v
    h_s = 0.5 * curvature_quat_matrix(u) @ h
    rho_a = problem.rho * sec.A_total
    rho_j = problem.rho * sec.J
    n_s = (
        -(problem.dist_force + problem.weight_density)
        + rho_a * R @ (np.cross(w, q) + c0 * q + qh)
        + F.sum() * R @ u_x_e3
    )
    pressure_moment = np.zeros(3)
    for Fi, ri in zip(F, r):
        pressure_moment += Fi * (np.cross(v + np.cross(u, ri), E3) + np.cross(ri, u_x_e3))
    gravity_arm = np.cross(-R @ sec.D_na, problem.weight_density)
    m_s = (
        -(problem.dist_moment + gravity_arm)
        - np.cross(p_s, n)
        + R @ (np.cross(w, rho_j @ w) + c0 * rho_j @ w + rho_j @ wh)
        + R @ pressure_moment
    )
    q_s = np.cross(w, v) + c0 * v + vh - np.cross(u, q)
    w_s = c0 * u + uh + np.cross(w, u)
    return np.concatenate([p_s, h_s, n_s, m_s, q_s, w_s]), np.concatenate([v, u])


def tip_boundary_targets(R_L: np.ndarray, problem: RodProblem) -> tuple[np.ndarray, np.ndarray]:
    """Internal force and moment required at the tip to balance the end cap.

    ``n(L) = F_g + R sum F_i e3 + F_e`` and
    ``m(L) = (-R D) x F_g + R sum r_i x F_i e3 + L_e``, where ``r_i`` are the
    actuator centres measured from the neutral axis and ``-R D`` points from
    the neutral axis to the cap centroid.
    """
    sec, drive = problem.section, problem.drive
    F = drive.forces
    n_target = problem.cap_weight + R_L @ (F.sum() * E3) + problem.tip_force
    local_moment = np.cross(drive.forces @ sec.shifted_offsets, E3)
    cap_arm = -R_L @ sec.D_na
    m_target = np.cross(cap_arm, problem.cap_weight) + R_L @ local_moment + problem.tip_moment
    return n_target, m_target


def integrate_space(rhs: Callable[[float, np.ndarray], np.ndarray], y0, grid, method: SpatialMethod) -> np.ndarray:
    """Generic explicit marching of ``y' = rhs(s, y)`` on ``grid`` (forward Euler or classical RK4).

    Returns the stacked solution with one row per grid node. The rod problem
    calls the compiled kernel instead; this routine is the readable version
    used for manufactured-solution checks and cross-validation.
    """
    s = np.asarray(grid, dtype=float)
    if s.ndim != 1 or s.size < 2 or np.any(np.diff(s) <= 0.0):
        raise ValueError("grid must be strictly increasing with at least two nodes")
    if method not in ("euler", "rk4"):
        raise ValueError(f"unknown spatial method {method!r}")
    y = np.asarray(y0, dtype=float)
    out = np.empty((s.size,) + y.shape)
    out[0] = y
    for j in range(s.size - 1):
        ds = s[j + 1] - s[j]
        k1 = rhs(s[j], y)
        if method == "rk4":
            sm = s[j] + 0.5 * ds
            k2 = rhs(sm, y + 0.5 * ds * k1)
            k3 = rhs(sm, y + 0.5 * ds * k2)
            k4 = rhs(s[j + 1], y + ds * k3)
            y = y + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            y = y + ds * k1
        out[j + 1] = y
    return out


def _integrate_reference(problem: RodProblem, y0: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plain-numpy counterpart of the compiled integrator (same stepping, same checks)."""
    s = problem.s
    N = s.size
    M = N - 1
    H = problem.hist
    Y = np.empty((N, _kernels.STATE_DIM))
    S = np.empty((N, 6))
    Z = np.empty_like(H)
    y = y0.copy()
    y[3:7] /= np.linalg.norm(y[3:7])
    Y[0] = y

    def stage(yy, row):
        dy, strain = ode_rhs(yy, problem, H[row])
        Z[row] = np.concatenate([yy[13:19], strain])
        return dy, strain

    for j in range(M):
        ds = s[j + 1] - s[j]
        k1, S[j] = stage(y, j)
        if problem.method == "rk4":
            k2, _ = stage(y + 0.5 * ds * k1, N + j)
            k3, _ = stage(y + 0.5 * ds * k2, N + M + j)
            k4, _ = stage(y + ds * k3, N + 2 * M + j)
            y = y + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            y = y + ds * k1
        if not np.all(np.abs(y) <= problem.bound):
            raise NumericalBlowup(f"rod state exceeded {problem.bound:g} at node {j + 1}", node=j + 1)
        y[3:7] /= np.linalg.norm(y[3:7])
        Y[j + 1] = y
    _, S[M] = stage(y, M)
    return Y, S, Z


def history_rows(num_nodes: int, method: SpatialMethod) -> int:
    """Rows of the history layout.

    Euler visits only the nodes. RK4 also evaluates three interior stages per
    interval (two at the midpoint, one at the far end), and each keeps its own
    history: rows ``N + j``, ``2N - 1 + j`` and ``3N - 2 + j`` for interval
    ``j``. Using the values the integrator actually visited, rather than
    interpolating node values, makes a steady state an exact fixed point of
    the time step.
    """
    return num_nodes if method == "euler" else num_nodes + 3 * (num_nodes - 1)


def build_problem(
    manipulator: Manipulator,
    actuation: ActuationInput,
    P_bar,
    s: np.ndarray,
    method: SpatialMethod,
    c0: float = 0.0,
    hist: np.ndarray | None = None,
    section: SectionState | None = None,
) -> RodProblem:
    """Assemble the spatial problem for pressures ``P_bar`` and history terms ``hist`` (history layout)."""
    section = manipulator.section(P_bar) if section is None else section
    drive = actuator_drive(section, P_bar, actuation)
    if hist is None:
        hist = np.zeros((history_rows(s.size, method), 12))
    rho = manipulator.law.rho
    weight = rho * section.A_total * actuation.gravity if actuation.self_weight else np.zeros(3)
    return RodProblem(
        s=s,
        method=method,
        section=section,
        drive=drive,
        rho=rho,
        c0=c0,
        hist=hist,
        dist_force=actuation.dist_force,
        dist_moment=actuation.dist_moment,
        weight_density=weight,
        cap_weight=actuation.cap_mass * actuation.gravity,
        tip_force=actuation.tip_force,
        tip_moment=actuation.tip_moment,
        p0=np.asarray(manipulator.base_position, dtype=float),
        h0=np.asarray(manipulator.base_quat, dtype=float),
    )
