"""Single fiber-reinforced actuator as a two-layer incompressible hyperelastic tube.

The core is Neo-Hookean; the sheath mixes the same isotropic energy with two
symmetric extensible fiber families. For a given axial stretch ``lambda_z`` and
inner radial stretch ``lambda_r = r_i / R_i`` the tube stays cylindrical, so
every quantity reduces to one-dimensional radial integrals, evaluated here by
adaptive quadrature. ``solve_equilibrium`` drives the radial stress drop and the
axial wall force to their load-case targets with a damped Newton iteration.

The radial pressure effect (RPE) is the axial stretch produced when pressure
acts only on the wall (no end-cap force). Its linear fit ``v3 = a P + 1`` is what
the rod model consumes, with ``P`` in bar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.integrate import quad

from .errors import (
    CollapsedWall,
    DegenerateSamples,
    NoConvergence,
    NonPhysical,
    OutOfWall,
    QuadratureFailure,
)

PA_PER_BAR = 1.0e5
QUAD_EPSREL = 1e-9
QUAD_LIMIT = 200

# Shipped RPE slope (per bar).
DEFAULT_RPE_SLOPE = 0.05324473


@dataclass(frozen=True)
class ActuatorGeometry:
    R_i: float = 9.5e-3
    R_m: float = 12.5e-3
    R_o: float = 14.0e-3
    psi: float = math.radians(3.0)
    L0: float = 0.170

    def __post_init__(self):
        if not (0.0 < self.R_i < self.R_m < self.R_o):
            raise ValueError("radii must satisfy 0 < R_i < R_m < R_o")
        if not (0.0 < self.psi < math.pi / 2):
            raise ValueError("fiber angle must lie in (0, pi/2)")
        if self.L0 <= 0.0:
            raise ValueError("rest length must be positive")


@dataclass(frozen=True)
class HyperelasticParams:
    mu: float = 1.0e5
    c1: float = 0.8
    c2: float = 0.2
    E_fiber: float = 5.0e7

    def __post_init__(self):
        if self.mu <= 0.0 or self.E_fiber <= 0.0:
            raise ValueError("moduli must be positive")
        if self.c1 < 0.0 or self.c2 < 0.0 or abs(self.c1 + self.c2 - 1.0) > 1e-12:
            raise ValueError("volume fractions must be non-negative and sum to 1")


@dataclass(frozen=True)
class DeformationState:
    lambda_z: float = 1.0
    lambda_r: float = 1.0


@dataclass(frozen=True)
class LoadCase:
    """Boundary conditions for :func:`solve_equilibrium` (pressure in Pa, force in N)."""

    kind: Literal["pressurized", "radial_only", "external_force"]
    pressure: float = 0.0
    force: float = 0.0

    @classmethod
    def pressurized(cls, pressure: float) -> "LoadCase":
        return cls("pressurized", pressure=pressure)

    @classmethod
    def radial_only(cls, pressure: float) -> "LoadCase":
        return cls("radial_only", pressure=pressure)

    @classmethod
    def external_force(cls, force: float) -> "LoadCase":
        return cls("external_force", force=force)

    def with_pressure(self, pressure: float) -> "LoadCase":
        return LoadCase(self.kind, pressure=pressure, force=self.force)


def current_radius(geom: ActuatorGeometry, state: DeformationState, R: float) -> float:
    """Deformed radius of the material cylinder that started at ``R``."""
    if state.lambda_z <= 0.0 or state.lambda_r <= 0.0:
        raise NonPhysical("stretches must be positive")
    r_i = state.lambda_r * geom.R_i
    r2 = r_i * r_i + (R * R - geom.R_i**2) / state.lambda_z
    if r2 <= 0.0:
        raise CollapsedWall(f"wall collapses at R={R:g}")
    return math.sqrt(r2)


def _reference_radius(geom: ActuatorGeometry, state: DeformationState, r: float) -> float:
    r_i = state.lambda_r * geom.R_i
    return math.sqrt(geom.R_i**2 + state.lambda_z * (r * r - r_i * r_i))


def deformed_radii(geom: ActuatorGeometry, state: DeformationState) -> tuple[float, float, float]:
    """``(r_i, r_m, r_o)`` from the incompressibility map."""
    return (
        state.lambda_r * geom.R_i,
        current_radius(geom, state, geom.R_m),
        current_radius(geom, state, geom.R_o),
    )


def deformation_gradient(geom: ActuatorGeometry, state: DeformationState, R: float) -> np.ndarray:
    """Diagonal deformation gradient in cylindrical (r, theta, z) components.

    The hoop entry is ``r / R``; together with ``R / (r lambda_z)`` and
    ``lambda_z`` this makes ``det F = 1``.
    """
    tol = 1e-12 * geom.R_o
    if R < geom.R_i - tol or R > geom.R_o + tol:
        raise OutOfWall(f"R={R:g} outside [{geom.R_i:g}, {geom.R_o:g}]")
    r = current_radius(geom, state, R)
    lz = state.lambda_z
    return np.diag([R / (r * lz), r / R, lz])


def fiber_directions(psi: float) -> tuple[np.ndarray, np.ndarray]:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([0.0, c, s]), np.array([0.0, c, -s])


def fiber_invariants(F: np.ndarray, psi: float) -> tuple[float, float, float]:
    """``(I1, I4, I6)`` for the two helical fiber families at angle ``psi``."""
    S1, S2 = fiber_directions(psi)
    s1, s2 = F @ S1, F @ S2
    return float(np.trace(F @ F.T)), float(s1 @ s1), float(s2 @ s2)


def _stress_diffs(f11: float, f22: float, f33: float, outer: bool, params: HyperelasticParams, psi: float):
    # Scalar kernel shared by the quadratures; F is diagonal so no matrices needed.
    if not outer:
        mu = params.mu
        return mu * (f22 * f22 - f11 * f11), mu * (f33 * f33 - f11 * f11)
    iso = params.c1 * params.mu
    c2, s2 = math.cos(psi) ** 2, math.sin(psi) ** 2
    i4 = f22 * f22 * c2 + f33 * f33 * s2
    root = math.sqrt(i4)
    w4 = params.c2 * params.E_fiber * (root - 1.0) / (2.0 * root)
    # Both fiber families share I4 = I6, so their contributions add.
    tt = iso * (f22 * f22 - f11 * f11) + 4.0 * w4 * f22 * f22 * c2
    zz = iso * (f33 * f33 - f11 * f11) + 4.0 * w4 * f33 * f33 * s2
    return tt, zz


def cauchy_stress_diff(
    layer: Literal["in", "out"], F: np.ndarray, params: HyperelasticParams, psi: float
) -> tuple[float, float]:
    """Hydrostatic-free stress differences ``(s_tt - s_rr, s_zz - s_rr)`` for diagonal ``F``."""
    if layer not in ("in", "out"):
        raise ValueError("layer must be 'in' or 'out'")
    return _stress_diffs(F[0, 0], F[1, 1], F[2, 2], layer == "out", params, psi)


def _diffs_at(r: float, geom, params, state, outer: bool):
    R = _reference_radius(geom, state, r)
    lz = state.lambda_z
    return _stress_diffs(R / (r * lz), r / R, lz, outer, params, geom.psi)


def _quad(fun, a: float, b: float, scale: float) -> float:
    out = quad(fun, a, b, epsrel=QUAD_EPSREL, epsabs=1e-14 * scale, limit=QUAD_LIMIT, full_output=1)
    if len(out) > 3:
        raise QuadratureFailure(f"quadrature on [{a:g}, {b:g}] failed: {out[3]}")
    return out[0]


def radial_stress_drop(geom: ActuatorGeometry, params: HyperelasticParams, state: DeformationState) -> float:
    """Integral of ``(s_tt - s_rr) / r`` across both layers (Pa)."""
    r_i, r_m, r_o = deformed_radii(geom, state)
    inner = _quad(lambda r: _diffs_at(r, geom, params, state, False)[0] / r, r_i, r_m, params.mu)
    outer = _quad(lambda r: _diffs_at(r, geom, params, state, True)[0] / r, r_m, r_o, params.mu)
    return inner + outer


def axial_load(geom: ActuatorGeometry, params: HyperelasticParams, state: DeformationState, P: float) -> float:
    """Axial force (N) carried by the wall when the bore pressure is ``P`` (Pa).

    The radial stress obeys ``s_rr(r_i) = -P`` and the radial equilibrium ODE.
    Integrating ``s_rr r`` by parts turns the nested integral into single
    quadratures of the stress differences.
    """
    r_i, r_m, r_o = deformed_radii(geom, state)
    drop = radial_stress_drop(geom, params, state)

    def kernel(r, outer):
        tt, zz = _diffs_at(r, geom, params, state, outer)
        return (zz - 0.5 * tt) * r

    scale = params.mu * geom.R_o**2
    body = _quad(lambda r: kernel(r, False), r_i, r_m, scale) + _quad(lambda r: kernel(r, True), r_m, r_o, scale)
    return 2.0 * math.pi * body + math.pi * ((drop - P) * r_o**2 + P * r_i**2)


def load_targets(geom: ActuatorGeometry, state: DeformationState, bc: LoadCase) -> tuple[float, float]:
    """Target ``(radial stress drop, axial wall force)`` for a load case."""
    if bc.kind == "pressurized":
        r_i = state.lambda_r * geom.R_i
        return bc.pressure, bc.pressure * math.pi * r_i * r_i
    if bc.kind == "radial_only":
        return bc.pressure, 0.0
    if bc.kind == "external_force":
        return 0.0, bc.force
    raise ValueError(f"unknown load case {bc.kind!r}")


def bore_pressure(bc: LoadCase) -> float:
    return 0.0 if bc.kind == "external_force" else bc.pressure


def equilibrium_residual(
    geom: ActuatorGeometry, params: HyperelasticParams, state: DeformationState, bc: LoadCase
) -> np.ndarray:
    """Normalized residuals: stresses over ``mu``, forces over ``mu R_i^2``."""
    t_drop, t_force = load_targets(geom, state, bc)
    drop = radial_stress_drop(geom, params, state)
    force = axial_load(geom, params, state, bore_pressure(bc))
    return np.array([(drop - t_drop) / params.mu, (force - t_force) / (params.mu * geom.R_i**2)])


def _newton(geom, params, bc, x0, tol, max_iter, fd_step=1e-6):
    def res(x):
        return equilibrium_residual(geom, params, DeformationState(x[0], x[1]), bc)

    x = np.array(x0, dtype=float)
    r = res(x)
    for it in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return x, r, it
        J = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = fd_step
            J[:, k] = (res(x + e) - res(x - e)) / (2.0 * fd_step)
        dx = np.linalg.solve(J, -r)
        step = 1.0
        r_norm = np.linalg.norm(r)
        while True:
            trial = x + step * dx
            try:
                if trial[0] <= 0.0 or trial[1] <= 0.0:
                    raise NonPhysical("stretch left the positive range")
                r_trial = res(trial)
                if np.linalg.norm(r_trial) < r_norm or step < 1e-3:
                    break
            except (NonPhysical, CollapsedWall, QuadratureFailure):
                if step < 1e-3:
                    raise
            step *= 0.5
        x, r = trial, r_trial
    if np.max(np.abs(r)) < tol:
        return x, r, max_iter
    raise NoConvergence("tube equilibrium did not converge", residual=r, iterations=max_iter, x=x)


def solve_equilibrium(
    geom: ActuatorGeometry,
    params: HyperelasticParams,
    bc: LoadCase,
    tol: float = 1e-8,
    max_iter: int = 50,
    initial: DeformationState | None = None,
) -> DeformationState:
    """Stretches ``(lambda_z, lambda_r)`` balancing the load case.

    Newton starts from the undeformed state (or ``initial``). If that fails for
    a pressure load, the pressure is ramped from zero in increments of at most
    0.05 bar, warm-starting each level from the previous one.

    Raises:
        NoConvergence: the last residual is attached.
        NonPhysical: a stretch became non-positive or the wall collapsed.
    """
    x0 = (1.0, 1.0) if initial is None else (initial.lambda_z, initial.lambda_r)
    try:
        x, _, _ = _newton(geom, params, bc, x0, tol, max_iter)
        return DeformationState(float(x[0]), float(x[1]))
    except (NoConvergence, NonPhysical, CollapsedWall, np.linalg.LinAlgError) as exc:
        if bc.kind == "external_force" or bc.pressure == 0.0:
            if isinstance(exc, CollapsedWall):
                raise NonPhysical(str(exc)) from exc
            raise
        first_error = exc
    n_steps = max(1, math.ceil(abs(bc.pressure) / (0.05 * PA_PER_BAR)))
    x = np.array([1.0, 1.0])
    for k in range(1, n_steps + 1):
        level = bc.with_pressure(bc.pressure * k / n_steps)
        try:
            x, _, _ = _newton(geom, params, level, x, tol, max_iter)
        except CollapsedWall as exc:
            raise NonPhysical(str(exc)) from first_error
    return DeformationState(float(x[0]), float(x[1]))


@dataclass(frozen=True)
class RpeFit:
    """Affine RPE stretch ``v3 = a P + 1`` with ``P`` in ``pressure_unit``."""

    a: float = DEFAULT_RPE_SLOPE
    pressure_unit: str = "bar"
    r_squared: float | None = None


def fit_rpe_polynomial(samples) -> RpeFit:
    """Least-squares slope of ``lambda_z - 1`` against ``P`` (bar) with the intercept pinned to 1.

    ``r_squared`` is ``1 - SS_res / SS_tot`` with ``SS_tot`` taken about the sample mean.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 2:
        raise DegenerateSamples("need at least two (P, lambda_z) samples")
    P, lam = data[:, 0], data[:, 1]
    if np.ptp(P) == 0.0:
        raise DegenerateSamples("all samples share one pressure")
    a = float(P @ (lam - 1.0) / (P @ P))
    ss_res = float(np.sum((lam - 1.0 - a * P) ** 2))
    ss_tot = float(np.sum((lam - lam.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return RpeFit(a=a, pressure_unit="bar", r_squared=r2)


def rpe_strain(fit: RpeFit, P: float) -> float:
    """RPE stretch at pressure ``P`` (bar); the strain deviation is this minus one."""
    if P < 0.0:
        raise ValueError("pressure must be non-negative")
    return fit.a * P + 1.0


def radial_only_sweep(
    geom: ActuatorGeometry, params: HyperelasticParams, pressures_bar
) -> list[tuple[float, DeformationState]]:
    """Radial-only equilibria over a pressure list (bar), warm-started level to level."""
    out = []
    prev = None
    for p in pressures_bar:
        st = solve_equilibrium(geom, params, LoadCase.radial_only(p * PA_PER_BAR), initial=prev)
        out.append((float(p), st))
        prev = st
    return out
