"""Cross-section stiffness of the three-actuator manipulator.

Two material laws are supported:

* ``homogeneous``: one constant Young's modulus for all actuators, centroid and
  neutral axis coincide.
* ``inhomogeneous``: each actuator's modulus follows the slope of a quadratic
  strain-force fit, evaluated at the axial load it carries. Unequal moduli move
  the neutral axis away from the centroid and couple the two bending directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .actuator import PA_PER_BAR
from .errors import NonPositiveStiffness
from .kinematics import StrainState

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class CrossSectionGeometry:
    """Actuator triangle of side ``b`` with identical annular actuators."""

    b: float = 0.055
    R_i: float = 9.5e-3
    R_o: float = 14.0e-3

    def __post_init__(self):
        if not (0.0 < self.R_i < self.R_o) or self.b <= 0.0:
            raise ValueError("need b > 0 and 0 < R_i < R_o")

    @property
    def A_m(self) -> float:
        return math.pi * (self.R_o**2 - self.R_i**2)

    @property
    def A_in(self) -> float:
        return math.pi * self.R_i**2

    @property
    def I_o(self) -> float:
        return math.pi * (self.R_o**4 - self.R_i**4) / 4.0

    @property
    def offsets(self) -> np.ndarray:
        """Actuator centres in the local frame, one row per actuator."""
        b = self.b
        return np.array(
            [
                [SQRT3 * b / 3.0, 0.0, 0.0],
                [-SQRT3 * b / 6.0, b / 2.0, 0.0],
                [-SQRT3 * b / 6.0, -b / 2.0, 0.0],
            ]
        )

    @property
    def total_area(self) -> float:
        return 3.0 * self.A_m


@dataclass(frozen=True)
class MaterialLaw:
    """Constant-modulus or load-dependent material law.

    ``a1`` (1/N) and ``a2`` (1/N^2) are the strain-force fit
    ``v(n) = a2 n^2 + a1 n + 1``; ``gamma`` maps Young's to shear modulus.
    """

    kind: Literal["homogeneous", "inhomogeneous"] = "homogeneous"
    E_const: float = 289142.05
    a1: float = 0.00742681
    a2: float = 0.00031962
    gamma: float = 0.4094
    rho: float = 1100.0
    force_range: tuple[float, float] = (0.0, 100.0)

    def __post_init__(self):
        if self.kind not in ("homogeneous", "inhomogeneous"):
            raise ValueError(f"unknown material law {self.kind!r}")
        if self.gamma <= 0.0 or self.E_const <= 0.0 or self.rho <= 0.0:
            raise ValueError("gamma, E_const and rho must be positive")
        if self.kind == "inhomogeneous":
            for n in self.force_range:
                if 2.0 * self.a2 * n + self.a1 <= 0.0:
                    raise NonPositiveStiffness(f"dv/dn <= 0 at n={n:g} N")

    def compliance_slope(self, n: float) -> float:
        return 2.0 * self.a2 * n + self.a1


@dataclass(frozen=True)
class SectionState:
    """Stiffness of one cross-section for a fixed set of actuator moduli."""

    E: np.ndarray
    D_na: np.ndarray
    K_se: np.ndarray
    K_bt: np.ndarray
    shifted_offsets: np.ndarray
    J: np.ndarray
    A_total: float
    A_m: float
    A_in: float
    b: float
    gamma: float

    @property
    def K_se_inv(self) -> np.ndarray:
        return np.linalg.inv(self.K_se)

    @property
    def K_bt_inv(self) -> np.ndarray:
        return np.linalg.inv(self.K_bt)

    @property
    def mean_modulus(self) -> float:
        return float(np.mean(self.E))


def young_modulus(law: MaterialLaw, n_axial: float, geom: CrossSectionGeometry) -> float:
    """Actuator modulus (Pa) under axial load magnitude ``n_axial`` (N).

    The inhomogeneous law uses ``E = 1 / (A_m dv/dn)``, the dimensionally
    consistent reading of a strain-vs-force slope.
    """
    if law.kind == "homogeneous":
        return law.E_const
    beta = law.compliance_slope(n_axial)
    if beta <= 0.0:
        raise NonPositiveStiffness(f"dv/dn = {beta:g} at n = {n_axial:g} N")
    return 1.0 / (geom.A_m * beta)


def passive_actuator_forces(P_bar, geom: CrossSectionGeometry) -> np.ndarray:
    """Axial load magnitudes (N) on each actuator from the end-cap balance.

    Pressurizing actuator ``i`` loads each of the two others with ``P_i A_in / 2``;
    simultaneous pressures superpose.
    """
    P = np.asarray(P_bar, dtype=float) * PA_PER_BAR
    if np.any(P < 0.0):
        raise ValueError("pressures must be non-negative")
    share = P * geom.A_in / 2.0
    return share.sum() - share


def neutral_axis(E, b: float) -> np.ndarray:
    """Modulus-weighted centroid of the three actuators."""
    E1, E2, E3 = (float(e) for e in E)
    total = E1 + E2 + E3
    x = SQRT3 * b / 6.0 * (2.0 * E1 - E2 - E3) / total
    y = b / 2.0 * (E2 - E3) / total
    return np.array([x, y, 0.0])


def _second_moments(offsets: np.ndarray, geom: CrossSectionGeometry, weights) -> np.ndarray:
    """Weighted area-moment tensor ``sum_i w_i [I_o diag(1,1,2) + A_m (|r|^2 I - r r^T)]``."""
    J = np.zeros((3, 3))
    own = geom.I_o * np.diag([1.0, 1.0, 2.0])
    for w, r in zip(weights, offsets):
        J += w * (own + geom.A_m * (np.dot(r, r) * np.eye(3) - np.outer(r, r)))
    return J


def stiffness_homogeneous(geom: CrossSectionGeometry, law: MaterialLaw) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal ``(K_se, K_bt)`` for three identical actuators."""
    E = law.E_const
    G = law.gamma * E
    A_m = geom.A_m
    I_xx = 3.0 * geom.I_o + A_m * geom.b**2 / 2.0
    K_se = 3.0 * np.diag([G * A_m, G * A_m, E * A_m])
    K_bt = np.diag([E * I_xx, E * I_xx, G * 2.0 * I_xx])
    return K_se, K_bt


def stiffness_inhomogeneous(geom: CrossSectionGeometry, E, gamma: float) -> SectionState:
    """Section stiffness about the shifted neutral axis for actuator moduli ``E``.

    Bending stiffness is the per-actuator parallel-axis sum about the neutral
    axis. The off-diagonal term is ``-A_m sum E_i x_i y_i`` in shifted
    coordinates, which is the sign implied by the axial strain field
    ``v3 + u1 y - u2 x`` of ``p_s = R (v + u x r)``. Torsion is ``gamma`` times
    the polar sum, so equal moduli reproduce the homogeneous section exactly.
    """
    E = np.asarray(E, dtype=float)
    if np.any(E <= 0.0):
        raise NonPositiveStiffness("all actuator moduli must be positive")
    D = neutral_axis(E, geom.b)
    shifted = geom.offsets - D
    A_m, I_o = geom.A_m, geom.I_o
    x = shifted[:, 0]
    y = shifted[:, 1]
    K11 = E.sum() * I_o + A_m * np.sum(E * y * y)
    K22 = E.sum() * I_o + A_m * np.sum(E * x * x)
    K12 = -A_m * np.sum(E * x * y)
    K33 = gamma * (K11 + K22)
    K_bt = np.array([[K11, K12, 0.0], [K12, K22, 0.0], [0.0, 0.0, K33]])
    K_se = E.sum() * np.diag([gamma * A_m, gamma * A_m, A_m])
    J = _second_moments(shifted, geom, np.ones(3))
    return SectionState(
        E=E,
        D_na=D,
        K_se=K_se,
        K_bt=K_bt,
        shifted_offsets=shifted,
        J=J,
        A_total=geom.total_area,
        A_m=A_m,
        A_in=geom.A_in,
        b=geom.b,
        gamma=gamma,
    )


def actuator_moduli(law: MaterialLaw, P_bar, geom: CrossSectionGeometry) -> np.ndarray:
    if law.kind == "homogeneous":
        return np.full(3, law.E_const)
    loads = passive_actuator_forces(P_bar, geom)
    return np.array([young_modulus(law, n, geom) for n in loads])


def build_section(geom: CrossSectionGeometry, law: MaterialLaw, P_bar=(0.0, 0.0, 0.0)) -> SectionState:
    """Section for the current pressures (bar).

    The homogeneous law goes through the same parallel-axis assembly; with equal
    moduli it coincides with :func:`stiffness_homogeneous`.
    """
    return stiffness_inhomogeneous(geom, actuator_moduli(law, P_bar, geom), law.gamma)


def internal_loads(strains: StrainState, R: np.ndarray, section: SectionState) -> tuple[np.ndarray, np.ndarray]:
    """Global internal force and moment from local strains."""
    n = R @ (section.K_se @ (strains.v - strains.v_star))
    m = R @ (section.K_bt @ (strains.u - strains.u_star))
    return n, m


def strains_from_loads(
    n: np.ndarray, m: np.ndarray, R: np.ndarray, section: SectionState, rest: StrainState | None = None
) -> StrainState:
    """Invert :func:`internal_loads` for the local strains."""
    rest = StrainState.rest() if rest is None else rest
    v = rest.v_star + np.linalg.solve(section.K_se, R.T @ n)
    u = rest.u_star + np.linalg.solve(section.K_bt, R.T @ m)
    return StrainState(v=v, u=u, v_star=rest.v_star, u_star=rest.u_star)
