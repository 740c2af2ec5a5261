"""Rod kinematics: skew maps, quaternion frames and the rod state containers.

Conventions
-----------
* Quaternions are scalar-first, ``h = (h1, h2, h3, h4) = h1 + h2 i + h3 j + h4 k``.
* Curvature ``u`` and strain ``v`` live in the local (material) frame, so that
  ``p_s = R v`` and ``R_s = R hat(u)``.
* Internal force ``n`` and moment ``m`` are expressed in the global frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, NotSkewSymmetric, ZeroQuaternion

E3 = np.array([0.0, 0.0, 1.0])
IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def hat(w: np.ndarray) -> np.ndarray:
    """Skew matrix with ``hat(w) @ x == cross(w, x)``."""
    w1, w2, w3 = w
    return np.array([[0.0, -w3, w2], [w3, 0.0, -w1], [-w2, w1, 0.0]])


def vee(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Inverse of :func:`hat`.

    Raises:
        NotSkewSymmetric: if ``M + M.T`` exceeds ``tol`` (scaled by ``max(1, |M|)``).
    """
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M + M.T)) > tol * scale:
        raise NotSkewSymmetric("matrix is not skew-symmetric")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def quat_to_rotation(h: np.ndarray) -> np.ndarray:
    """Rotation matrix of a (not necessarily unit) quaternion.

    The ``2 / (h.h)`` factor makes the result orthonormal for any nonzero ``h``.
    """
    h1, h2, h3, h4 = h
    hh = h1 * h1 + h2 * h2 + h3 * h3 + h4 * h4
    if hh < 1e-24:
        raise ZeroQuaternion("quaternion norm below 1e-12")
    k = 2.0 / hh
    return np.array(
        [
            [1.0 + k * (-h3 * h3 - h4 * h4), k * (h2 * h3 - h4 * h1), k * (h2 * h4 + h3 * h1)],
            [k * (h2 * h3 + h4 * h1), 1.0 + k * (-h2 * h2 - h4 * h4), k * (h3 * h4 - h2 * h1)],
            [k * (h2 * h4 - h3 * h1), k * (h3 * h4 + h2 * h1), 1.0 + k * (-h2 * h2 - h3 * h3)],
        ]
    )


def curvature_quat_matrix(u: np.ndarray) -> np.ndarray:
    """4x4 matrix ``Q(u)`` with ``h_s = Q(u) h / 2``."""
    u1, u2, u3 = u
    return np.array(
        [
            [0.0, -u1, -u2, -u3],
            [u1, 0.0, u3, -u2],
            [u2, -u3, 0.0, u1],
            [u3, u2, -u1, 0.0],
        ]
    )


def quat_rate_from_curvature(h: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Arclength derivative ``h_s`` of the frame quaternion for curvature ``u``."""
    return 0.5 * curvature_quat_matrix(u) @ np.asarray(h, dtype=float)


def normalize_quat(h: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(h)
    if nrm < 1e-12:
        raise ZeroQuaternion("quaternion norm below 1e-12")
    return np.asarray(h, dtype=float) / nrm


def axis_angle_quat(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2.0)], np.sin(angle / 2.0) * axis])


@dataclass(frozen=True)
class StrainState:
    """Local-frame strains and their rest values at one cross-section."""

    v: np.ndarray
    u: np.ndarray
    v_star: np.ndarray = field(default_factory=lambda: E3.copy())
    u_star: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def rest(cls) -> "StrainState":
        return cls(v=E3.copy(), u=np.zeros(3))


@dataclass
class RodState:
    """Full rod configuration on an arclength grid.

    Arrays are stacked per node: ``p, n, m, q, w, v, u`` have shape ``(N, 3)``
    and ``h`` has shape ``(N, 4)``.
    """

    s: np.ndarray
    p: np.ndarray
    h: np.ndarray
    n: np.ndarray
    m: np.ndarray
    q: np.ndarray
    w: np.ndarray
    v: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        if self.s.ndim != 1 or self.s.size < 2:
            raise ValueError("grid needs at least two nodes")
        if np.any(np.diff(self.s) <= 0.0):
            raise ValueError("grid must be strictly increasing")

    @property
    def num_nodes(self) -> int:
        return self.s.size

    @property
    def length(self) -> float:
        return float(self.s[-1] - self.s[0])

    def rotation(self, k: int) -> np.ndarray:
        return quat_to_rotation(self.h[k])

    @property
    def tip_position(self) -> np.ndarray:
        return self.p[-1].copy()

    def quat_norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.h, axis=1) - 1.0)))

    def copy(self) -> "RodState":
        return RodState(*(np.array(getattr(self, f)) for f in ("s", "p", "h", "n", "m", "q", "w", "v", "u")))

    @classmethod
    def from_stacked(cls, s: np.ndarray, y: np.ndarray, strains: np.ndarray) -> "RodState":
        """Unpack the 19-column node state and 6-column strain arrays used by the integrators."""
        return cls(
            s=s,
            p=y[:, 0:3].copy(),
            h=y[:, 3:7].copy(),
            n=y[:, 7:10].copy(),
            m=y[:, 10:13].copy(),
            q=y[:, 13:16].copy(),
            w=y[:, 16:19].copy(),
            v=strains[:, 0:3].copy(),
            u=strains[:, 3:6].copy(),
        )

    def stacked(self) -> np.ndarray:
        return np.hstack([self.p, self.h, self.n, self.m, self.q, self.w])


def compatibility_residual(state0: RodState, state1: RodState, dt: float) -> tuple[float, float]:
    """Max-norm residuals of the velocity compatibility equations at ``state1``.

    Time derivatives are first-order backward differences between the two states;
    arclength derivatives are second-order finite differences along the grid.
    Diagnostic only.
    """
    if state0.s.shape != state1.s.shape or np.any(state0.s != state1.s):
        raise GridMismatch("states live on different grids")
    s = state1.s
    q_s = np.gradient(state1.q, s, axis=0, edge_order=2)
    w_s = np.gradient(state1.w, s, axis=0, edge_order=2)
    v_t = (state1.v - state0.v) / dt
    u_t = (state1.u - state0.u) / dt
    q, w, v, u = state1.q, state1.w, state1.v, state1.u
    res_q = q_s - (v_t - np.cross(u, q) + np.cross(w, v))
    res_w = w_s - (u_t - np.cross(u, w))
    return float(np.max(np.abs(res_q))), float(np.max(np.abs(res_w)))
