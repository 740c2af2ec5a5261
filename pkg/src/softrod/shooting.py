"""Shooting on the base loads ``G = (n(0), m(0))``.

The residual is the tip-load mismatch. Before the optimizer sees it, forces
are divided by ``E A_m`` and moments by ``E A_m b`` so one scale governs both
blocks; convergence is still judged on the unscaled force and moment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .dynamics import RodProblem
from .errors import NoConvergence, NumericalBlowup
from .kinematics import RodState, quat_to_rotation


@dataclass(frozen=True)
class SolverConfig:
    tol_force: float = 1e-8
    tol_moment: float = 1e-9
    max_iter: int = 100
    fd_step: float = 1e-7
    lm_damping_init: float = 1e-3
    lm_decrease: float = 0.5
    lm_increase: float = 3.0
    trust_radius_init: float = 1.0
    trust_expand: float = 2.0
    trust_shrink: float = 0.25
    method: Literal["lm", "dogleg"] = "lm"
    warm_start: bool = True

    def __post_init__(self):
        if self.tol_force <= 0.0 or self.tol_moment <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.fd_step <= 0.0:
            raise ValueError("max_iter must be >= 1 and fd_step positive")
        if self.method not in ("lm", "dogleg"):
            raise ValueError(f"unknown solver method {self.method!r}")


def residual(G, problem: RodProblem) -> np.ndarray:
    """Unscaled tip mismatch ``(E_F, E_M)`` for base loads ``G``.

    Raises:
        NumericalBlowup: the trial integration diverged.
    """
    Y, _, _ = problem.integrate(G)
    tip = Y[-1]
    n_t, m_t = problem.tip_targets(quat_to_rotation(tip[3:7]))
    return np.concatenate([tip[7:10] - n_t, tip[10:13] - m_t])


def _scales(problem: RodProblem) -> np.ndarray:
    return np.repeat([problem.force_scale, problem.moment_scale], 3)


def _converged(E: np.ndarray, cfg: SolverConfig) -> bool:
    return np.max(np.abs(E[:3])) < cfg.tol_force and np.max(np.abs(E[3:])) < cfg.tol_moment


def jacobian_fd(G, problem_or_fun, fd_step: float = 1e-7, f0: np.ndarray | None = None) -> np.ndarray:
    """Forward-difference Jacobian with step ``fd_step * max(|G_k|, 1)`` per component.

    ``problem_or_fun`` is a :class:`RodProblem` (differentiating :func:`residual`)
    or any callable mapping a vector to a vector.
    """
    fun = problem_or_fun if callable(problem_or_fun) else (lambda x: residual(x, problem_or_fun))
    G = np.asarray(G, dtype=float)
    f0 = fun(G) if f0 is None else f0
    J = np.empty((f0.size, G.size))
    for k in range(G.size):
        step = fd_step * max(abs(G[k]), 1.0)
        Gk = G.copy()
        Gk[k] += step
        J[:, k] = (fun(Gk) - f0) / step
    return J


def _start(problem: RodProblem, G0) -> tuple[np.ndarray, np.ndarray]:
    G = np.asarray(G0, dtype=float).reshape(6).copy()
    if not np.all(np.isfinite(G)):
        raise ValueError("initial guess must be finite")
    E = residual(G, problem)
    return G, E


def _trial(G_new: np.ndarray, problem: RodProblem):
    try:
        return residual(G_new, problem)
    except NumericalBlowup:
        return None


def _fail(msg: str, G: np.ndarray, E: np.ndarray, iters: int) -> NoConvergence:
    return NoConvergence(msg, residual=float(np.max(np.abs(E))), iterations=iters, x=G.copy())


def solve_lm(problem: RodProblem, G0, cfg: SolverConfig = SolverConfig()) -> tuple[np.ndarray, RodState, int]:
    """Levenberg-Marquardt with Marquardt diagonal scaling and adaptive damping.

    Returns the converged guess, the rod state it produces and the iteration count.
    """
    scale = _scales(problem)
    G, E = _start(problem, G0)
    lam = cfg.lm_damping_init
    J = None
    it = 0
    while not _converged(E, cfg):
        if it >= cfg.max_iter:
            raise _fail(f"Levenberg-Marquardt did not converge in {cfg.max_iter} iterations", G, E, it)
        it += 1
        r = E / scale
        if J is None:
            J = jacobian_fd(G, lambda x: residual(x, problem) / scale, cfg.fd_step, r)
        JTJ = J.T @ J
        g = J.T @ r
        diag = np.maximum(np.diag(JTJ), 1e-12 * max(np.max(np.diag(JTJ)), 1e-300))
        delta = np.linalg.solve(JTJ + lam * np.diag(diag), -g)
        E_new = _trial(G + delta, problem)
        if E_new is not None and np.linalg.norm(E_new / scale) < np.linalg.norm(r):
            G = G + delta
            E = E_new
            lam *= cfg.lm_decrease
            J = None
        else:
            lam *= cfg.lm_increase
    return G, problem.solve_state(G), it


def _dogleg_step(J: np.ndarray, r: np.ndarray, radius: float) -> np.ndarray:
    g = J.T @ r
    p_gn = np.linalg.lstsq(J, -r, rcond=None)[0]
    if np.linalg.norm(p_gn) <= radius:
        return p_gn
    Jg = J @ g
    gg = g @ g
    if gg == 0.0:
        return p_gn * (radius / np.linalg.norm(p_gn))
    p_c = -(gg / (Jg @ Jg)) * g
    nc = np.linalg.norm(p_c)
    if nc >= radius:
        return p_c * (radius / nc)
    # walk from the Cauchy point towards the Gauss-Newton point up to the boundary
    d = p_gn - p_c
    a = d @ d
    b = 2.0 * p_c @ d
    c = nc * nc - radius * radius
    tau = (-b + np.sqrt(b * b - 4.0 * a * c)) / (2.0 * a)
    return p_c + tau * d


def solve_dogleg(problem: RodProblem, G0, cfg: SolverConfig = SolverConfig()) -> tuple[np.ndarray, RodState, int]:
    """Powell dogleg trust-region iteration; the radius is measured in SI units of ``G``."""
    scale = _scales(problem)
    G, E = _start(problem, G0)
    radius = cfg.trust_radius_init
    J = None
    it = 0
    while not _converged(E, cfg):
        if it >= cfg.max_iter:
            raise _fail(f"dogleg did not converge in {cfg.max_iter} iterations", G, E, it)
        it += 1
        r = E / scale
        if J is None:
            J = jacobian_fd(G, lambda x: residual(x, problem) / scale, cfg.fd_step, r)
        p = _dogleg_step(J, r, radius)
        E_new = _trial(G + p, problem)
        predicted = r @ r - np.sum((r + J @ p) ** 2)
        if E_new is None:
            ratio = -np.inf
        else:
            r_new = E_new / scale
            actual = r @ r - r_new @ r_new
            ratio = actual / predicted if predicted > 0.0 else (1.0 if actual >= 0.0 else -np.inf)
        pn = np.linalg.norm(p)
        if ratio < 0.25:
            radius = cfg.trust_shrink * min(radius, pn) if pn > 0.0 else cfg.trust_shrink * radius
        elif ratio > 0.75 and pn >= 0.99 * radius:
            radius *= cfg.trust_expand
        if E_new is not None and ratio > 1e-4:
            G = G + p
            E = E_new
            J = None
        elif radius < 1e-300:
            raise _fail("dogleg trust region collapsed", G, E, it)
    return G, problem.solve_state(G), it


def solve(problem: RodProblem, G0, cfg: SolverConfig = SolverConfig()) -> tuple[np.ndarray, RodState, int]:
    if cfg.method == "lm":
        return solve_lm(problem, G0, cfg)
    return solve_dogleg(problem, G0, cfg)
