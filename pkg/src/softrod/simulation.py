"""Static solves and time marching built on the shooting solver."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .bdf import BdfScheme, HistoryBuffer
from .constitutive import SectionState
from .dynamics import ActuationInput, Manipulator, SpatialMethod, build_problem
from .errors import NoConvergence, NumericalBlowup
from .kinematics import RodState
from .shooting import SolverConfig, solve


@dataclass
class StepResult:
    """Converged solution at one time; ``fields`` are the history-layout ``[q, w, v, u]`` values."""

    t: float
    state: RodState
    G: np.ndarray
    iterations: int
    pressures: np.ndarray
    section: SectionState
    wall_ms: float
    fields: np.ndarray | None = None


@dataclass
class Trajectory:
    """Time-ordered step results; ``failure`` records a blowup or non-convergence that ended the run."""

    scheme: str
    method: str
    num_nodes: int
    dt: float
    steps: list[StepResult] = field(default_factory=list)
    failure: Exception | None = None
    failed_step: int | None = None
    wall_s: float = 0.0

    @property
    def completed(self) -> bool:
        return self.failure is None

    @property
    def unstable(self) -> bool:
        return isinstance(self.failure, NumericalBlowup)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.steps])

    @property
    def tip_positions(self) -> np.ndarray:
        return np.array([r.state.tip_position for r in self.steps])


class RodSimulator:
    """Couples a manipulator, an actuation program, a grid and a solver."""

    def __init__(
        self,
        manipulator: Manipulator,
        actuation: ActuationInput,
        num_nodes: int = 50,
        method: SpatialMethod = "rk4",
        solver: SolverConfig = SolverConfig(),
    ):
        self.manipulator = manipulator
        self.actuation = actuation
        self.method = method
        self.solver = solver
        self.s = manipulator.grid(num_nodes)

    @property
    def num_nodes(self) -> int:
        return self.s.size

    def problem(self, P_bar, c0: float = 0.0, hist=None):
        return build_problem(self.manipulator, self.actuation, P_bar, self.s, self.method, c0, hist)

    def _solve(self, t: float, P, c0: float, hist, G0) -> StepResult:
        start = time.perf_counter()
        prob = self.problem(P, c0, hist)
        G, state, iters = solve(prob, np.zeros(6) if G0 is None else G0, self.solver)
        fields = prob.history_fields(G)
        wall = 1e3 * (time.perf_counter() - start)
        return StepResult(t, state, G, iters, np.asarray(P, dtype=float), prob.section, wall, fields)

    def static_solve(self, P_bar=None, t: float = 0.0, G0=None) -> StepResult:
        """Equilibrium for pressures ``P_bar`` (default: the program's value at ``t``)."""
        P = self.actuation.pressures_at(t) if P_bar is None else np.asarray(P_bar, dtype=float)
        return self._solve(t, P, 0.0, None, G0)

    def step_dynamics(self, history: HistoryBuffer, scheme: BdfScheme, t: float, G0) -> StepResult:
        """Advance to time ``t`` and push the converged fields and their implied rates into ``history``."""
        yh = history.history_term(scheme)
        res = self._solve(t, self.actuation.pressures_at(t), scheme.c0, yh, G0)
        history.push(res.fields, scheme.c0 * res.fields + yh)
        return res

    def initial_step(self, initial: str = "static") -> StepResult:
        """State at ``t = 0``: the static equilibrium at ``P(0)`` or the unpressurized rest state."""
        if initial == "static":
            return self.static_solve(t=0.0)
        if initial == "rest":
            res = self.static_solve(P_bar=np.zeros(3))
            res.pressures = self.actuation.pressures_at(0.0)
            return res
        raise ValueError(f"unknown initial condition {initial!r}")

    def slow_start(self, scheme: BdfScheme, passes: int = 3, consistent: int = 1, max_substep: float = 1.0 / 480.0):
        """Initial state and full history lying on the slowly varying solution.

        A static start with a time-varying input leaves a velocity mismatch
        that rings the undamped fast modes. Here the pressure program is
        followed backwards in time. Pass 0 is the quasi-static path on a fine
        sub-step; each of the ``passes`` further passes re-solves every point
        with its time derivatives prescribed from the previous pass (BDF3
        differences), so velocities and then accelerations become consistent
        one order at a time. The ``consistent`` passes that follow repeat this on the
        ``dt`` grid with the scheme's own difference operator, which puts the
        history on the scheme's discrete slow solution; otherwise the first
        step sees an O(dt^p) velocity lag as a sudden acceleration. The
        states at ``0, -dt, -2dt`` seed the history, so no start-up steps are
        needed.

        Returns ``(first, history)`` for :meth:`simulate`.
        """
        k = max(1, int(np.ceil(scheme.dt / max_substep - 1e-9)))
        fine = BdfScheme("bdf3", scheme.dt / k)
        tail = 8 if scheme.uses_rate else 0
        cache: dict[tuple[int, int], StepResult] = {}
        coarse: dict[tuple[int, int], StepResult] = {}

        def fine_rate(p: int, i: int) -> np.ndarray:
            out = fine.c0 * exact(p, i).fields
            for c, j in zip(fine.history_weights, (1, 2, 3)):
                out = out + c * exact(p, i + j).fields
            return out

        def exact(p: int, i: int) -> StepResult:
            key = (p, i)
            if key not in cache:
                t = -i * fine.dt
                if p == 0:
                    near = [cache[(0, j)].G for j in (i + 1, i - 1) if (0, j) in cache]
                    cache[key] = self.static_solve(t=t, G0=near[0] if near else None)
                else:
                    G0 = exact(p - 1, i).G
                    cache[key] = self._solve(t, self.actuation.pressures_at(t), 0.0, fine_rate(p - 1, i), G0)
            return cache[key]

        def level(c: int, j: int) -> StepResult:
            if c == 0:
                return exact(passes, j * k)
            key = (c, j)
            if key not in coarse:
                t = -j * scheme.dt
                G0 = level(c - 1, j).G
                coarse[key] = self._solve(t, self.actuation.pressures_at(t), 0.0, scheme_rate(c - 1, j), G0)
            return coarse[key]

        def scheme_rate(c: int, j: int, depth: int = 0) -> np.ndarray:
            out = scheme.c0 * level(c, j).fields
            for w, i in zip(scheme.history_weights, (1, 2, 3)):
                out = out + w * level(c, j + i).fields
            if scheme.uses_rate and depth < tail:
                # the rate recursion forgets its seed geometrically
                out = out + scheme.d1 * scheme_rate(c, j + 1, depth + 1)
            return out

        for i in range(k * (3 + consistent * (scheme.depth + tail)) + 3 * passes + 3, -1, -1):
            exact(0, i)
        samples = [level(consistent, j) for j in range(3)]
        history = HistoryBuffer(max_depth=3)
        for r in reversed(samples):
            history.push(r.fields)
        history.rate = scheme_rate(consistent, 0) if scheme.uses_rate else None
        first = samples[0]
        first.t = 0.0
        return first, history

    def simulate(self, scheme: BdfScheme, t_end: float, initial: str = "static") -> Trajectory:
        """March from ``t = 0`` to ``t_end`` with step ``scheme.dt``.

        ``initial`` is ``static`` (equilibrium at ``P(0)``, BDF1 start-up),
        ``rest`` (unpressurized equilibrium, BDF1 start-up) or ``slow`` (see
        :meth:`slow_start`). Divergence or solver failure ends the run early
        and is recorded on the returned trajectory instead of being raised.
        """
        traj = Trajectory(scheme.label, self.method, self.num_nodes, scheme.dt)
        start = time.perf_counter()
        if initial == "slow":
            first, history = self.slow_start(scheme)
            startup = 0
        else:
            first = self.initial_step(initial)
            history = HistoryBuffer(max_depth=3)
            history.push(first.fields, np.zeros_like(first.fields))
            startup = None
        traj.steps.append(first)
        num_steps = int(round(t_end / scheme.dt))
        G = first.G
        for i in range(1, num_steps + 1):
            t = i * scheme.dt
            step_scheme = scheme if startup == 0 else scheme.at_step(i)
            try:
                res = self.step_dynamics(history, step_scheme, t, G if self.solver.warm_start else np.zeros(6))
            except (NumericalBlowup, NoConvergence) as exc:
                exc.step = i
                traj.failure = exc
                traj.failed_step = i
                break
            traj.steps.append(res)
            G = res.G
        traj.wall_s = time.perf_counter() - start
        return traj
