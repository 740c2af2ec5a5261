"""Backward differentiation formulas written as ``y_t = c0 y + y_h``.

``y_h`` collects the history: weighted past samples and, for BDF-alpha, the
previous time derivative. BDF-alpha interpolates between the trapezoidal rule
(``alpha = -0.5``) and BDF2 (``alpha = 0``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientHistory

KINDS = ("static", "bdf1", "bdf2", "bdf3", "bdf-alpha", "trapezoidal")


@dataclass(frozen=True)
class BdfScheme:
    kind: str
    dt: float = 1.0 / 30.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}; expected one of {KINDS}")
        if self.kind != "static" and self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.kind == "bdf-alpha" and not (-0.5 <= self.alpha <= 0.0):
            raise ValueError("alpha must lie in [-0.5, 0]")

    @classmethod
    def static(cls) -> "BdfScheme":
        return cls("static", dt=0.0)

    @property
    def _alpha(self) -> float:
        return -0.5 if self.kind == "trapezoidal" else self.alpha

    @property
    def c0(self) -> float:
        dt = self.dt
        if self.kind == "static":
            return 0.0
        if self.kind == "bdf1":
            return 1.0 / dt
        if self.kind == "bdf2":
            return 1.5 / dt
        if self.kind == "bdf3":
            return 11.0 / (6.0 * dt)
        a = self._alpha
        return (1.5 + a) / (dt * (1.0 + a))

    @property
    def history_weights(self) -> tuple[float, ...]:
        """Weights ``c1, c2, ...`` of ``y(t_{i-1}), y(t_{i-2}), ...``."""
        dt = self.dt
        if self.kind == "static":
            return ()
        if self.kind == "bdf1":
            return (-1.0 / dt,)
        if self.kind == "bdf2":
            return (-2.0 / dt, 0.5 / dt)
        if self.kind == "bdf3":
            return (-3.0 / dt, 1.5 / dt, -1.0 / (3.0 * dt))
        a = self._alpha
        return (-2.0 / dt, (0.5 + a) / (dt * (1.0 + a)))

    @property
    def d1(self) -> float:
        """Weight of the previous time derivative ``y_t(t_{i-1})``."""
        if self.kind in ("bdf-alpha", "trapezoidal"):
            a = self._alpha
            return a / (1.0 + a)
        return 0.0

    @property
    def depth(self) -> int:
        return len(self.history_weights)

    @property
    def uses_rate(self) -> bool:
        return self.kind in ("bdf-alpha", "trapezoidal")

    @property
    def order(self) -> int:
        return {"static": 0, "bdf1": 1, "bdf2": 2, "bdf3": 3, "bdf-alpha": 2, "trapezoidal": 2}[self.kind]

    @property
    def label(self) -> str:
        if self.kind == "bdf-alpha":
            return f"BDF-alpha({self.alpha:g})"
        return {"static": "static", "bdf1": "BDF1", "bdf2": "BDF2", "bdf3": "BDF3", "trapezoidal": "Trapezoidal"}[
            self.kind
        ]

    @property
    def startup_steps(self) -> int:
        """Number of initial steps taken with BDF1 before this scheme has its history."""
        if self.kind in ("static", "bdf1"):
            return 0
        return max(self.order - 1, 1)

    def at_step(self, index: int) -> "BdfScheme":
        """Scheme to use for time step ``index`` (1-based), applying the BDF1 start-up."""
        if index <= self.startup_steps:
            return BdfScheme("bdf1", dt=self.dt)
        return self


class HistoryBuffer:
    """Past samples (most recent first) and the last time derivative.

    Samples are arrays of any common shape; the rod solver stores the stacked
    local-frame fields ``[q, w, v, u]`` per node.
    """

    def __init__(self, max_depth: int = 3):
        self.max_depth = max_depth
        self.samples: list[np.ndarray] = []
        self.rate: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.samples)

    def push(self, y: np.ndarray, rate: np.ndarray | None = None) -> None:
        self.samples.insert(0, np.array(y, dtype=float))
        del self.samples[self.max_depth :]
        if rate is not None:
            self.rate = np.array(rate, dtype=float)

    def history_term(self, scheme: BdfScheme) -> np.ndarray:
        weights = scheme.history_weights
        if not weights:
            if not self.samples:
                raise InsufficientHistory("empty history")
            return np.zeros_like(self.samples[0])
        if len(self.samples) < len(weights):
            raise InsufficientHistory(f"{scheme.label} needs {len(weights)} past samples, have {len(self.samples)}")
        yh = np.zeros_like(self.samples[0])
        for c, y in zip(weights, self.samples):
            yh = yh + c * y
        if scheme.uses_rate:
            if self.rate is None:
                raise InsufficientHistory(f"{scheme.label} needs the previous time derivative")
            yh = yh + scheme.d1 * self.rate
        return yh


def bdf_time_derivative(scheme: BdfScheme, y_now: np.ndarray, history: HistoryBuffer) -> np.ndarray:
    """``c0 * y_now + y_h`` for the given scheme and history."""
    return scheme.c0 * np.asarray(y_now, dtype=float) + history.history_term(scheme)
