"""Pressure signals (bar) used to drive the actuators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Constant:
    value: float = 0.0

    def __call__(self, t: float) -> float:
        return self.value


@dataclass(frozen=True)
class Ramp:
    """Linear ramp from ``start`` to ``end`` over ``[t0, t1]``, held outside."""

    start: float = 0.0
    end: float = 0.0
    t0: float = 0.0
    t1: float = 1.0

    def __post_init__(self):
        if self.t1 <= self.t0:
            raise ValueError("ramp needs t1 > t0")

    def __call__(self, t: float) -> float:
        x = min(max((t - self.t0) / (self.t1 - self.t0), 0.0), 1.0)
        return self.start + x * (self.end - self.start)


@dataclass(frozen=True)
class Sinusoid:
    """``mean + amplitude * sin(omega t + phase + phi0)``."""

    mean: float = 0.35
    amplitude: float = 0.25
    omega: float = 1.0
    phase: float = 4.0 * math.pi / 3.0
    phi0: float = 0.0

    def __call__(self, t: float) -> float:
        return self.mean + self.amplitude * math.sin(self.omega * t + self.phase + self.phi0)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolation through ``(times, values)``, held constant beyond the ends."""

    times: tuple[float, ...] = (0.0, 1.0)
    values: tuple[float, ...] = (0.0, 0.0)

    def __post_init__(self):
        if len(self.times) != len(self.values) or len(self.times) < 1:
            raise ValueError("times and values must be non-empty and of equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("tabulated times must be strictly increasing")

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))


SIGNAL_TYPES = {"constant": Constant, "ramp": Ramp, "sinusoid": Sinusoid, "tabulated": Tabulated}


@dataclass(frozen=True)
class PressureProgram:
    """Three per-actuator signals evaluated together."""

    signals: tuple = field(default_factory=lambda: (Sinusoid(), Constant(), Constant()))

    def __post_init__(self):
        if len(self.signals) != 3:
            raise ValueError("need exactly three actuator signals")

    def __call__(self, t: float) -> np.ndarray:
        return np.array([sig(t) for sig in self.signals])
