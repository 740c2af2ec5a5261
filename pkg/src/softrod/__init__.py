"""Cosserat-rod statics and dynamics for a soft manipulator with three fiber-reinforced actuators."""

from .bdf import BdfScheme, HistoryBuffer
from .config import ScenarioConfig, load_config, save_config
from .constitutive import CrossSectionGeometry, MaterialLaw, build_section
from .dynamics import ActuationInput, Manipulator
from .errors import NoConvergence, NumericalBlowup, ParseError, SoftRodError
from .shooting import SolverConfig
from .simulation import RodSimulator, Trajectory

__all__ = [
    "ActuationInput",
    "BdfScheme",
    "CrossSectionGeometry",
    "HistoryBuffer",
    "Manipulator",
    "MaterialLaw",
    "NoConvergence",
    "NumericalBlowup",
    "ParseError",
    "RodSimulator",
    "ScenarioConfig",
    "SoftRodError",
    "SolverConfig",
    "Trajectory",
    "build_section",
    "load_config",
    "save_config",
]
