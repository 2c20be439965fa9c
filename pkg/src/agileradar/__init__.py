"""Simulation and recovery toolkit for frequency and antenna agile radar."""

from .errors import (AgileRadarError, ConfigError, DegenerateProblemError, DomainError,
                     InfeasibleSceneError, IsolationError, RefinementError, SolverError,
                     UndefinedMetricError)
from .model import CAESAR, FAR, MODES, WMAR, FrequencyPlan, RadarConfig, Scene, Target

__all__ = [
    "AgileRadarError", "ConfigError", "DegenerateProblemError", "DomainError",
    "InfeasibleSceneError", "IsolationError", "RefinementError", "SolverError",
    "UndefinedMetricError", "CAESAR", "FAR", "MODES", "WMAR", "FrequencyPlan",
    "RadarConfig", "Scene", "Target",
]
