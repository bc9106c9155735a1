"""Go-or-Grow: rank-based branching Brownian particles, their limit PDE,
and ancestral-lineage diagnostics.

The package simulates a one-dimensional population in which the K
rightmost particles branch at rate 1 while every lower-ranked particle
drifts rightward at speed chi, solves the macroscopic density equation
and the lineage Fokker-Planck equation, and checks both against the
closed-form wave speeds and equilibria.
"""

__version__ = "0.1.0"

from .config import SimConfig
from .analytics import sigma_star, wave_profile, speed_estimator
from .engine import run, init_population, advance_step, drift_indicator

__all__ = [
    "SimConfig",
    "sigma_star",
    "wave_profile",
    "speed_estimator",
    "run",
    "init_population",
    "advance_step",
    "drift_indicator",
    "__version__",
]
