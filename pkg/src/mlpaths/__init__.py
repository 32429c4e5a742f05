"""Minimum action paths and separatrix attractors for small-noise SDEs and SPDEs."""

from .core import (Path, SystemSpec, SolverConfig, Decomposition, fw_action, linear_path,
                   random_path, reconstruct_time_parameterization, reparameterize_equal_arclength)
from .errors import NumericalError
from .gmam import ActionReport, geometric_action, gmam_gradient, gmam_minimize
from .pstring import PeriodicOrbitReport, pstring_run, detect_periodicity, recover_orbit
from .systems import CATALOG, get_system
from .updown import downhill_trajectory, updown_gmam

__version__ = "0.1.0"

__all__ = [
    "Path", "SystemSpec", "SolverConfig", "Decomposition", "fw_action", "linear_path", "random_path",
    "reconstruct_time_parameterization", "reparameterize_equal_arclength", "NumericalError",
    "ActionReport", "geometric_action", "gmam_gradient", "gmam_minimize", "PeriodicOrbitReport",
    "pstring_run", "detect_periodicity", "recover_orbit", "CATALOG", "get_system",
    "downhill_trajectory", "updown_gmam",
]
