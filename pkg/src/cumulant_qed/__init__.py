"""Cumulant-expansion dynamics of a two-level emitter coupled to a photon continuum."""

from .drive import Gaussian, NoDrive, TurnOn
from .eom import Closure, Method, SystemParams, rhs
from .integrator import Diverged, IntegratorConfig, Termination, Trajectory, integrate
from .moments import MomentState, Order, init, population
from .spectral import FreeSpace, Lorentzian, Tabulated, custom_modes, discretize

__version__ = "0.1.0"

__all__ = [
    "Closure", "Diverged", "FreeSpace", "Gaussian", "IntegratorConfig", "Lorentzian",
    "Method", "MomentState", "NoDrive", "Order", "SystemParams", "Tabulated",
    "Termination", "Trajectory", "TurnOn", "custom_modes", "discretize", "init",
    "integrate", "population", "rhs",
]
