"""Semiclassical moment dynamics of a particle constrained to a catenoid."""
from .catenoid import MomentState, PhasePoint, SystemParams
from .moment_algebra import MomentIndex, moment_bracket

__version__ = "0.1.0"
__all__ = ["MomentIndex", "MomentState", "PhasePoint", "SystemParams", "moment_bracket"]
