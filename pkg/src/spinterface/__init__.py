"""Spin Hamiltonians, spectra, optical-pumping dynamics, a pulse-sequence language and fitting for S=1 molecular qubits."""
from .coherent import CoherentParams
from .errors import ConfigError, DomainError, SpinterfaceError
from .rates import PopulationState, PumpModel
from .spectra import LineShape, OpticalModel
from .spin import FieldPoint, SpinSystem

__all__ = [
    "CoherentParams",
    "ConfigError",
    "DomainError",
    "FieldPoint",
    "LineShape",
    "OpticalModel",
    "PopulationState",
    "PumpModel",
    "SpinSystem",
    "SpinterfaceError",
]
__version__ = "0.1.0"
