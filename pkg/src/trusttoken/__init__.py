"""Simulator of a PUF-backed, token-authorized SoC isolation architecture."""

from .errors import (
    ConfigurationError,
    ConstructionError,
    MatrixTamperError,
    ParameterError,
    ProvisioningError,
    SimulationFault,
    TrustTokenError,
)

__all__ = [
    "ConfigurationError",
    "ConstructionError",
    "MatrixTamperError",
    "ParameterError",
    "ProvisioningError",
    "SimulationFault",
    "TrustTokenError",
]

__version__ = "0.1.0"
