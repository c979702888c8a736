"""Exception types shared across the simulator."""


class TrustTokenError(Exception):
    """Base class for all simulator errors."""


class ParameterError(TrustTokenError):
    """A value violates an operation precondition or a type invariant."""


class ConstructionError(TrustTokenError):
    """A system model could not be built (bad matrices, duplicate users, ...)."""


class ConfigurationError(TrustTokenError):
    """Bad topology, scenario config, or wiring (double-wrap, dangling map)."""


class ProvisioningError(TrustTokenError):
    """Token provisioning failed (empty IP list, duplicate objects)."""


class MatrixTamperError(TrustTokenError):
    """An actor without modify rights attempted to change an access matrix."""


class SimulationFault(TrustTokenError):
    """Internal consistency violation, e.g. delivering a mismatched outcome."""
