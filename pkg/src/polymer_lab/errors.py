"""Exception taxonomy shared by all modules."""


class PolymerLabError(Exception):
    """Base class for all package errors."""


class DomainError(PolymerLabError):
    """Arguments outside an operation's supported domain."""


class ResourceLimitError(PolymerLabError):
    """A grid or state space would exceed the configured memory budget."""


class NonConvergenceError(PolymerLabError):
    """An iterative computation cannot certify the requested tolerance."""


class RegionError(PolymerLabError):
    """A lattice point or time lies outside a field's region."""


class ConfigError(PolymerLabError):
    """Invalid configuration or constraint violation."""
