"""Exception types shared across the package."""


class ClusterForgeError(Exception):
    """Base class for all package errors."""


class InputError(ClusterForgeError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class InfeasibleError(ClusterForgeError):
    """The instance admits no valid clustering (CLI exit code 3)."""
