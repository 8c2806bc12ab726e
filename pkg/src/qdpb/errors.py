"""Exception types shared across the package."""


class QdpbError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(QdpbError, ValueError):
    """An argument, seed, or configuration value violates a documented requirement."""


class ValidationError(QdpbError, ValueError):
    """A constructed object or parsed file fails its structural invariants."""


class StateError(QdpbError, RuntimeError):
    """An operation was called on an object in a state that cannot support it."""
