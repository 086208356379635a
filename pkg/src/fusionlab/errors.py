"""Shared exception types."""


class RegistryConflictError(ValueError):
    """Two states claim the same spatial path label."""


class ContractViolationError(RuntimeError):
    """An operation was applied to a state that violates its precondition."""


class ValidationError(RuntimeError):
    """An internal consistency check failed (norm drift, bad distribution, ...)."""


class ConfigError(ValueError):
    """Bad configuration key or value."""
