"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2,
InvariantViolation -> 3, ResourceLimitExceeded -> 4.
"""


class ConfigError(Exception):
    """Bad configuration, schema violation, or malformed input file."""


class SchemaError(ConfigError):
    """File schema violation; the message carries the offending path."""


class InvariantViolation(Exception):
    """A runtime invariant failed (promise violation, consistency check)."""


class PromiseViolation(InvariantViolation):
    """An instance's exact success probability falls outside the promise."""


class ResourceLimitExceeded(Exception):
    """A width or memory limit would be exceeded."""
