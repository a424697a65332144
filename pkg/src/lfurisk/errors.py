"""Exception hierarchy shared by the library and the CLI exit-code mapping."""


class LfuError(Exception):
    """Base class for all package errors."""


class ConfigError(LfuError, ValueError):
    """Invalid run configuration or parameter (CLI exit code 2)."""


class DataError(LfuError, ValueError):
    """Input data violates a precondition (CLI exit code 3)."""


class SchemaError(DataError):
    """Column layout does not match the declared schema."""


class UndefinedMetricError(DataError):
    """A metric is undefined on the given input, e.g. no positive labels."""


class LeakageError(DataError):
    """Passive-evaluation rows were handed to a selection or tuning step."""


class InvariantError(LfuError, RuntimeError):
    """An internal consistency check failed (CLI exit code 4)."""
