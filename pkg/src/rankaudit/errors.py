"""Exception hierarchy shared across the package.

Every error raised by rankaudit derives from :class:`AuditError` so callers
can catch library failures without masking genuine bugs.  The CLI maps these
classes onto process exit codes.
"""

from __future__ import annotations


class AuditError(Exception):
    """Base class for all rankaudit errors."""


class InputError(AuditError, ValueError):
    """Rejected input: non-finite scores, bad files, dimension mismatches."""


class ConfigurationError(AuditError):
    """Incompatible options, e.g. pooling pair sets with mixed variants."""


class UndefinedMetricError(AuditError):
    """A statistic was requested on data where it is undefined (empty sets)."""


class InferenceUndefinedError(AuditError):
    """Uncertainty quantification failed, e.g. every bootstrap trial was empty."""


class InfeasibleWorldError(AuditError):
    """Synthetic world parameters admit no calibration-consistent mixture."""


class UnseenEntityError(AuditError):
    """A user or item outside the training index was scored."""


class InvariantViolationError(AuditError):
    """An internal consistency check failed; indicates a bug, not bad data."""
