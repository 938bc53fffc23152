"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 1, DataError and
subclasses -> 2, anything else -> 3.
"""


class GidsError(Exception):
    """Base class for all package errors."""


class ConfigError(GidsError):
    """Invalid configuration value, key, or combination."""


class DataError(GidsError):
    """Problem with input data (files, rows, shapes, labels)."""


class IngestionError(DataError):
    """Malformed CSV row or schema mismatch during loading."""


class SchemaError(DataError):
    """Invalid schema definition."""


class SplitError(DataError):
    """Stratified split cannot satisfy its per-class requirements."""


class DimensionError(DataError):
    """Array shape inconsistent with the consuming model or store."""


class UnseenCategoryError(DataError):
    """Category or label string not present in the fitted encoders."""


class TrainingError(GidsError):
    """Numerical failure during training (non-finite values, no data)."""


class LedgerError(GidsError):
    """A run ledger violates an accept/reject or isolation invariant."""


class ReportError(GidsError):
    """Report generation is missing required run artifacts."""
