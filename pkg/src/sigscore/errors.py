"""Exception types shared across the library and mapped to CLI exit codes."""


class SigscoreError(Exception):
    """Base class for library errors."""


class IngestionError(SigscoreError):
    """Raised when a data bundle cannot be loaded or fails validation (exit code 2)."""


class ConfigError(SigscoreError):
    """Raised for invalid run configuration (exit code 3)."""


class NumericalInstabilityError(SigscoreError):
    """Raised when a PDE sweep encounters a non-finite coefficient (exit code 4).

    Attributes
    ----------
    cell : tuple or None
        Grid location (p, q) of the first offending coefficient.
    entry : tuple or None
        Gram entry (r, s) being computed when the failure happened, if known.
    """

    def __init__(self, message, cell=None, entry=None):
        super().__init__(message)
        self.cell = cell
        self.entry = entry
