class PhishDualError(Exception):
    """Base class for errors raised by this package."""


class DataError(PhishDualError, ValueError):
    """Malformed or inconsistent input data (bad rows, labels, shapes)."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class ModelFormatError(PhishDualError, ValueError):
    """A serialized model could not be read back."""
