"""Exception types raised across the package."""


class AnnotatorError(Exception):
    """Base class for all errors raised by this package."""


class MalformedFileError(AnnotatorError):
    """A binary or text input file does not match its declared layout."""


class CorruptPointError(MalformedFileError):
    """A scan contains a non-finite coordinate or intensity value."""

    def __init__(self, path, index, message=""):
        self.path = str(path)
        self.index = int(index)
        detail = message or "non-finite value"
        super().__init__(f"{self.path}: corrupt point at index {self.index}: {detail}")


class ConfigError(AnnotatorError):
    """Invalid configuration value or unparsable configuration input."""


class UsageError(AnnotatorError):
    """An operation was called with arguments violating its contract."""


class IntegrityError(AnnotatorError):
    """Persistent state (journal, run directory) is inconsistent."""


class EmptyTrainingSetError(AnnotatorError):
    """Training was requested but every row was ignore-labeled."""
