"""Exception types raised across the toolkit."""


class BoundaryKitError(Exception):
    pass


class ShapeError(BoundaryKitError, ValueError):
    """Grid dimensions do not agree."""


class FormatError(BoundaryKitError, ValueError):
    """A file on disk does not follow the expected layout."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(BoundaryKitError, ValueError):
    """Invalid parameter value or configuration document."""


class DomainError(BoundaryKitError, ValueError):
    """Input values fall outside an operation's domain."""


class EvaluationError(BoundaryKitError, ValueError):
    """Metric undefined for the given data, e.g. no class has support."""
