"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


class DegenerateGeometryError(ValueError):
    pass


class DatasetFormatError(ValueError):
    """Raised for malformed dataset files; ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FormatVersionError(ValueError):
    pass


class CheckpointError(ValueError):
    pass
