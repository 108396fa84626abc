"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument is outside the domain of the operation."""


class UnitMismatchError(ValueError):
    """Powers referenced to different bandwidths were combined."""


class ConfigError(ValueError):
    """A scenario file is malformed or fails validation."""

    def __init__(self, message, field=None, line=None):
        self.message = message
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)


class PairingError(ValueError):
    """Two runs cannot be compared as a paired experiment."""

    def __init__(self, message, differing=()):
        self.differing = tuple(differing)
        if self.differing:
            message = f"{message} (differing fields: {', '.join(self.differing)})"
        super().__init__(message)
