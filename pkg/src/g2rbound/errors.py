"""Exception hierarchy; every error raised by the package derives from G2RError."""


class G2RError(Exception):
    pass


class ValidationError(G2RError, ValueError):
    pass


class DomainError(ValidationError):
    """A feature lies outside a labeling function's or hypothesis' domain."""


class ShapeError(ValidationError):
    pass


class ArityError(ValidationError):
    pass


class CapacityError(G2RError):
    """An enumeration would exceed the configured guard."""


class ConsistencyError(ValidationError):
    """Constituent estimates were not computed on matching data."""


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")
