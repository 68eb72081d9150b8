"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input violates a structural invariant (shape, Hermiticity, unitarity)."""


class DomainError(ValueError):
    """Argument lies outside the range where an operation is defined."""


class NumericalError(ArithmeticError):
    """A computation hit a numerically singular configuration."""


class SpecParseError(ValueError):
    """Malformed ensemble description or coefficient file."""
