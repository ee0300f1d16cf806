"""Exception hierarchy shared across the package."""


class SubRicciError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(SubRicciError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(SubRicciError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class DomainError(SubRicciError, ArithmeticError):
    """Evaluation left a function's domain (log of nonpositive, zero division, ...)."""


class JetMismatchError(SubRicciError, ValueError):
    """Operands disagree in dimension or coefficient layout."""


class OrderExhaustedError(SubRicciError):
    """More derivatives were requested than the configured jet order supports."""


class ContactError(SubRicciError):
    """The frame does not span a contact distribution at some point."""

    def __init__(self, message: str, point=None):
        super().__init__(message if point is None else f"{message} at {[float(x) for x in point]}")
        self.point = point


class IntegrationError(SubRicciError):
    """ODE integration failed (step underflow, blow-up, singular transport)."""


class ConjugatePointError(SubRicciError):
    """A Riccati solution lost invertibility inside the interval."""

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class ConfigError(SubRicciError):
    """Malformed or missing model / run configuration."""
