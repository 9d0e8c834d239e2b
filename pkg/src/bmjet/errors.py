"""Exception hierarchy shared by every bmjet module."""


class BMJetError(Exception):
    """Base class for all package errors."""


class ExpressionError(BMJetError, ValueError):
    """Raised for malformed or unbound scalar expressions."""


class ParseError(ExpressionError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.message = message
        self.offset = offset


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at offset {offset}")
        self.name = name
        self.offset = offset


class DomainError(BMJetError, ValueError):
    """A value lies outside the region where a formula is defined."""


class StencilError(DomainError):
    """A finite-difference stencil could not be kept inside the domain."""


class ConfigError(BMJetError, ValueError):
    """Invalid run configuration."""
