"""Exception hierarchy shared across the toolkit."""


class RebarError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(RebarError, ValueError):
    pass


class InvalidFacetCount(RebarError, ValueError):
    pass


class UnboundedError(RebarError):
    """An LP that was expected to be bounded turned out not to be."""


class ParseError(RebarError):
    pass


class SchemaError(RebarError):
    pass


class NumericalError(RebarError):
    """The simplex lost numerical control (singular basis, NaNs, ...)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ResourceExhausted(RebarError):
    """A node, time, grid or enumeration budget was exceeded."""


class EmptyTarget(RebarError):
    pass


class ModelError(RebarError, ValueError):
    """The optimization model failed validation before solve."""
