"""Shared exception types."""


class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class NumericError(ArithmeticError):
    """A non-finite value appeared during evaluation or differentiation.

    ``node_kind`` names the first offending tape operation when known.
    """

    def __init__(self, message, node_kind=None):
        super().__init__(message)
        self.node_kind = node_kind


class ConvergenceFailure(RuntimeError):
    """An iterative solver hit its iteration cap above tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class SchemaError(ValueError):
    """A data file does not match its expected CSV schema."""
