"""Exception hierarchy.

Input problems derive from :class:`InvalidInput` (a ``ValueError``) so the CLI
can map all of them to exit code 2 with one ``except`` clause.
"""


class InvalidInput(ValueError):
    pass


class VertexMismatch(InvalidInput):
    pass


class UnknownVertex(InvalidInput):
    pass


class DuplicatePoint(InvalidInput):
    pass


class ZeroVector(InvalidInput):
    pass


class QuiverMismatch(InvalidInput):
    pass


class ZeroDims(InvalidInput):
    pass


class BudgetExceeded(InvalidInput):
    pass


class InconsistentSize(InvalidInput):
    pass


class NonMonotoneFlag(InvalidInput):
    pass


class ZeroRank(InvalidInput):
    pass


class ShapeMismatch(InvalidInput):
    pass


class ResidueConditionViolated(InvalidInput):
    pass


class NotPreinjective(InvalidInput):
    pass


class NotConverged(RuntimeError):
    """Raised when a certification step needs a converged solver result."""


class NonConvergence(RuntimeError):
    """Raised (optionally) when no start reached the tolerance.

    The best result found is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
