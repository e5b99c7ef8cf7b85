"""Exception hierarchy shared by every module of the package."""


class ExtensionError(Exception):
    """Base class for all errors raised by :mod:`kvextend`."""


class GraphStructureError(ExtensionError, ValueError):
    """Malformed graph data: dimension mismatch, empty graph, conflicting pairs."""


class GraphValidationError(ExtensionError, ValueError):
    """Graph data violates the inequalities required by its kind."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class FacetLimitError(ExtensionError):
    """Exhaustive facet enumeration was asked to go beyond its size caps."""


class OutsidePolytopeError(ExtensionError, ValueError):
    """A query point that must lie in a polytope does not."""


class SolverError(ExtensionError):
    """A convex program could not be solved; ``report`` holds the last state."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConsistencyError(ExtensionError):
    """A provably-zero quantity came out nonzero, which signals solver failure."""


class ConvergenceError(ExtensionError):
    """An iterative method hit its iteration cap."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual
