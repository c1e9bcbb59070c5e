"""Exception types shared across the solver library."""


class InvalidArgumentError(ValueError):
    """Argument outside an operation's documented domain."""


class ConeViolationError(ValueError):
    """A spectrum required to lie in a Garding cone does not."""

    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu


class InadmissiblePointError(ValueError):
    """A Hessian evaluation point left the admissible cone.

    Carries the offending spectrum so solvers can damp their steps.
    """

    def __init__(self, message, mu=None):
        super().__init__(message)
        self.mu = mu


class UnsupportedShapeError(ValueError):
    """Domain shape not supported by the requested operation."""


class NumericalError(RuntimeError):
    """A numerical kernel (eigensolver, linear solver) failed."""


class SolverFailureError(RuntimeError):
    """Newton iteration did not converge; carries the residual history."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class GridConstructionError(ValueError):
    """Grid mask violates a stencil-reach invariant."""


class ConstructionFailureError(RuntimeError):
    """A constructive search (e.g. coefficient doubling) exhausted its budget.

    Carries the point at which the construction failed, when known.
    """

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point
