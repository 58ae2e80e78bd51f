"""Exception hierarchy shared by all modules."""


class VolterraError(Exception):
    """Base class for errors raised by this package."""


class ParameterError(VolterraError, ValueError):
    """A parameter violates a named constraint.

    ``constraints`` lists the violated constraints so callers (and the CLI)
    can report them individually.
    """

    def __init__(self, constraints, message=None):
        if isinstance(constraints, str):
            constraints = [constraints]
        self.constraints = list(constraints)
        super().__init__(message or "; ".join(self.constraints))


class DomainError(VolterraError, ValueError):
    """Arguments fall outside the simplex an object is defined on."""


class SingularEvaluation(DomainError):
    """Evaluation on a genuinely singular set (e.g. tau' == t with eta > zeta)."""


class NumericalError(VolterraError, ArithmeticError):
    """A numerical procedure failed (factorisation, quadrature, overflow)."""


class ConvergenceError(NumericalError):
    """A refinement loop did not reach its tolerance.

    ``trace`` holds the (mesh, value) pairs computed before giving up.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class VerificationError(VolterraError):
    """A checked invariant was violated."""
