"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Shapes or block sizes do not fit together."""


class NotHermitianError(ValueError):
    """A matrix (or map, or kernel) that must be Hermitian is not."""


class NotPSDError(ValueError):
    """A matrix that must be positive semidefinite is not.

    ``eigenvalue`` holds the offending (most negative) eigenvalue.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class PreconditionError(ValueError):
    """Input violates the documented precondition of an operation."""


class InternalConsistencyError(AssertionError):
    """Two independent computations of the same quantity disagree."""


class SdpError(RuntimeError):
    """The SDP solver did not reach an optimal point.

    ``solution`` carries the last iterate and its diagnostics.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class DeadlineExceeded(TimeoutError):
    """A cooperative deadline passed before a long computation finished."""
