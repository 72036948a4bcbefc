"""Exception hierarchy for the dsbm_ns package."""


class DsbmError(Exception):
    """Base class for all package-specific errors."""


class MatrixFormatError(DsbmError, ValueError):
    """Malformed matrix input (ragged rows, negative entries, bad probabilities)."""


class NoSupportError(DsbmError):
    """The matrix has no positive diagonal; carries the Frobenius-Koenig witness.

    Signals an atom of the limiting spectral measure at the origin, so the
    density machinery does not apply.
    """

    def __init__(self, witness):
        self.witness = witness
        super().__init__(
            f"matrix has no support: all-zero block rows={witness.rows} cols={witness.cols}"
        )


class NotIrreducibleError(DsbmError):
    """The zero pattern is not strongly connected."""


class NotStronglyConnectedError(DsbmError):
    """The block relation graph is not strongly connected."""


class LabelNotPresentError(DsbmError, ValueError):
    """A traversal label was requested that the edge does not carry."""


class TooLargeError(DsbmError):
    """Problem size exceeds the desk-scale cap of an exact or dense routine."""


class NonConvergenceError(DsbmError):
    """An iterative solver failed to reach its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class TauOutOfRangeError(DsbmError):
    """tau outside (0, rho(S)), where the eta=0 solution does not exist."""


class SingularKernelError(DsbmError):
    """The density linear system is numerically singular (outside the valid bulk)."""


class QuadratureFailureError(DsbmError):
    """The eta-integral could not be evaluated to the requested accuracy."""


class DomainViolationError(DsbmError):
    """A vector lies outside the domain of the variational functional."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"domain violated at component {index}: x must satisfy tau*x < S^t x")


class NegativeArgumentError(DsbmError):
    """1 - v*Sw came out nonpositive, flagging a solver failure."""


class ZeroVarianceError(DsbmError):
    """All variances vanish (p identically 0 or 1); the rescaled model is degenerate."""


class EigFailureError(DsbmError):
    """Dense eigensolver failed or returned an inconsistent spectrum."""
