class TcqfiError(Exception):
    """Base class for all package errors."""


class DimensionError(TcqfiError, ValueError):
    """Operand shapes are incompatible or exceed the configured cap."""


class EigensolverError(TcqfiError):
    """The Hermitian eigensolver failed to converge."""


class InvariantViolation(TcqfiError):
    """A state, channel or propagator broke a structural invariant."""


class TruncationError(InvariantViolation):
    """Probability reached the Fock truncation boundary."""


class EigenCrossingError(TcqfiError):
    """Eigenvector matching across a finite-difference stencil is ambiguous."""


class ApproximationBreakdown(InvariantViolation):
    """An analytical approximation produced an unphysical state."""
