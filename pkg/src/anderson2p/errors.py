"""Exception hierarchy shared by all anderson2p modules."""


class Anderson2pError(Exception):
    """Base class for all package errors."""


class InvalidInputError(Anderson2pError, ValueError):
    """Malformed or inconsistent input (bad distribution parameters, ...)."""


class DimensionMismatchError(InvalidInputError):
    """Lattice points of different dimension were combined."""


class OutOfDomainError(Anderson2pError):
    """A lattice site outside the sampled potential domain was requested."""


class ResonantEnergyError(Anderson2pError):
    """The requested energy is too close to the operator spectrum to solve.

    Callers should classify the box as resonant instead of retrying.
    """


class PreconditionError(Anderson2pError):
    """An operation was invoked outside its stated precondition."""


class InfeasibleScheduleError(Anderson2pError):
    """The mass sequence of a scale schedule becomes non-positive.

    ``k`` is the first scale index at which the mass fails to be positive.
    """

    def __init__(self, message: str, k: int | None = None):
        super().__init__(message)
        self.k = k


class PlacementError(Anderson2pError):
    """Boxes satisfying the requested separation cannot be placed in the
    configured region."""


class NumericError(Anderson2pError):
    """Non-finite values were encountered where finite ones are required."""
