"""Exception types raised by psmet."""


class PsmetError(Exception):
    """Base class for all psmet errors."""


class InvalidArgumentError(PsmetError, ValueError):
    pass


class UnsupportedOperationError(PsmetError):
    pass


class NumericalError(PsmetError, ArithmeticError):
    """A computed quantity violated an invariant beyond roundoff."""


class DegenerateBranchError(NumericalError):
    """A postselection branch has (numerically) zero probability."""


class SingularLimitError(NumericalError):
    """Classical Fisher information diverges at a vanishing probability."""


class OrthogonalPostselectionError(NumericalError):
    pass


class DivergentCavityError(NumericalError):
    pass


class SingularApproximationError(NumericalError):
    pass


class TruncationOverflowError(NumericalError):
    pass


class StepSizeError(NumericalError):
    """Finite-difference estimates at h and h/2 disagree."""
