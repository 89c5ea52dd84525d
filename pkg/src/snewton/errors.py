"""Exception hierarchy.

Usage problems (bad inputs, bad configuration) derive from ``ValueError`` so
they behave like ordinary argument errors; numerical failures derive from
``NumericalError`` and map to exit code 2 in the CLI.
"""


class SNError(Exception):
    """Base class for all package errors."""


class DomainTooSmallError(SNError, ValueError):
    pass


class InsufficientPointsError(SNError, ValueError):
    pass


class GridMismatchError(SNError, ValueError):
    pass


class ExtrapolationError(SNError, ValueError):
    pass


class NumericalError(SNError, ArithmeticError):
    """A computation produced an unusable result."""


class InstabilityError(NumericalError):
    def __init__(self, step, max_abs_u):
        self.step = step
        self.max_abs_u = max_abs_u
        super().__init__(
            f"non-finite wave function after step {step} (max|u| before failure = {max_abs_u:.3e}); "
            "reduce dt_factor or dr"
        )


class NoInteriorPeakError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class ResolutionError(NumericalError):
    pass


class DomainExceededError(NumericalError):
    pass


class InconclusiveError(NumericalError):
    pass


class EvolutionCancelled(SNError):
    """Raised when the cooperative cancellation flag is set during ``evolve``."""


class OutputError(SNError, OSError):
    """Writing a result file failed; the message names the path and cause."""
