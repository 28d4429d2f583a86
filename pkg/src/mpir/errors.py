"""Exception types raised across the package."""


class MPIRError(Exception):
    """Base class for all package errors."""


class ZeroInverse(MPIRError, ZeroDivisionError):
    pass


class FieldTooSmall(MPIRError, ValueError):
    pass


class Inconsistent(MPIRError, ArithmeticError):
    """A linear system over GF(q) has no solution."""


class IndexOutOfRange(MPIRError, IndexError):
    pass


class DomainError(MPIRError, ValueError):
    """A formula was evaluated outside the parameter range where it holds."""


class NonIntegerStageCount(MPIRError, ArithmeticError):
    pass


class IllConditioned(MPIRError, ArithmeticError):
    pass


class LedgerUnderflow(MPIRError, RuntimeError):
    """No side-information producer stage is left for a consumer."""


class PoolUnderflow(MPIRError, RuntimeError):
    """No previously decodable desired symbol is left to pool."""


class DecodeMismatch(MPIRError, RuntimeError):
    pass


class DesiredUndetermined(MPIRError, RuntimeError):
    """The downloaded equations do not pin down every desired symbol."""
