"""Exception types shared across the library."""


class QmuError(Exception):
    """Base class for all library-specific errors."""


class InvalidBase(QmuError, ValueError):
    """Series base outside the open interval (0, 1)."""


class PoleHit(QmuError, ArithmeticError):
    """A denominator q-Pochhammer vanished at a summed index."""


class MaxTermsExceeded(QmuError, ArithmeticError):
    """A series failed to signal convergence within the term cap."""


class NegativeRadicand(QmuError, ArithmeticError):
    """A square root was requested of a negative quantity.

    All radicands in the implemented formulas are non-negative on admissible
    index combinations, so this signals an indexing bug upstream rather than
    a numerical accident.
    """


class WindowTooSmall(QmuError, RuntimeError):
    """A truncation window cannot certify the requested tail mass."""


class SignatureMismatch(QmuError, TypeError):
    """Operator composition or addition with incompatible index signatures."""


class UsageError(QmuError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""
