"""Exception and warning types raised across the package."""


class QCMError(Exception):
    """Base class for all package errors."""


class DegenerateTriple(QCMError, ValueError):
    """Two of the points of a triangle (numerically) coincide."""


class NonIntegrable(QCMError, ValueError):
    """A density is not locally integrable on the requested region."""


class DecayViolated(QCMError, ValueError):
    """The measure does not satisfy the decay condition needed by the kernel map."""


class ZeroMass(QCMError, ValueError):
    """A region that should carry mass has none.

    Randomized checks do not raise this; they turn it into a failing verdict and
    keep the offending region as the witness.
    """


class AllPairsDegenerate(QCMError, ValueError):
    """Every sampled pair had coincident images (the map looks constant)."""


class InjectivityViolation(QCMError, ValueError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SetTooSmall(QCMError, ValueError):
    """A point cloud has fewer than two points."""


class PrecisionLoss(QCMError, ArithmeticError):
    """An exactly-reduced phase or ceiling exceeded the extended-precision budget."""


class BudgetExceededWarning(RuntimeWarning):
    """Adaptive quadrature stopped at ``max_depth`` before reaching ``rel_tol``."""
