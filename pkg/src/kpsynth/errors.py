"""Exception hierarchy shared across the package."""


class KPError(Exception):
    """Base class for all errors raised by kpsynth."""


class BasisMismatch(KPError, ValueError):
    pass


class ExpansionResidualExceeded(KPError, ArithmeticError):
    """A matrix could not be re-expanded in the generator basis."""


class LogBranchAmbiguous(KPError, ArithmeticError):
    """An eigenvalue sits on the -1 branch cut of the principal logarithm."""


class NotInSpan(KPError, ValueError):
    pass


class DimensionMismatch(KPError, ValueError):
    pass


class DegenerateProbe(KPError, ArithmeticError):
    """Root clusters could not be separated with the chosen probe."""


class RankUnsupported(KPError, NotImplementedError):
    pass


class MissingConjugator(KPError, ValueError):
    pass


class NotInK(KPError, ValueError):
    pass


class TargetNotInK(KPError, ValueError):
    pass


class UnreachableTarget(KPError, ValueError):
    pass


class NoConsistentTheta(KPError, ValueError):
    pass


class TimeOutOfRange(KPError, ValueError):
    pass


class NonUnitaryDrift(KPError, ArithmeticError):
    pass
