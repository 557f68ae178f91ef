"""Exception hierarchy shared by all modules."""


class PhiMeansError(Exception):
    pass


class DomainError(PhiMeansError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(PhiMeansError, ValueError):
    """Value outside the range a tabulated function can represent."""


class DivergenceError(PhiMeansError):
    """Numerical evidence that a growth constant is infinite."""


class NotDominatedError(PhiMeansError):
    pass


class InvalidPointError(PhiMeansError, ValueError):
    pass


class CutLocusError(PhiMeansError):
    pass


class RegionRequiredError(PhiMeansError, ValueError):
    pass


class ResolutionError(PhiMeansError, ValueError):
    pass


class UnsupportedSpaceError(PhiMeansError):
    pass


class EmptySetError(PhiMeansError, ValueError):
    pass


class NonDifferentiableError(PhiMeansError):
    pass


class InnerSolverError(PhiMeansError):
    pass


class ConfigError(PhiMeansError):
    pass
