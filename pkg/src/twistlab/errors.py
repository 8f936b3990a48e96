"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: invalid input -> 2, numeric
non-convergence -> 3, resource limits -> 4.
"""


class TwistlabError(Exception):
    exit_code = 1


class InvalidArgument(TwistlabError, ValueError):
    exit_code = 2


class DataCorruptionError(TwistlabError):
    """Generated or cached data violates a mathematical invariant."""

    exit_code = 2


class NumericError(TwistlabError, ArithmeticError):
    """A numerical procedure failed to reach its requested tolerance.

    ``best`` carries the best available estimate, ``achieved`` the
    tolerance actually reached.
    """

    exit_code = 3

    def __init__(self, message, best=None, achieved=None):
        super().__init__(message)
        self.best = best
        self.achieved = achieved


class CalibrationError(NumericError):
    pass


class TableResolutionError(NumericError):
    pass


class ResourceLimitError(TwistlabError):
    exit_code = 4
