"""Exception taxonomy.

Every failure mode of the library raises a subclass of :class:`Recur2dError`,
so callers can catch the package's errors without netting unrelated ones.
"""

from __future__ import annotations


class Recur2dError(Exception):
    """Base class for all errors raised by this package."""


class NotPrimitive(Recur2dError):
    """Transition matrix is reducible or periodic: no power is entrywise positive."""


class RadiusMismatch(Recur2dError):
    """Window operation received incompatible radii or sidedness."""


class InadmissibleWindow(Recur2dError):
    """Letter sequence contains a forbidden transition or unknown symbol."""


class EigenSolverFailure(Recur2dError):
    """Eigenvalue iteration failed to reach the requested tolerance."""


class SingularFundamentalMatrix(Recur2dError):
    """(I - pi + 1 p) is numerically singular; variance series cannot be summed."""


class NonzeroDrift(Recur2dError):
    """Observable has nonzero mean; recurrence-time machinery requires zero drift."""


class SingularCovariance(Recur2dError):
    """Asymptotic covariance matrix is singular; dependent operations refuse it."""


class BudgetExceeded(Recur2dError):
    """Requested computation does not fit the configured budget.

    `required` carries the minimal budget that would suffice, when known.
    """

    def __init__(self, msg: str, required: float | None = None):
        super().__init__(msg)
        self.required = required


class NotMaxEntropy(Recur2dError):
    """Measure is not the maximal-entropy measure of its subshift."""


class EmptySample(Recur2dError):
    """Statistic requested on an empty (or fully censored) sample."""


class DegenerateDesign(Recur2dError):
    """Regression design has no spread in the predictor."""


class ConfigInvalid(Recur2dError):
    """Configuration document failed validation.

    `path` is the dotted location of the offending key.
    """

    def __init__(self, msg: str, path: str = ""):
        super().__init__(f"{path}: {msg}" if path else msg)
        self.path = path
