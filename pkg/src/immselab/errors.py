"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all errors raised by immselab."""


class DomainError(LabError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class IntervalError(DomainError):
    """An SNR (or SNR increment) falls outside the admissible interval.

    The admissible closed interval is available as ``interval``.
    """

    def __init__(self, message, interval):
        super().__init__(f"{message}; admissible interval is [{interval[0]:.12g}, {interval[1]:.12g}]")
        self.interval = interval


class DegeneratePairError(DomainError):
    """A block-Gaussian pair whose assembled covariance is not positive definite."""


class ConvergenceError(LabError, ArithmeticError):
    """An iterative or adaptive numerical routine did not reach its tolerance."""


class ResourceError(LabError):
    """A request exceeds the desk-scale resource caps."""
