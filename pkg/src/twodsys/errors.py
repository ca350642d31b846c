"""Exception hierarchy shared by all modules."""


class TwoDSysError(Exception):
    """Base class for errors raised by this package."""


class InvalidParameterError(TwoDSysError, ValueError):
    """Kernel or system parameters are non-finite or violate constraints."""


class InvalidInputError(TwoDSysError, ValueError):
    """Input data (times, values, CSV rows) is malformed."""


class ConfigurationError(TwoDSysError, ValueError):
    """Settings (priors, simulation step, budgets) are inconsistent."""


class DegenerateSystemError(InvalidParameterError):
    """The linear system produces a trivial (identically zero) covariance."""


class InsufficientDataError(InvalidInputError):
    """Not enough samples for the requested estimate."""


class NumericalError(TwoDSysError, ArithmeticError):
    """Base class for numerical failures."""


class NumericalConditioningError(NumericalError):
    """Cholesky factorisation failed at every jitter level tried.

    Attributes
    ----------
    jitters : list of float
        Absolute diagonal increments that were attempted, in order.
    """

    def __init__(self, message, jitters=()):
        super().__init__(message)
        self.jitters = list(jitters)


class NumericalFailureError(NumericalError):
    """An estimate could not be formed (e.g. every likelihood underflowed)."""


class FitError(NumericalError):
    """No optimiser restart produced a usable optimum.

    Attributes
    ----------
    traces : list
        Per-restart optimiser traces, for diagnosis.
    """

    def __init__(self, message, traces=()):
        super().__init__(message)
        self.traces = list(traces)
