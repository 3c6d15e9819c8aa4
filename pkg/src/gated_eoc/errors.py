"""Exception hierarchy shared by all modules."""


class GatedEOCError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(GatedEOCError, ValueError):
    """Invalid parameters or an inconsistent configuration."""


class ContractError(GatedEOCError, ValueError):
    """An operation was called outside its precondition (shapes, s_c != 0, ...)."""


class NumericalBlowupError(GatedEOCError, FloatingPointError):
    """A trajectory produced NaN or Inf."""

    def __init__(self, message, step=None, seed=None):
        super().__init__(message)
        self.step = step
        self.seed = seed


class BracketError(GatedEOCError, ValueError):
    """The Lyapunov exponent does not change sign across the bracket."""

    def __init__(self, message, lambda_lo=None, lambda_hi=None):
        super().__init__(message)
        self.lambda_lo = lambda_lo
        self.lambda_hi = lambda_hi


class PoleError(GatedEOCError, ZeroDivisionError):
    """Boundary sum evaluated at z equal to a diagonal entry of M."""


class DomainError(GatedEOCError, ValueError):
    """Diagonal triple outside the region where the critical gain is defined."""


class SingularSystemError(GatedEOCError, ValueError):
    """Normal equations are singular; use a positive ridge strength."""


class QuadratureError(GatedEOCError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
