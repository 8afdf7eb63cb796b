"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FinslerError(Exception):
    """Base class for all package errors."""


class DomainError(FinslerError, ValueError):
    """A primitive was evaluated outside its domain, or a point left the chart."""


class StepUnderflow(FinslerError):
    pass


class RegularityViolation(FinslerError, ValueError):
    """An (alpha, beta) profile was evaluated where it is not regular."""


class NonConvex(FinslerError):
    """The fundamental tensor failed to be positive definite.

    ``witness`` holds the offending tangent point as ``(x, y)``.
    """

    def __init__(self, message: str, witness=None, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.witness = witness
        self.min_eigenvalue = min_eigenvalue


class EngineDisagreement(FinslerError):
    pass


class QuadratureFailure(FinslerError):
    pass


class DimensionError(FinslerError, ValueError):
    pass


class FitDegenerate(FinslerError):
    """The fit is not identifiable; ``lam`` and ``residual`` hold what is."""

    def __init__(self, message: str, lam=None, residual=None):
        super().__init__(message)
        self.lam = lam
        self.residual = residual


class RandersTypeInput(FinslerError, ValueError):
    pass


class ChartTooLarge(FinslerError, ValueError):
    pass


class IntegrationFailure(FinslerError):
    pass


class BoundaryExit(FinslerError):
    """A geodesic left the chart; ``trace`` holds the part computed so far."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class InapplicableSuite(FinslerError, ValueError):
    pass


class InapplicableHypothesis(UserWarning):
    """A probe ran although its hypothesis does not hold on the samples."""


class ParseError(FinslerError, ValueError):
    """Malformed metric spec file. ``where`` names the section/key or line."""

    def __init__(self, message: str, where: str | None = None):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


class ValidationError(FinslerError, ValueError):
    def __init__(self, message: str, cause: Exception | None = None):
        super().__init__(message)
        self.cause = cause
