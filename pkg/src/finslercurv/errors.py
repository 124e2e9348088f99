"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FinslerError(Exception):
    """Base class for all engine errors."""


# diffcore
class OrderTooHigh(FinslerError):
    pass


class SlitViolation(FinslerError):
    """Tangent vector too close to the zero section."""


class NonFinite(FinslerError):
    pass


# metrics
class DomainError(FinslerError):
    pass


class NotPositiveDefinite(FinslerError):
    def __init__(self, eigenvalue: float, x, y):
        self.eigenvalue = float(eigenvalue)
        self.x = [float(v) for v in x]
        self.y = [float(v) for v in y]
        super().__init__(
            f"fundamental tensor not positive definite: min eigenvalue "
            f"{self.eigenvalue:.3e} at x={self.x}, y={self.y}"
        )


# curvature
class DegenerateFlag(FinslerError):
    pass


# volume
class IntegrationBudgetExceeded(FinslerError):
    pass


class WarpBoundViolated(FinslerError):
    pass


# geodesics
class BlowUp(FinslerError):
    pass


# warped
class NonRiemannianBase(FinslerError):
    pass


class NonpositiveWarp(FinslerError):
    pass


# config / cli
class ParseError(FinslerError):
    """One or more located problems in a config or expression.

    ``errors`` is a list of ``(line, column, message)`` triples (1-based).
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [(None, None, errors)]
        self.errors = list(errors)
        super().__init__("; ".join(_fmt(e) for e in self.errors))


class UnknownSymbol(ParseError):
    pass


class DimensionMismatch(ParseError):
    pass


def _fmt(err) -> str:
    line, col, msg = err
    if line is None:
        return msg
    return f"line {line}, column {col}: {msg}"
